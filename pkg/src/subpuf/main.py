"""Main entry point for subpuf."""

from subpuf.cli.app import app


def main():
    """Run the subpuf command line."""
    app()


if __name__ == "__main__":
    main()
