"""Statistical randomness tests for PUF responses."""
