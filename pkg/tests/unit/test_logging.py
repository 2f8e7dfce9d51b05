"""Tests for structured logging configuration."""
import json
import logging

import pytest

from subpuf.core.config import LoggingSettings
from subpuf.core.logging import bind_chip, configure_logging, get_logger

COMPONENT = "subpuf.chip"


@pytest.fixture
def restore_logging():
    yield
    logging.getLogger(COMPONENT).setLevel(logging.NOTSET)
    configure_logging()


def events(err: str):
    return [json.loads(line) for line in err.splitlines() if line.strip()]


class TestComponentLevels:
    """Test suite for per-component log levels."""

    def test_component_more_verbose_than_global(self, capsys, restore_logging):
        """Test a DEBUG component still logs under a WARNING global level."""
        configure_logging(LoggingSettings(level="WARNING", component_levels={COMPONENT: "DEBUG"}))
        get_logger("subpuf.chip.sim").debug("chip detail")
        get_logger("subpuf.metrics.report").info("report detail")

        logged = [e["event"] for e in events(capsys.readouterr().err)]
        assert logged == ["chip detail"]

    def test_component_quieter_than_global(self, capsys, restore_logging):
        """Test an ERROR component drops warnings that other loggers keep."""
        configure_logging(LoggingSettings(level="INFO", component_levels={COMPONENT: "ERROR"}))
        get_logger("subpuf.chip.sim").warning("quiet")
        get_logger("subpuf.stabilize.enroll").info("loud")

        logged = [e["event"] for e in events(capsys.readouterr().err)]
        assert logged == ["loud"]


class TestBoundContext:
    """Test suite for bound logger context."""

    def test_bind_chip(self, capsys, restore_logging):
        """Test chip identity appears on every event."""
        configure_logging(LoggingSettings(level="INFO"))
        bind_chip(get_logger("subpuf.cli.app"), "chip-000003", 3).info("chip generated")

        (event,) = events(capsys.readouterr().err)
        assert event["chip_id"] == "chip-000003"
        assert event["seed"] == 3
        assert event["level"] == "info"
