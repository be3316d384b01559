"""Tests for utility functions."""

import logging

from src.utils import (
    PACKAGE_LOGGER,
    add_file_handler,
    format_budget,
    format_duration,
    get_logger,
    load_json,
    load_text,
    save_json,
    save_text,
    setup_logging,
)


class TestFormatDuration:
    """Tests for format_duration function."""

    def test_none(self):
        """Test None input."""
        assert format_duration(None) == "Unknown"

    def test_seconds_only(self):
        """Test duration less than a minute."""
        assert format_duration(45) == "45s"

    def test_minutes_and_seconds(self):
        """Test duration with minutes and seconds."""
        assert format_duration(125) == "2m 5s"

    def test_hours_and_minutes(self):
        """Test duration with hours."""
        assert format_duration(3725) == "1h 2m"

    def test_fractional_seconds(self):
        """Fractions are rounded."""
        assert format_duration(59.6) == "1m 0s"


class TestFormatBudget:
    """Tests for format_budget function."""

    def test_small(self):
        assert format_budget(512.0) == "512"

    def test_thousands(self):
        assert format_budget(12345.0) == "12.3k"

    def test_millions(self):
        assert format_budget(2.5e6) == "2.5M"


class TestFiles:
    """Tests for the JSON and text helpers."""

    def test_json_round_trip(self, tmp_path):
        """Saved JSON loads back and creates parent directories."""
        path = tmp_path / "nested" / "data.json"
        save_json({"b": 1, "a": [1.5, 2]}, path)
        assert load_json(path) == {"a": [1.5, 2], "b": 1}

    def test_json_sorted_keys(self, tmp_path):
        """Key order does not change the bytes."""
        save_json({"b": 1, "a": 2}, tmp_path / "x.json")
        save_json({"a": 2, "b": 1}, tmp_path / "y.json")
        assert (tmp_path / "x.json").read_bytes() == (tmp_path / "y.json").read_bytes()

    def test_missing_files(self, tmp_path):
        """Missing files load as None."""
        assert load_json(tmp_path / "absent.json") is None
        assert load_text(tmp_path / "absent.txt") is None

    def test_text_round_trip(self, tmp_path):
        path = tmp_path / "summary.txt"
        save_text("line\n", path)
        assert load_text(path) == "line\n"


class TestLogging:
    """Tests for logger setup."""

    def test_loggers_under_package(self):
        """Module loggers hang below the package logger."""
        assert get_logger("src.solver.pool").name == "src.solver.pool"
        assert logging.getLogger(PACKAGE_LOGGER).handlers

    def test_setup_is_idempotent(self):
        """Repeated setup does not add console handlers."""
        logger = setup_logging("INFO")
        before = len(logger.handlers)
        setup_logging("DEBUG")
        assert len(logger.handlers) == before

    def test_file_handler(self, tmp_path):
        """The file handler is attached once per log file."""
        logger = logging.getLogger(PACKAGE_LOGGER)
        path = add_file_handler(tmp_path / "logs")
        count = len(logger.handlers)
        assert add_file_handler(tmp_path / "logs") == path
        assert len(logger.handlers) == count
        get_logger("src.tests").info("hello")
        for handler in logger.handlers:
            handler.flush()
        assert "hello" in path.read_text()
        for handler in list(logger.handlers):
            if isinstance(handler, logging.FileHandler) and handler.baseFilename == str(path):
                logger.removeHandler(handler)
                handler.close()
