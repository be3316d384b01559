"""Shared utilities for the scaling study."""

import json
import logging
import sys
from datetime import datetime
from pathlib import Path

PACKAGE_LOGGER = "src"

_CONSOLE_FORMAT = "%(asctime)s | %(levelname)-8s | %(message)s"
_FILE_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def setup_logging(level: str = "INFO") -> logging.Logger:
    """Set up the package logger with a console handler."""
    logger = logging.getLogger(PACKAGE_LOGGER)
    logger.setLevel(logging.DEBUG)

    # Avoid duplicate handlers; a repeated call only adjusts the console level
    consoles = [
        h for h in logger.handlers
        if isinstance(h, logging.StreamHandler) and not isinstance(h, logging.FileHandler)
    ]
    if consoles:
        for handler in consoles:
            handler.setLevel(getattr(logging, level.upper()))
        return logger

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(getattr(logging, level.upper()))
    console_handler.setFormatter(logging.Formatter(_CONSOLE_FORMAT, datefmt=_DATE_FORMAT))
    logger.addHandler(console_handler)

    return logger


def add_file_handler(log_dir: Path) -> Path:
    """Attach a DEBUG file handler writing under log_dir."""
    logger = logging.getLogger(PACKAGE_LOGGER)
    log_dir.mkdir(parents=True, exist_ok=True)
    log_path = log_dir / f"study_{datetime.now().strftime('%Y%m%d')}.log"

    for handler in logger.handlers:
        if isinstance(handler, logging.FileHandler) and Path(handler.baseFilename) == log_path:
            return log_path

    file_handler = logging.FileHandler(log_path)
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(logging.Formatter(_FILE_FORMAT, datefmt=_DATE_FORMAT))
    logger.addHandler(file_handler)
    return log_path


def get_logger(name: str = PACKAGE_LOGGER) -> logging.Logger:
    """Get a logger below the configured package logger."""
    if not logging.getLogger(PACKAGE_LOGGER).handlers:
        setup_logging()
    return logging.getLogger(name)


def save_json(data: dict, filepath: Path) -> None:
    """Save data as JSON with sorted keys so equal data gives equal bytes."""
    filepath.parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def load_json(filepath: Path) -> dict | None:
    """Load data from JSON file."""
    if not filepath.exists():
        return None
    with open(filepath) as f:
        return json.load(f)


def save_text(text: str, filepath: Path) -> None:
    """Save text to file."""
    filepath.parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, "w") as f:
        f.write(text)


def load_text(filepath: Path) -> str | None:
    """Load text from file."""
    if not filepath.exists():
        return None
    with open(filepath) as f:
        return f.read()


def format_duration(seconds: float | None) -> str:
    """Format duration in seconds to human-readable string."""
    if seconds is None:
        return "Unknown"

    seconds = int(round(seconds))
    hours, remainder = divmod(seconds, 3600)
    minutes, secs = divmod(remainder, 60)

    if hours > 0:
        return f"{hours}h {minutes}m"
    elif minutes > 0:
        return f"{minutes}m {secs}s"
    else:
        return f"{secs}s"


def format_budget(value: float) -> str:
    """Compact label for a budget in work units, e.g. 12.3k."""
    if value >= 1e6:
        return f"{value / 1e6:.3g}M"
    if value >= 1e3:
        return f"{value / 1e3:.3g}k"
    return f"{value:.3g}"
