"""Storage modules: sweep ledger and results files."""

from .repository import Repository
from .results import RESULTS_HEADER, parse_results, read_results, write_results

__all__ = ["Repository", "RESULTS_HEADER", "parse_results", "read_results", "write_results"]
