"""Dataset composition under a compute budget."""

from .composer import (
    Selection,
    compose_dataset,
    estimate_counts,
    greedy_repair,
    save_selection,
)

__all__ = ["Selection", "compose_dataset", "estimate_counts", "greedy_repair", "save_selection"]
