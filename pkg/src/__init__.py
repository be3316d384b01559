"""Multi-fidelity scaling lab - dataset budget and composition studies for flow surrogates."""

__version__ = "1.0.0"
