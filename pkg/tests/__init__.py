"""Tests for the multi-fidelity scaling lab."""
