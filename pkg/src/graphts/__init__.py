"""Visibility-graph features for biomedical time series classification."""

__version__ = "0.1.0"
