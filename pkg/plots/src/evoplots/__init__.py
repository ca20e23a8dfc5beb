"""Batch chart rendering for exported experiment CSVs."""

__version__ = "0.1.0"
