"""Robust federated learning with repeated-median outlier detection and subjective-logic reputation."""

__version__ = "0.1.0"
