"""Numerical laboratory for delayed loss of stability in slow-fast systems."""

__version__ = "0.1.0"
