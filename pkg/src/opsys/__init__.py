"""Numerical tools for operator systems generated by commuting-up-to-phase unitaries."""

__version__ = "0.1.0"
