"""Numerical geometry of the space of plane conics."""

__version__ = "0.1.0"
