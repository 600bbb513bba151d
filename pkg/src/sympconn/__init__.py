"""Numerical toolkit for symplectic connections on surfaces."""
__version__ = "0.1.0"
