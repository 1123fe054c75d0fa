"""Symbolic and numerical tools for the integrable hierarchy of CMC surfaces in S^3."""

__version__ = "0.1.0"
