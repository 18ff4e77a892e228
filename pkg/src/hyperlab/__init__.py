"""Numerical checks of hypercontractive inequalities and their quantum applications."""

__version__ = "0.1.0"
