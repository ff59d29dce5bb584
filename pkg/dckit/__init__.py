"""Numerical toolkit for Denjoy-Carleman ultradifferentiable classes."""

__version__ = "1.0.0"
