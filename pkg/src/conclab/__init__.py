"""Stability-based concentration bounds with exact and Monte Carlo oracles."""

__version__ = "0.1.0"
