"""Computable general equilibrium engine for water-market analysis."""

__version__ = "0.1.0"
