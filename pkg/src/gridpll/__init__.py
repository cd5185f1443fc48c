"""Passivity-based phase-locked loops for grid synchronisation."""

__version__ = "0.1.0"
