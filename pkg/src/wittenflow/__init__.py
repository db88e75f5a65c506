"""Numerical laboratory for entropy formulas of the Witten Laplacian under geometric flows."""

__version__ = "0.1.0"
