"""Exact polar and bipolar computations for robust sets on finite models."""
__version__ = "0.1.0"
