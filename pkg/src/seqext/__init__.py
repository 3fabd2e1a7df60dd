"""Extending finite point sequences while preserving gap and pair statistics."""

__version__ = "0.1.0"
