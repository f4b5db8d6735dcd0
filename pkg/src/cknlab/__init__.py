"""Numerical laboratory for block-radial Hardy and CKN-type inequalities."""

__version__ = "0.1.0"
