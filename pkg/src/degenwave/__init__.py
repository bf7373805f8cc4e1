"""Travelling waves of a tumour invasion model with degenerate cross-dependent diffusion"""

__version__ = "0.1.0"
