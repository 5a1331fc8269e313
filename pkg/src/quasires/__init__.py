"""Fourier-Bessel laboratory for a penetrable disk."""
__version__ = "0.1.0"
