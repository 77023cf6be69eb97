"""Spectral detection and reduction of multiscale drift-diffusion systems."""

__version__ = "0.1.0"
