"""Periodic Navier-Stokes spectral toolkit and Bernoulli blow-up laboratory."""
__version__ = "0.1.0"
