"""Negativity spectra of pseudo-random mixed states from simulated random circuits."""

__version__ = "0.1.0"
