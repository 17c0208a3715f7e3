"""Polynomial-phase constant-modulus sequence design and radar waveform analysis."""

__version__ = "0.1.0"
