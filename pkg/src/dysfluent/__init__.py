"""Interpretable dysfluency analysis over forced phoneme alignment."""

__version__ = "0.1.0"
