"""Exact simulation and synthesis of heralded high-dimensional photonic gates."""

__version__ = "0.1.0"
