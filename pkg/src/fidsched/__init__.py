"""Fidelity-aware scheduling of quantum circuits across a heterogeneous fleet."""

__version__ = "0.1.0"
