"""Damper-based deterministic networking: data-plane simulation and admission control."""

__version__ = "0.1.0"
