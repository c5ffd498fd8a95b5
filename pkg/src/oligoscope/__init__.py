"""Finite-window workbench for automorphism groups of countably categorical structures."""

__version__ = "0.1.0"
