"""Exact desk-scale toolkit for subspace designs over finite fields."""

__version__ = "0.1.0"
