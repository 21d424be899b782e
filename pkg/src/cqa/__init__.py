"""Exact-diagonalization toolkit for constrained quantum annealing."""

__version__ = "0.1.0"
