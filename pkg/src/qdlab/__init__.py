"""Quantum and classical correlations of two-qubit NMR states."""
__version__ = "0.1.0"
