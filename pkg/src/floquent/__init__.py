"""Entanglement spectra, entropy and real-space topological invariants of
periodically driven free-fermion lattice models."""

__version__ = "0.1.0"
