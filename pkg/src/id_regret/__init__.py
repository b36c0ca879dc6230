"""Predictive KL regret, Dirichlet energies and admissibility for ID location models."""

__version__ = "0.1.0"
