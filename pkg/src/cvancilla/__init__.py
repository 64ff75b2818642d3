"""Continuous-variable simulation of heralded cubic phase states and Fock-ancilla Gaussian circuits."""

__version__ = "0.1.0"
