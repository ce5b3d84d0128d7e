"""Simulation toolkit for two-atom EPR and Bell experiments with addressed pulse control."""

__version__ = "0.1.0"
