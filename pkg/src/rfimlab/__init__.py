"""Simulation and exact-verification tools for the 3D random-field Ising
model and its FK cluster representation."""

__version__ = "0.1.0"
