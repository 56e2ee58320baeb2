"""Planar central configurations: spectra of the mass-distance matrix,
Williams' identities for five bodies, geometric obstructions and solvers."""

from .core import CentralConfiguration, MassVector, PlanarConfiguration, normalize

__all__ = ["CentralConfiguration", "MassVector", "PlanarConfiguration", "normalize"]
__version__ = "0.1.0"
