"""Crest geometry, scattering maps, Highways and diffusing pseudo-orbits for
the pendulum + two-rotor Hamiltonian family."""

from . import kernels
from .model import ModelParams

__version__ = "0.1.0"
__all__ = ["ModelParams", "kernels", "__version__"]
