"""Simulation of entanglement-enhanced NMR magnetometry on spin-star molecules."""

from .system import SpinStarSystem, tmp, tms

__all__ = ["SpinStarSystem", "tms", "tmp"]
__version__ = "0.1.0"
