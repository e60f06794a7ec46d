"""Landau-de Gennes and harmonic-map simulations of nematics in the unit ball."""

__version__ = "0.1.0"
