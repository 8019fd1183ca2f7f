"""Simulation and exact-verification toolkit for clique-component graph
dynamics, their shared Ewens/GEM equilibrium structure, and the
grapheme-valued Wright-Fisher diffusion they approach for large sizes."""

__version__ = "0.1.0"
