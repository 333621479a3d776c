"""
Crossing probabilities of critical percolation on random planar
triangulations: exact enumeration, peeling simulators, the 3/2-stable
scaling limit and Boltzmann polygons.
"""

__version__ = "0.1.0"
