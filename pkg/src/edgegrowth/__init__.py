"""Geometry, exact calculus and Sobolev multiplier norms for spherical principal
series of SO0(n,1), SU(n,1) and Sp(n,1) at the edge of the critical strip."""

__version__ = "0.1.0"
