"""Numerical laboratory for Laplace and Mellin transforms of powers of zeta on the critical line."""

__version__ = "0.1.0"
