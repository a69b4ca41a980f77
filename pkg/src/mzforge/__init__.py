"""Exact Marcinkiewicz-Zygmund designs, tight frames and quadrature rules."""
__version__ = "0.1.0"
