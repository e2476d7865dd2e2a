"""Finite-resolution dynamics of families of holomorphic and meromorphic maps."""

__version__ = "0.1.0"
