"""Semiclassical limits of bosonic states as cylindrical Wigner measures."""

__version__ = "0.1.0"
