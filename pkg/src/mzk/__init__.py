"""Pseudo-spectral laboratory for the 2D modified Zakharov-Kuznetsov equation."""

__version__ = "0.1.0"
