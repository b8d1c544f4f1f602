"""Finite-blocklength privacy amplification, channel simulation and lossy compression."""

__version__ = "0.1.0"
