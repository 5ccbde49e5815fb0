"""Fully dynamic weighted submodular cover."""

__version__ = "0.1.0"
