"""Proof kernel and process toolkit for linear multirole logic."""

__version__ = "0.1.0"
