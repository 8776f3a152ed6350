"""Ergodic sum rates of MMSE receivers in MIMO fading channels."""

__version__ = "0.1.0"
