"""Decentralized proximal optimization with randomized local coordination."""

__version__ = "0.1.0"
