"""Targeted Nisan-Wigderson generators, leakage-resilient hardness and logspace derandomization at desk scale."""

__version__ = "0.1.0"
