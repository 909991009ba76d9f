"""Bit-pipe decomposition workbench for the peak-constrained Gaussian
intensity channel: exact binarization, achievable-rate calculators,
capacity baselines, and polar-coded Monte Carlo link simulation."""

__version__ = "0.1.0"
