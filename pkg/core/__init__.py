"""Numerical core for ordered Banach spaces with a base and Markov chains on them."""

__version__ = "0.1.0"
