"""Mutual-information estimation for networks with multiplicative (dropout) noise."""

__version__ = "0.1.0"
