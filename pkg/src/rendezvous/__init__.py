"""Optimal rendezvous control for first-order multi-robot systems."""

__version__ = "0.1.0"
