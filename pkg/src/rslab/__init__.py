"""Desk-scale numerics for moments of Rankin-Selberg central values."""

__version__ = "0.1.0"
