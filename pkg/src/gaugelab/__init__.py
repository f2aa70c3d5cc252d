"""Discrete differential forms, gauge fields and their numerical identities."""

__version__ = "0.1.0"
