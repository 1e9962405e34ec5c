"""Narrative-driven data exploration engine."""

__version__ = "0.1.0"
