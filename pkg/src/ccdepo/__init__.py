"""Coherent-control deposition of molecules through a two-colour standing wave."""

__version__ = "0.1.0"
