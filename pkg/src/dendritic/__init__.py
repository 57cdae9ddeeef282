"""Lumped simulator for electropolymerized dendrite networks sharing one electrolyte."""

__version__ = "0.1.0"
