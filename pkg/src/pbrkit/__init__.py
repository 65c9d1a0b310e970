"""Executable overlap no-go theorems for finite ontological models."""

__version__ = "0.1.0"
