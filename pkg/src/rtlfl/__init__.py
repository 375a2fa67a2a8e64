"""Fault localization for RTL designs: blockization, backward slicing and a tool-driven reasoning loop."""

__version__ = "0.1.0"
