"""Montage-lie benchmark construction and information-alignment scoring."""

__version__ = "0.1.0"
