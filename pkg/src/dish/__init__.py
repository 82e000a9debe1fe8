"""Availability of cooperation for multi-channel MAC control-information sharing."""

__version__ = "0.1.0"
