"""wsnkit: energy and data chain models for a wireless sensor node."""

__version__ = "0.1.0"
