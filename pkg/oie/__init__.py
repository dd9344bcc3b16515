"""Optimal information and effort (OIE) model of muscle cocontraction."""

__version__ = "0.3.0"
