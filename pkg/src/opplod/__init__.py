"""Opponency-based looming detection on grayscale image sequences."""
from ._backend import name as backend

__version__ = "0.1.0"
