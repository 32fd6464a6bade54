"""Lie series and Lie transforms for near-identity maps and their normal forms."""
from . import algebra, lie
from .kernel import BACKEND, available_backends, set_backend

__all__ = ["algebra", "lie", "BACKEND", "available_backends", "set_backend"]
__version__ = "0.1.0"
