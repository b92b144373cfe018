"""Lorentz-violation signatures in Doppler-shifted EIT of a thermal atomic beam."""
from .liouville import BACKENDS, DEFAULT_BACKEND

__version__ = "0.1.0"

__all__ = ["BACKENDS", "DEFAULT_BACKEND", "__version__"]
