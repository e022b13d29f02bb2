"""Lagrangian, Frenet-Serret and stream-tube diagnostics for axisymmetric flows."""

__version__ = "0.1.0"

from . import diagnostics, field_core, frenet, lagrange, reconstruct  # noqa: E402,F401
from .errors import AxiflowError  # noqa: E402,F401
