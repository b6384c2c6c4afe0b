"""Kato-class potentials, resolvent bounds, heat semigroups and dispersive decay for 3D Schrodinger operators."""
from __future__ import annotations

__version__ = "0.1.0"
