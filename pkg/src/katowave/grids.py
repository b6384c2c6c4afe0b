"""Quadrature grids shared by every discretized operator.

The radial grid is cell centred: ``n`` shells of equal thickness ``h`` cover
``[0, r_max]`` and the nodes sit at the shell midpoints. Two weight sets are
kept because two different discretizations live on the same nodes:

* ``weights`` are the exact shell volumes, used by integral operators and by
  every quadrature of a piecewise-constant density;
* ``midpoint_weights`` are ``4 pi r_i^2 h``, the pairing in which the
  finite-difference Hamiltonian on ``u = r f`` is symmetric.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre01(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to ``[0, 1]``."""
    if order not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(order)
        _GL_CACHE[order] = (0.5 * (x + 1.0), 0.5 * w)
    return _GL_CACHE[order]


@dataclass(frozen=True)
class RadialGrid:
    r_max: float
    n: int

    def __post_init__(self):
        if self.r_max <= 0 or self.n < 2:
            raise ValueError("RadialGrid needs r_max > 0 and at least two cells")

    @classmethod
    def with_spacing(cls, r_max: float, h: float) -> "RadialGrid":
        return cls(float(r_max), int(round(r_max / h)))

    @property
    def h(self) -> float:
        return self.r_max / self.n

    @cached_property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, self.r_max, self.n + 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.h

    @cached_property
    def weights(self) -> np.ndarray:
        e = self.edges
        return 4.0 * np.pi / 3.0 * (e[1:] ** 3 - e[:-1] ** 3)

    @cached_property
    def midpoint_weights(self) -> np.ndarray:
        return 4.0 * np.pi * self.nodes**2 * self.h

    @property
    def size(self) -> int:
        return self.n

    def refined(self, factor: int = 2) -> "RadialGrid":
        return RadialGrid(self.r_max, self.n * factor)

    def coarsened(self, factor: int = 2) -> "RadialGrid":
        return RadialGrid(self.r_max, max(2, self.n // factor))

    def sub_points(self, order: int = 4) -> tuple[np.ndarray, np.ndarray]:
        """Gauss points inside every cell, shape ``(n, order)``, with ``dr`` weights."""
        x, w = gauss_legendre01(order)
        s = self.edges[:-1, None] + self.h * x[None, :]
        return s, np.broadcast_to(self.h * w, s.shape)

    def describe(self) -> dict:
        return {"type": "radial", "r_max": self.r_max, "n": self.n, "h": self.h}


@dataclass(frozen=True)
class CartesianGrid:
    half_width: float
    count: int

    def __post_init__(self):
        if self.count < 3 or self.count % 2 == 0:
            raise ValueError("CartesianGrid count must be odd (>= 3) so the origin is a node")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / (self.count - 1)

    @cached_property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.count)

    @cached_property
    def points(self) -> np.ndarray:
        X, Y, Z = np.meshgrid(self.axis, self.axis, self.axis, indexing="ij")
        return np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.count,) * 3

    @property
    def size(self) -> int:
        return self.count**3

    @cached_property
    def weights(self) -> np.ndarray:
        return np.full(self.size, self.h**3)

    @cached_property
    def radii(self) -> np.ndarray:
        return np.linalg.norm(self.points, axis=-1)

    def describe(self) -> dict:
        return {"type": "cartesian", "half_width": self.half_width, "count": self.count, "h": self.h}


def _unit_cube_coulomb() -> float:
    """Integral of ``1/|x|`` over the unit cube centred at the origin."""
    s3 = np.sqrt(3.0)
    # int_{[0,1]^3} dx/|x| = (3/2) ln((s3+1)/(s3-1)) - pi/4
    corner = 1.5 * np.log((s3 + 1.0) / (s3 - 1.0)) - np.pi / 4.0
    # [-1/2,1/2]^3 = 8 copies of [0,1/2]^3, each (1/2)^2 times the unit corner integral
    return 2.0 * corner


UNIT_CUBE_COULOMB = _unit_cube_coulomb()
