"""Free resolvent kernels and their discretization.

Radial grids use the s-wave reduction. For a radial density g,

    (R0(z) g)(r) = int_0^inf k(r, s) g(s) 4 pi s^2 ds,
    k(r, s) = exp(i xi r_>) sin(xi r_<) / (4 pi xi r s),

where xi is the square root of z with Im xi >= 0. Matrix entries are
``int_{cell j} k(r_i, s) 4 pi s^2 ds`` computed by Gauss-Legendre on each
cell, with the diagonal cell split at the kink s = r_i. Densities are
therefore treated as piecewise constant, which is also how the Kato norm is
computed, so the row-sum bound ||R0 V|| <= ||V||_K / 4 pi holds exactly at
the discrete level up to the Gauss error.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from .grids import UNIT_CUBE_COULOMB, CartesianGrid, RadialGrid, gauss_legendre01
from .potential import PotentialSpec

CARTESIAN_DENSE_LIMIT = 4000
POINTS_PER_WAVELENGTH = 10


class ResolutionError(ValueError):
    """The grid does not resolve the oscillation of the kernel."""


class SingularPointError(ValueError):
    pass


def lambda_eps(lam: float, eps: float) -> float:
    """(lam + sqrt(lam^2 + eps^2)) / 2, evaluated without cancellation for lam < 0."""
    lam, eps = float(lam), float(eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    rad = math.hypot(lam, eps)
    if lam >= 0:
        return 0.5 * (lam + rad)
    return 0.5 * eps * eps / (rad - lam)


@dataclass(frozen=True)
class SpectralPoint:
    """z = lam + i*branch*eps with the wavenumber bookkeeping."""

    lam: float
    eps: float = 0.0
    branch: int = 1

    def __post_init__(self):
        if self.branch not in (1, -1):
            raise ValueError("branch must be +1 or -1")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")

    @property
    def lambda_eps(self) -> float:
        return lambda_eps(self.lam, self.eps)

    @property
    def z(self) -> complex:
        return complex(self.lam, self.branch * self.eps)

    @property
    def xi(self) -> complex:
        """Square root of z with Im >= 0 (the + branch keeps Re >= 0)."""
        le = self.lambda_eps
        if le > 0:
            a = math.sqrt(le)
            return complex(self.branch * a, self.eps / (2.0 * a))
        return complex(0.0, math.sqrt(max(-self.lam, 0.0)))

    def conjugate(self) -> "SpectralPoint":
        return SpectralPoint(self.lam, self.eps, -self.branch)

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "eps": self.eps, "branch": self.branch}


def free_kernel(x, y, z: SpectralPoint) -> complex:
    """Pointwise kernel exp(i xi |x-y|) / (4 pi |x-y|)."""
    d = float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))
    if d == 0.0:
        raise SingularPointError("free kernel is singular at x = y; use cell-averaged weights")
    return complex(np.exp(1j * z.xi * d) / (4.0 * math.pi * d))


def free_squared_kernel(d, z: SpectralPoint):
    """Kernel of R0(z)^2 = d/dz R0(z): i exp(i xi d) / (8 pi xi)."""
    if z.lam == 0 and z.eps == 0:
        raise ZeroDivisionError("R0^2 is undefined at z = 0")
    xi = z.xi
    return 1j * np.exp(1j * xi * np.asarray(d)) / (8.0 * math.pi * xi)


# ---------------------------------------------------------------------------
# s-wave kernels (sphere averages, 1/4pi included)
# ---------------------------------------------------------------------------

def _expm1_over(c: complex, x: np.ndarray) -> np.ndarray:
    """expm1(c x) / c with the c -> 0 limit x."""
    if c == 0:
        return x.astype(complex)
    return np.expm1(c * x) / c


def swave_resolvent(r, s, xi: complex) -> np.ndarray:
    r = np.asarray(r, float)
    s = np.asarray(s, float)
    big = np.maximum(r, s)
    small = np.minimum(r, s)
    return np.exp(1j * xi * (big - small)) * _expm1_over(2j * xi, small) / (4.0 * math.pi * r * s)


def swave_resolvent_squared(r, s, xi: complex) -> np.ndarray:
    """Sphere average of i exp(i xi d)/(8 pi xi): (i / 8 pi xi) (1/2rs) int_{|r-s|}^{r+s} d e^{i xi d} dd."""
    r = np.asarray(r, float)
    s = np.asarray(s, float)
    d1 = np.abs(r - s)
    d2 = r + s
    if abs(xi) * float(np.max(d2)) < 0.5:
        # power series of int d e^{i xi d}; closed form cancels badly here
        acc = np.zeros(np.broadcast(d1, d2).shape, dtype=complex)
        term_c = 1.0 + 0j
        for n in range(20):
            acc += term_c * (d2 ** (n + 2) - d1 ** (n + 2)) / (n + 2)
            term_c *= 1j * xi / (n + 1)
        integral = acc
    else:
        def F(d):
            return np.exp(1j * xi * d) * (d / (1j * xi) + 1.0 / xi**2)

        integral = F(d2) - F(d1)
    return 1j / (8.0 * math.pi * xi) * integral / (2.0 * r * s)


def _check_resolution(grid, z: SpectralPoint):
    le = z.lambda_eps
    if le > 0:
        need = 2.0 * math.pi / math.sqrt(le) / POINTS_PER_WAVELENGTH
        if grid.h > need * (1 + 1e-9):
            raise ResolutionError(
                f"grid spacing {grid.h:.4g} exceeds required {need:.4g} for lambda_eps={le:.4g}"
            )


def lambda_cap(grid) -> float:
    """Largest lambda_eps the grid resolves at the points-per-wavelength rule."""
    return (2.0 * math.pi / (POINTS_PER_WAVELENGTH * grid.h)) ** 2


def _swave_matrix(grid: RadialGrid, kernel, order: int = 4, chunk: int = 256) -> np.ndarray:
    """Entries int_{cell j} kernel(r_i, s) 4 pi s^2 ds."""
    r = grid.nodes
    h = grid.h
    x, w = gauss_legendre01(order)
    s = grid.edges[:-1, None] + h * x[None, :]               # (n, order)
    sw = 4.0 * math.pi * s**2 * (h * w)[None, :]
    n = grid.n
    M = np.empty((n, n), dtype=complex)
    for i0 in range(0, n, chunk):
        ri = r[i0:i0 + chunk, None, None]
        M[i0:i0 + chunk] = np.einsum("ijq,jq->ij", kernel(ri, s[None, :, :]), sw)
    # diagonal cell: split at the node
    a = grid.edges[:-1]
    left = a[:, None] + 0.5 * h * x[None, :]
    right = r[:, None] + 0.5 * h * x[None, :]
    wl = 4.0 * math.pi * left**2 * (0.5 * h * w)[None, :]
    wr = 4.0 * math.pi * right**2 * (0.5 * h * w)[None, :]
    diag = np.sum(kernel(r[:, None], left) * wl, axis=1) + np.sum(kernel(r[:, None], right) * wr, axis=1)
    M[np.arange(n), np.arange(n)] = diag
    return M


# ---------------------------------------------------------------------------
# Cartesian assembly (coarse fallback for non-radial inputs)
# ---------------------------------------------------------------------------

def _cartesian_distances(grid: CartesianGrid) -> np.ndarray:
    if grid.size > CARTESIAN_DENSE_LIMIT:
        raise MemoryError(f"dense Cartesian assembly capped at {CARTESIAN_DENSE_LIMIT} nodes")
    P = grid.points
    return np.linalg.norm(P[:, None, :] - P[None, :, :], axis=-1)


def _cartesian_matrix(grid: CartesianGrid, offdiag, diag_value) -> np.ndarray:
    D = _cartesian_distances(grid)
    np.fill_diagonal(D, 1.0)
    M = offdiag(D) * grid.h**3
    np.fill_diagonal(M, diag_value)
    return M


# ---------------------------------------------------------------------------
# KernelOperator
# ---------------------------------------------------------------------------

NORM_TAGS = ("sup-to-sup", "L1-to-L1", "L1-to-sup")


@dataclass
class KernelOperator:
    """Discretized integral operator acting on nodal values.

    ``entries[i, j]`` is the kernel integrated against cell j, so
    ``entries @ f`` applies the operator and ``entries / weights`` recovers
    the (cell-averaged) kernel.
    """

    entries: np.ndarray
    weights: np.ndarray
    norm_tag: str = "sup-to-sup"
    point: SpectralPoint | None = None
    grid: RadialGrid | CartesianGrid | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.norm_tag not in NORM_TAGS:
            raise ValueError(f"norm_tag must be one of {NORM_TAGS}")
        self.entries.setflags(write=False)

    @property
    def shape(self):
        return self.entries.shape

    def kernel(self) -> np.ndarray:
        return self.entries / self.weights[None, :]

    def opnorm_linf(self) -> float:
        return float(np.max(np.sum(np.abs(self.entries), axis=1)))

    def opnorm_l1(self) -> float:
        col = np.sum(self.weights[:, None] * np.abs(self.entries), axis=0)
        return float(np.max(col / self.weights))

    def opnorm_l1_linf(self) -> float:
        return float(np.max(np.abs(self.kernel())))

    def norm(self) -> float:
        return {"sup-to-sup": self.opnorm_linf, "L1-to-L1": self.opnorm_l1,
                "L1-to-sup": self.opnorm_l1_linf}[self.norm_tag]()

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.entries @ f

    def with_entries(self, entries: np.ndarray, norm_tag: str | None = None) -> "KernelOperator":
        return KernelOperator(np.array(entries), self.weights, norm_tag or self.norm_tag, self.point, self.grid)

    def save(self, path: str | Path) -> None:
        """Row-major little-endian complex128 dump plus a JSON sidecar."""
        path = Path(path)
        np.ascontiguousarray(self.entries, dtype="<c16").tofile(path)
        side = {
            "shape": list(self.entries.shape),
            "dtype": "complex128-le (re, im) pairs, row-major",
            "norm_tag": self.norm_tag,
            "spectral_point": self.point.to_dict() if self.point else None,
            "grid": self.grid.describe() if self.grid is not None else None,
            "weights": self.weights.tolist(),
        }
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(side, indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "KernelOperator":
        path = Path(path)
        side = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        entries = np.fromfile(path, dtype="<c16").reshape(side["shape"])
        sp = side["spectral_point"]
        point = SpectralPoint(sp["lambda"], sp["eps"], sp["branch"]) if sp else None
        g = side["grid"]
        grid = None
        if g and g["type"] == "radial":
            grid = RadialGrid(g["r_max"], g["n"])
        elif g:
            grid = CartesianGrid(g["half_width"], g["count"])
        return cls(entries, np.asarray(side["weights"]), side["norm_tag"], point, grid)


def _potential_values(grid, V) -> np.ndarray:
    if isinstance(V, PotentialSpec):
        return V.sample(grid)
    return np.asarray(V, dtype=float)


def assemble_R0(grid: RadialGrid | CartesianGrid, z: SpectralPoint) -> KernelOperator:
    _check_resolution(grid, z)
    xi = z.xi
    if isinstance(grid, RadialGrid):
        M = _swave_matrix(grid, lambda r, s: swave_resolvent(r, s, xi))
    else:
        h = grid.h
        M = _cartesian_matrix(
            grid,
            lambda d: np.exp(1j * xi * d) / (4.0 * math.pi * d),
            (UNIT_CUBE_COULOMB * h**2 + 1j * xi * h**3) / (4.0 * math.pi),
        )
    return KernelOperator(M, grid.weights, "L1-to-sup", z, grid)


def assemble_R0V(grid, V, z: SpectralPoint, R0: KernelOperator | None = None) -> KernelOperator:
    R0 = R0 or assemble_R0(grid, z)
    v = _potential_values(grid, V)
    return KernelOperator(R0.entries * v[None, :], grid.weights, "sup-to-sup", z, grid)


def assemble_VR0(grid, V, z: SpectralPoint, R0: KernelOperator | None = None) -> KernelOperator:
    R0 = R0 or assemble_R0(grid, z)
    v = _potential_values(grid, V)
    return KernelOperator(v[:, None] * R0.entries, grid.weights, "L1-to-L1", z, grid)


def assemble_R0_squared(grid: RadialGrid | CartesianGrid, z: SpectralPoint) -> KernelOperator:
    if z.lam == 0 and z.eps == 0:
        raise ZeroDivisionError("R0^2 is undefined at z = 0")
    _check_resolution(grid, z)
    xi = z.xi
    if isinstance(grid, RadialGrid):
        M = _swave_matrix(grid, lambda r, s: swave_resolvent_squared(r, s, xi))
    else:
        M = _cartesian_matrix(grid, lambda d: free_squared_kernel(d, z), free_squared_kernel(0.0, z) * grid.h**3)
    return KernelOperator(M, grid.weights, "L1-to-sup", z, grid)


def spectral_measure_free(grid: RadialGrid | CartesianGrid, lam: float, eps: float) -> KernelOperator:
    """R0(lam + i eps) - R0(lam - i eps); kernel (i/2pi) sin(a d) e^{-b d} / d."""
    zp = SpectralPoint(lam, eps, 1)
    _check_resolution(grid, zp)
    le = zp.lambda_eps
    if le == 0.0:
        M = np.zeros((grid.size, grid.size), dtype=complex)
    elif isinstance(grid, RadialGrid):
        xp, xm = zp.xi, zp.conjugate().xi
        M = _swave_matrix(grid, lambda r, s: swave_resolvent(r, s, xp) - swave_resolvent(r, s, xm))
    else:
        a = math.sqrt(le)
        b = eps / (2.0 * a)
        M = _cartesian_matrix(
            grid,
            lambda d: 1j / (2 * math.pi) * np.sin(a * d) * np.exp(-b * d) / d,
            1j * a / (2 * math.pi) * grid.h**3,
        )
    return KernelOperator(M, grid.weights, "L1-to-sup", zp, grid)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

@dataclass
class NegativeAxisFit:
    lams: np.ndarray
    norms: np.ndarray
    delta: float
    c_delta: float
    m0: float | None


def negative_axis_diagnostic(grid, V, lams) -> NegativeAxisFit:
    """||R0(lam) V||_{sup} on lam < 0 and a nonnegative fit delta + C / sqrt|lam|."""
    lams = np.sort(np.asarray(lams, float))
    if np.any(lams >= 0):
        raise ValueError("negative_axis_diagnostic needs lam < 0")
    norms = np.array([assemble_R0V(grid, V, SpectralPoint(l)).opnorm_linf() for l in lams])
    A = np.stack([np.ones_like(lams), 1.0 / np.sqrt(-lams)], axis=1)
    (delta, c), _ = optimize.nnls(A, norms)
    below = np.nonzero(norms < 1.0)[0]
    m0 = None
    if len(below):
        # most negative contiguous run ending at the left end of the scan
        run = 0
        while run < len(lams) and norms[run] < 1.0:
            run += 1
        m0 = float(-lams[run - 1]) if run else None
    return NegativeAxisFit(lams, norms, float(delta), float(c), m0)


def weighted_resolvent_diagnostic(grid: RadialGrid, z: SpectralPoint, s: float) -> float:
    """L^2 norm of <x>^{-s} R0(z) <x>^{-s} on the radial subspace."""
    if z.lam <= 0 or s <= 0.5:
        raise ValueError("needs lam > 0 and s > 1/2")
    R0 = assemble_R0(grid, z)
    r = grid.nodes
    wt = (1.0 + r**2) ** (-s / 2.0)
    A = wt[:, None] * R0.entries * wt[None, :]
    sq = np.sqrt(grid.weights)
    B = sq[:, None] * A / sq[None, :]
    return float(np.linalg.norm(B, 2))
