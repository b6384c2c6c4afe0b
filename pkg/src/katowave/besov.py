"""Dyadic frequency partitions and Besov norms built on the discrete spectrum."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grids import RadialGrid
from .potential import PotentialSpec
from .resolvent import POINTS_PER_WAVELENGTH
from .semigroup import DiscreteHamiltonian, assemble_H, sqrt_spectrum


def _smooth_step(x):
    x = np.asarray(x, float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def mother_cutoff(r):
    """Smooth, equal to 1 for r <= 1 and 0 for r >= 2."""
    r = np.asarray(r, float)
    a = _smooth_step(2.0 - r)
    b = _smooth_step(r - 1.0)
    return a / (a + b)


def dyadic_bump(r):
    """mother(r) - mother(2r); supported in [1/2, 2]."""
    r = np.asarray(r, float)
    return mother_cutoff(r) - mother_cutoff(2.0 * r)


@dataclass(frozen=True)
class DyadicPartition:
    j_min: int
    j_max: int

    def __post_init__(self):
        if self.j_min >= self.j_max:
            raise ValueError("j_min must be below j_max")

    @property
    def js(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def block(self, j: int, r) -> np.ndarray:
        return dyadic_bump(np.asarray(r, float) * 2.0**-j)

    def widened_block(self, j: int, r) -> np.ndarray:
        return self.block(j - 1, r) + self.block(j, r) + self.block(j + 1, r)

    def low_block(self, r) -> np.ndarray:
        """1 - sum_{j >= 0} block(j) = mother(2r)."""
        return mother_cutoff(2.0 * np.asarray(r, float))

    def total(self, r) -> np.ndarray:
        return sum(self.block(j, r) for j in self.js)

    def covered_interval(self) -> tuple[float, float]:
        """Where the blocks sum to exactly one."""
        return 2.0**self.j_min, 2.0**self.j_max

    def unity_residual(self, samples: int = 4001) -> float:
        lo, hi = self.covered_interval()
        r = np.geomspace(lo, hi, samples)
        return float(np.max(np.abs(self.total(r) - 1.0)))


def build_partition(j_min: int, j_max: int, verify: bool = True) -> DyadicPartition:
    p = DyadicPartition(int(j_min), int(j_max))
    if verify:
        res = p.unity_residual()
        if res > 1e-12:
            raise ArithmeticError(f"partition of unity residual {res:.3g}")
    return p


def partition_for(H: DiscreteHamiltonian) -> DyadicPartition:
    """Smallest partition whose blocks sum to one on the whole nonnegative discrete spectrum."""
    k = sqrt_spectrum(H)
    k = k[k > 0]
    return build_partition(math.floor(math.log2(k.min())), math.ceil(math.log2(k.max())), verify=False)


@dataclass
class BesovProfile:
    js: np.ndarray
    coefficients: np.ndarray
    which: str
    low: float | None = None
    tail: float = 0.0
    flagged: bool = False

    def norm(self, s: float, q: float = 1.0) -> float:
        if self.low is None:
            c, j = self.coefficients, self.js
        else:
            keep = self.js >= 0
            c, j = self.coefficients[keep], self.js[keep]
        terms = 2.0 ** (s * j) * c
        if self.low is not None:
            terms = np.concatenate([[self.low], terms])
        if math.isinf(q):
            return float(np.max(terms))
        return float(np.sum(terms**q) ** (1.0 / q))


def besov_profile(H: DiscreteHamiltonian, f: np.ndarray, homogeneous: bool = True,
                  partition: DyadicPartition | None = None, which: str | None = None,
                  tail_limit: float = 1e-2) -> BesovProfile:
    """Coefficients ||phi_j(sqrt H) f||_{L1} with the grid's quadrature weights."""
    if partition is None:
        partition = partition_for(H)
    if not homogeneous and partition.j_min > -1:
        partition = DyadicPartition(-1, partition.j_max)
    k = sqrt_spectrum(H)
    c = H.coefficients(f)
    _, U = H.eigen
    js = np.array(list(partition.js))
    blocks = np.stack([partition.block(j, k) for j in js])      # (J, N)
    fields = (U @ (blocks * c[None, :]).T) / H.scale[:, None]   # (N, J)
    coeffs = np.sum(H.weights[:, None] * np.abs(fields), axis=0)
    covered = np.sum(blocks, axis=0)
    rest = (U @ ((1.0 - covered) * c)) / H.scale
    low = None
    if not homogeneous:
        keep = js >= 0
        low_mult = 1.0 - np.sum(blocks[keep], axis=0)
        low = H.l1_norm((U @ (low_mult * c)) / H.scale)
        rest = np.zeros_like(rest)
    fl1 = H.l1_norm(f)
    tail = H.l1_norm(rest) / fl1 if fl1 > 0 else 0.0
    flagged = tail > tail_limit
    if flagged:
        warnings.warn(f"spectral content outside the dyadic range carries {tail:.2%} of ||f||_1",
                      RuntimeWarning, stacklevel=2)
    tag = which or ("free" if not np.any(H.potential) else "perturbed")
    return BesovProfile(js, coeffs, tag, low, float(tail), flagged)


def besov_norm(H: DiscreteHamiltonian, f: np.ndarray, s: float, q: float = 1.0,
               homogeneous: bool = True) -> float:
    return besov_profile(H, f, homogeneous).norm(s, q)


@dataclass
class EquivalenceReport:
    thetas: np.ndarray
    ratios: np.ndarray          # (len(thetas), len(fset))
    c_low: float
    c_high: float
    s: float
    q: float
    homogeneous: bool
    per_theta: list[dict] = field(default_factory=list)

    @property
    def spread(self) -> float:
        return self.c_high / self.c_low


def equivalence_ratio(grid: RadialGrid, V: PotentialSpec, fset: list[np.ndarray], s: float = 1.0,
                      q: float = 1.0, thetas=None, homogeneous: bool = True) -> EquivalenceReport:
    """min and max of ||f||_{B(V_theta)} / ||f||_{B} over the test set and theta scan."""
    if thetas is None:
        thetas = 2.0 ** np.arange(-4, 5)
    thetas = np.asarray(thetas, float)
    H0 = assemble_H(grid, None)
    free = [besov_profile(H0, f, homogeneous).norm(s, q) for f in fset]
    ratios = np.empty((len(thetas), len(fset)))
    per = []
    for a, th in enumerate(thetas):
        H = assemble_H(grid, V.rescaled(th), check=False)
        for b, f in enumerate(fset):
            ratios[a, b] = besov_profile(H, f, homogeneous).norm(s, q) / free[b]
        per.append({"theta": float(th), "c_low": float(ratios[a].min()), "c_high": float(ratios[a].max())})
    return EquivalenceReport(thetas, ratios, float(ratios.min()), float(ratios.max()), s, q, homogeneous, per)


@dataclass
class RescaleCheck:
    k: int
    lhs: float
    rhs: float
    residual: float
    passed: bool
    flagged: bool = False


def _under_resolved(H: DiscreteHamiltonian, profile: BesovProfile, s: float, share: float) -> bool:
    """Norm share in blocks the grid cannot represent faithfully.

    High end: blocks starting above the 10-points-per-wavelength frequency.
    Low end: blocks ending below four lowest box modes, where the wall
    truncates the datum's tail.
    """
    grid = H.grid
    terms = 2.0 ** (s * profile.js) * profile.coefficients
    total = terms.sum()
    if total == 0:
        return profile.flagged
    high = 2.0 ** (profile.js - 1) >= 2.0 * math.pi / (POINTS_PER_WAVELENGTH * grid.h)
    low = 2.0 ** (profile.js + 1) <= 4.0 * math.pi / grid.r_max
    return bool(profile.flagged or terms[high].sum() > share * total or terms[low].sum() > share * total)


def rescale_check(grid: RadialGrid, V: PotentialSpec | None, f: Callable[[np.ndarray], np.ndarray],
                  s: float, k: int, q: float = 1.0, tol: float = 0.05, share: float = 1e-2) -> RescaleCheck:
    """Compare ||f(2^k .)||_{B(V)} with 2^{k(s-3)} ||f||_{B(V_{2^{-2k}})}.

    ``flagged`` marks data the grid cannot represent: more than ``share`` of
    the norm in blocks above the wavelength rule or down at the box scale.
    """
    lam = 2.0**k
    r = grid.nodes
    V = V if V is not None else PotentialSpec("zero", {})
    HV = assemble_H(grid, V, check=False)
    Hs = assemble_H(grid, V.rescaled(lam**-2), check=False)
    f_lam, f_one = f(lam * r), f(r)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        p_lhs, p_rhs = besov_profile(HV, f_lam), besov_profile(Hs, f_one)
    lhs = p_lhs.norm(s, q)
    rhs = lam ** (s - 3.0) * p_rhs.norm(s, q)
    res = abs(lhs - rhs) / abs(rhs)
    flagged = _under_resolved(HV, p_lhs, s, share) or _under_resolved(Hs, p_rhs, s, share)
    if flagged:
        warnings.warn(f"rescaled datum at k={k} is under-resolved on this grid", RuntimeWarning, stacklevel=2)
    return RescaleCheck(k, lhs, rhs, res, res < tol, flagged)
