"""Inversion of I + R0(z)V, resonance scans and perturbed resolvent operators."""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg, optimize

from .potential import PotentialSpec
from .resolvent import (
    KernelOperator,
    SpectralPoint,
    _potential_values,
    assemble_R0,
    assemble_R0_squared,
    lambda_cap,
    lambda_eps,
    spectral_measure_free,
)

DEFAULT_TAU = 1e-6


class NearSingularWarning(RuntimeWarning):
    pass


class ScanTruncatedWarning(UserWarning):
    pass


class ResonanceObstruction(RuntimeError):
    """A sigma_min dip inside the budget range; the inverse is not uniformly bounded."""


@dataclass
class InversionCertificate:
    point: SpectralPoint
    neumann_norm: float
    neumann_applicable: bool
    squared_bound: float
    squared_applicable: bool
    route: str
    sigma_min: float
    sigma_max: float
    condition: float
    inverse_norm: float
    near_singular: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["point"] = self.point.to_dict()
        return d


def _sup_norm(M: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(M), axis=1)))


def _singular_values(A: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Singular values of A as an operator on the weighted l^2 space."""
    sq = np.sqrt(weights)
    return linalg.svdvals(sq[:, None] * A / sq[None, :])


def _identity_plus(R0V: np.ndarray) -> np.ndarray:
    A = R0V.copy()
    A[np.diag_indices_from(A)] += 1.0
    return A


def invert(grid, V, z: SpectralPoint, tau: float = DEFAULT_TAU,
           R0: KernelOperator | None = None) -> tuple[KernelOperator, InversionCertificate]:
    """Dense LU solve of (I + R0 V) X = I with a certificate of which route applies."""
    R0 = R0 or assemble_R0(grid, z)
    v = _potential_values(grid, V)
    T = R0.entries * v[None, :]
    A = _identity_plus(T)
    X = linalg.solve(A, np.eye(len(v), dtype=complex))
    nn = _sup_norm(T)
    sq = _sup_norm(T @ T) if nn > 0 else 0.0
    sv = _singular_values(A, grid.weights)
    smin, smax = float(sv[-1]), float(sv[0])
    cond = smax / smin if smin > 0 else math.inf
    near = cond > 1.0 / tau
    route = "neumann" if nn < 1 else ("squared" if sq < 1 else "fredholm")
    cert = InversionCertificate(z, nn, nn < 1, sq, sq < 1, route, smin, smax, cond, _sup_norm(X), near)
    if near:
        warnings.warn(f"I + R0 V nearly singular at {z} (condition {cond:.3g}); possible resonance",
                      NearSingularWarning, stacklevel=2)
    return KernelOperator(X, grid.weights, "sup-to-sup", z, grid), cert


def neumann_partial_sums(T: np.ndarray, terms: int) -> list[np.ndarray]:
    """Partial sums of sum_k (-T)^k, for convergence-rate checks."""
    out = []
    S = np.eye(T.shape[0], dtype=complex)
    P = np.eye(T.shape[0], dtype=complex)
    out.append(S.copy())
    for _ in range(terms):
        P = -P @ T
        S = S + P
        out.append(S.copy())
    return out


# ---------------------------------------------------------------------------
# resonance scans
# ---------------------------------------------------------------------------

def sigma_min_at(grid, V, lam: float, eps: float = 0.0) -> float:
    z = SpectralPoint(lam, eps)
    T = assemble_R0(grid, z).entries * _potential_values(grid, V)[None, :]
    return float(_singular_values(_identity_plus(T), grid.weights)[-1])


@dataclass
class ResonanceScan:
    lambdas: np.ndarray
    sigma_min: np.ndarray
    condition: np.ndarray
    neumann_norm: np.ndarray
    tau: float
    minima: list[dict] = field(default_factory=list)
    truncated_at: float | None = None

    @property
    def has_dip(self) -> bool:
        return bool(self.minima)

    def rows(self):
        for row in zip(self.lambdas, self.sigma_min, self.condition, self.neumann_norm):
            yield [float(x) for x in row]

    def write_csv(self, path, tag: str = "") -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "sigma_min", "condition", "neumann_norm", "config_hash"])
            for row in self.rows():
                w.writerow([repr(x) for x in row] + [tag])

    def dips_json(self) -> str:
        return json.dumps({"tau": self.tau, "dips": self.minima, "truncated_at": self.truncated_at}, indent=2)


def resonance_scan(grid, V, lambdas, tau: float | None = None, refine: bool = True) -> ResonanceScan:
    """sigma_min(I + R0(lam + i0) V) over a lambda grid, with dips refined by golden section.

    ``tau`` defaults to 1e-3 times the median sigma_min of the scan.
    """
    lams = np.unique(np.concatenate([[0.0], np.asarray(lambdas, float)]))
    if np.any(lams < 0):
        raise ValueError("resonance_scan covers lambda >= 0")
    cap = lambda_cap(grid)
    truncated = None
    if lams[-1] > cap:
        warnings.warn(f"scan truncated at the resolution cap lambda={cap:.4g}", ScanTruncatedWarning, stacklevel=2)
        lams = lams[lams <= cap]
        truncated = cap
    v = _potential_values(grid, V)
    smin, cond, nn = [], [], []
    for lam in lams:
        T = assemble_R0(grid, SpectralPoint(lam)).entries * v[None, :]
        sv = _singular_values(_identity_plus(T), grid.weights)
        smin.append(sv[-1])
        cond.append(sv[0] / sv[-1] if sv[-1] > 0 else math.inf)
        nn.append(_sup_norm(T))
    smin = np.array(smin)
    if tau is None:
        tau = 1e-3 * float(np.median(smin))
    scan = ResonanceScan(lams, smin, np.array(cond), np.array(nn), float(tau), truncated_at=truncated)
    for i in range(len(lams)):
        left = smin[i - 1] if i > 0 else np.inf
        right = smin[i + 1] if i + 1 < len(lams) else np.inf
        if smin[i] > tau or smin[i] > left or smin[i] > right:
            continue
        lam_star, s_star = float(lams[i]), float(smin[i])
        if refine and len(lams) > 1:
            lo = lams[max(i - 1, 0)]
            hi = lams[min(i + 1, len(lams) - 1)]
            res = optimize.minimize_scalar(lambda l: sigma_min_at(grid, v, l), bounds=(lo, hi),
                                           method="bounded", options={"xatol": 1e-6 * max(hi, 1.0)})
            if res.fun < s_star:
                lam_star, s_star = float(res.x), float(res.fun)
        scan.minima.append({"lambda": float(lams[i]), "refined_lambda": lam_star,
                            "sigma": float(smin[i]), "refined_sigma": s_star})
    return scan


def zero_resonance_depth(grid, radius: float = 1.0, g_lo: float = 2.0, g_hi: float = 3.0,
                         tol: float = 1e-6) -> tuple[float, float]:
    """Depth g where I + R0(0) V, V = -g on the ball, first becomes singular.

    At lambda = 0 the matrix is real, so the determinant changes sign as an
    eigenvalue of R0(0)V crosses -1. Returns (g*, sigma_min at g*).
    """
    R0 = assemble_R0(grid, SpectralPoint(0.0)).entries.real
    shape = PotentialSpec("ball-well", {"depth": 1.0, "radius": radius}).sample(grid)

    def sign(g):
        return np.linalg.slogdet(np.eye(grid.size) + g * R0 * shape[None, :])[0]

    s_lo = sign(g_lo)
    if s_lo == sign(g_hi):
        raise ValueError("no sign change of det(I + R0 V) in the depth bracket")
    lo, hi = g_lo, g_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if sign(mid) == s_lo:
            lo = mid
        else:
            hi = mid
    g_star = 0.5 * (lo + hi)
    A = np.eye(grid.size) + g_star * R0 * shape[None, :]
    return g_star, float(_singular_values(A, grid.weights)[-1])


# ---------------------------------------------------------------------------
# perturbed resolvent
# ---------------------------------------------------------------------------

def _left_right(grid, V, z: SpectralPoint):
    R0 = assemble_R0(grid, z)
    v = _potential_values(grid, V)
    left = _identity_plus(R0.entries * v[None, :])      # I + R0 V
    right = _identity_plus(v[:, None] * R0.entries)     # I + V R0
    return R0, left, right


def _right_solve(M: np.ndarray, B: np.ndarray) -> np.ndarray:
    """M B^{-1}."""
    return linalg.solve(B.T, M.T).T


def perturbed_resolvent(grid, V, z: SpectralPoint, rtol: float = 1e-8) -> KernelOperator:
    """R_V(z) = (I + R0 V)^{-1} R0, cross-checked against R0 (I + V R0)^{-1}."""
    R0, left, right = _left_right(grid, V, z)
    A = linalg.solve(left, R0.entries)
    B = _right_solve(R0.entries, right)
    scale = np.max(np.abs(A))
    if scale > 0 and np.max(np.abs(A - B)) > rtol * scale:
        raise ArithmeticError("left and right resolvent representations disagree")
    return R0.with_entries(A, "L1-to-sup")


def spectral_measure_perturbed(grid, V, lam: float, eps: float) -> KernelOperator:
    """R_V(lam + i eps) - R_V(lam - i eps) from the free difference and two solves."""
    dR = spectral_measure_free(grid, lam, eps)
    zp = SpectralPoint(lam, eps, 1)
    v = _potential_values(grid, V)
    R_plus = assemble_R0(grid, zp).entries
    R_minus = assemble_R0(grid, zp.conjugate()).entries
    left_minus = _identity_plus(R_minus * v[None, :])
    right_plus = _identity_plus(v[:, None] * R_plus)
    M = _right_solve(linalg.solve(left_minus, dR.entries), right_plus)
    return dR.with_entries(M, "L1-to-sup")


def perturbed_resolvent_squared(grid, V, lam: float, eps: float, branch: int = 1) -> KernelOperator:
    """R_V(z)^2 = (I + R0 V)^{-1} R0^2 (I + V R0)^{-1}."""
    z = SpectralPoint(lam, eps, branch)
    S = assemble_R0_squared(grid, z)
    _, left, right = _left_right(grid, V, z)
    M = _right_solve(linalg.solve(left, S.entries), right)
    return S.with_entries(M, "L1-to-sup")


# ---------------------------------------------------------------------------
# envelopes and budgets
# ---------------------------------------------------------------------------

@dataclass
class EnvelopeFit:
    lambdas: np.ndarray
    values: np.ndarray
    delta: float
    c: float

    def model(self, lam):
        return self.delta + self.c / np.sqrt(lam)


def fit_envelope(lambdas, values) -> EnvelopeFit:
    """Nonnegative least-squares fit of delta + C / sqrt(lam), lam > 0 only."""
    lams = np.asarray(lambdas, float)
    vals = np.asarray(values, float)
    keep = lams > 0
    A = np.stack([np.ones(keep.sum()), 1.0 / np.sqrt(lams[keep])], axis=1)
    (d, c), _ = optimize.nnls(A, vals[keep])
    return EnvelopeFit(lams, vals, float(d), float(c))


def squared_envelope(grid, V, lambdas, eps: float = 0.0) -> EnvelopeFit:
    """||(R0(lam + i eps) V)^2||_{sup} over the scan, with its delta + C/sqrt(lam) fit."""
    v = _potential_values(grid, V)
    vals = []
    for lam in lambdas:
        T = assemble_R0(grid, SpectralPoint(lam, eps)).entries * v[None, :]
        vals.append(_sup_norm(T @ T))
    return fit_envelope(lambdas, vals)


def neumann_range_start(env: EnvelopeFit, level: float = 0.5) -> float:
    """Smallest scanned lambda beyond which every measured squared norm is below ``level``."""
    above = np.nonzero(env.values >= level)[0]
    if len(above) == 0:
        return float(env.lambdas[0])
    last = above[-1]
    if last + 1 >= len(env.lambdas):
        raise ValueError("squared norm never drops below the level on the scan")
    return float(env.lambdas[last + 1])


@dataclass
class BudgetReport:
    budget: float
    c0: float
    lambda_delta: float
    lambdas: np.ndarray
    inverse_norms: np.ndarray


def perturbation_budget(grid, V1, lambda_delta: float | None = None, lambdas=None,
                        tau: float = DEFAULT_TAU) -> BudgetReport:
    """4 pi / C0 with C0 the largest sup-norm of (I + R0(lam + i0) V1)^{-1} on [0, lambda_delta]."""
    if lambdas is None:
        lambdas = np.linspace(0.0, 40.0, 41)
    lams = np.unique(np.concatenate([[0.0], np.asarray(lambdas, float)]))
    if lambda_delta is None:
        lambda_delta = neumann_range_start(squared_envelope(grid, V1, lams))
    lams = lams[lams <= lambda_delta]
    norms = []
    for lam in lams:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NearSingularWarning)
            _, cert = invert(grid, V1, SpectralPoint(lam), tau=tau)
        if cert.near_singular:
            raise ResonanceObstruction(f"near-singular inversion at lambda={lam:.4g}; budget undefined")
        norms.append(cert.inverse_norm)
    norms = np.array(norms)
    c0 = float(norms.max())
    return BudgetReport(4.0 * math.pi / c0, c0, float(lambda_delta), lams, norms)


def spectral_measure_ratios(grid, V, lambdas, eps: float = 0.0) -> np.ndarray:
    """||R_V(lam+i eps) - R_V(lam-i eps)||_{L1->sup} / sqrt(lambda_eps) per lambda."""
    out = []
    for lam in lambdas:
        M = spectral_measure_perturbed(grid, V, lam, eps)
        out.append(M.opnorm_l1_linf() / math.sqrt(lambda_eps(lam, eps)))
    return np.array(out)
