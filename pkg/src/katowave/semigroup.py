"""Discrete Schrodinger operators H = -Delta + V and functions of them.

Every spectral function is evaluated from one eigendecomposition. Nodal
values f are mapped to ``u = scale * f`` where the finite-difference matrix
is symmetric in the plain l^2 pairing; on the radial grid ``scale`` is
``r sqrt(4 pi h)`` (the s-wave substitution u = r f), on the Cartesian grid
it is ``h^{3/2}``. The matching quadrature weights are ``scale**2``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate, special

from .grids import CartesianGrid, RadialGrid
from .potential import (
    SELFADJOINT_THRESHOLD,
    PotentialSpec,
    kato_constant,
    kato_norm,
)

C3 = kato_constant(3)
CARTESIAN_EIGEN_LIMIT = 4000


class HypothesisWarning(UserWarning):
    pass


class SpectrumTruncationWarning(UserWarning):
    """A spectral profile is still nonzero at the top of the discrete spectrum."""


@dataclass
class DiscreteHamiltonian:
    grid: RadialGrid | CartesianGrid
    potential: np.ndarray
    matrix: np.ndarray
    scale: np.ndarray
    spec: PotentialSpec | None = field(default=None, repr=False)

    @cached_property
    def eigen(self) -> tuple[np.ndarray, np.ndarray]:
        mu, U = np.linalg.eigh(self.matrix)
        return mu, U

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eigen[0]

    @property
    def weights(self) -> np.ndarray:
        return self.scale**2

    @property
    def nodes(self) -> np.ndarray:
        if isinstance(self.grid, RadialGrid):
            return self.grid.nodes
        return self.grid.radii

    def operator(self, multiplier: np.ndarray) -> np.ndarray:
        """Matrix acting on nodal values for the spectral multiplier sampled at the eigenvalues."""
        _, U = self.eigen
        core = (U * multiplier[None, :]) @ U.T
        return core * (self.scale[None, :] / self.scale[:, None])

    def kernel(self, multiplier: np.ndarray) -> np.ndarray:
        """Integral kernel values k(x_i, y_j); on the radial grid these are sphere averages."""
        _, U = self.eigen
        core = (U * multiplier[None, :]) @ U.T
        return core / (self.scale[:, None] * self.scale[None, :])

    def apply(self, multiplier: np.ndarray, f: np.ndarray) -> np.ndarray:
        _, U = self.eigen
        c = U.T @ (self.scale * f)
        return (U @ (multiplier * c)) / self.scale

    def coefficients(self, f: np.ndarray) -> np.ndarray:
        return self.eigen[1].T @ (self.scale * f)

    def l1_norm(self, f: np.ndarray) -> float:
        return float(np.sum(self.weights * np.abs(f)))

    def opnorm_l1(self, A: np.ndarray) -> float:
        w = self.weights
        return float(np.max(np.sum(w[:, None] * np.abs(A), axis=0) / w))


def _laplacian_radial(n: int, h: float) -> np.ndarray:
    main = np.full(n, 2.0)
    main[0] = main[-1] = 3.0
    A = np.diag(main) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)
    return A / h**2


def _laplacian_cartesian(count: int, h: float) -> np.ndarray:
    T = (2.0 * np.eye(count) - np.eye(count, k=1) - np.eye(count, k=-1)) / h**2
    I = np.eye(count)
    return np.kron(np.kron(T, I), I) + np.kron(np.kron(I, T), I) + np.kron(np.kron(I, I), T)


def assemble_H(grid: RadialGrid | CartesianGrid, V: PotentialSpec | np.ndarray | None = None,
               check: bool = True) -> DiscreteHamiltonian:
    """Second-order finite differences with a Dirichlet wall; the eigendecomposition is lazy."""
    spec = V if isinstance(V, PotentialSpec) else None
    if V is None:
        v = np.zeros(grid.size)
    elif spec is not None:
        v = spec.sample(grid)
    else:
        v = np.asarray(V, float)
    if check and spec is not None and isinstance(grid, RadialGrid):
        neg = kato_norm(spec.negative_part(), grid)
        if neg >= SELFADJOINT_THRESHOLD:
            warnings.warn(f"||V_-||_K = {neg:.4g} >= 4 pi; self-adjointness hypothesis fails",
                          HypothesisWarning, stacklevel=2)
    if isinstance(grid, RadialGrid):
        A = _laplacian_radial(grid.n, grid.h)
        scale = grid.nodes * math.sqrt(4.0 * math.pi * grid.h)
    else:
        if grid.size > CARTESIAN_EIGEN_LIMIT:
            raise MemoryError(f"dense Cartesian Hamiltonian capped at {CARTESIAN_EIGEN_LIMIT} nodes")
        A = _laplacian_cartesian(grid.count, grid.h)
        scale = np.full(grid.size, grid.h**1.5)
    A[np.diag_indices_from(A)] += v
    return DiscreteHamiltonian(grid, v, A, scale, spec)


def dirichlet_free_eigenvalues(r_max: float, count: int) -> np.ndarray:
    """(k pi / r_max)^2, k = 1..count: continuum s-wave modes in a ball with a Dirichlet wall."""
    return (np.arange(1, count + 1) * math.pi / r_max) ** 2


# ---------------------------------------------------------------------------
# heat semigroup
# ---------------------------------------------------------------------------

def heat_multiplier(H: DiscreteHamiltonian, t: float) -> np.ndarray:
    if t <= 0:
        raise ValueError("t must be positive")
    return np.exp(-t * H.eigenvalues)


def heat_apply(H: DiscreteHamiltonian, t: float, f: np.ndarray) -> np.ndarray:
    return H.apply(heat_multiplier(H, t), f)


def heat_kernel(H: DiscreteHamiltonian, t: float) -> np.ndarray:
    return H.kernel(heat_multiplier(H, t))


def free_heat_kernel(d, t):
    return (4.0 * math.pi * t) ** -1.5 * np.exp(-np.asarray(d) ** 2 / (4.0 * t))


def sphere_average_gaussian(r, s, a):
    """Average of exp(-|x-y|^2/a) over |y| = s for |x| = r."""
    r = np.asarray(r, float)
    s = np.asarray(s, float)
    rs = r * s
    return a / (4.0 * rs) * np.exp(-((r - s) ** 2) / a) * (-np.expm1(-4.0 * rs / a))


def free_heat_kernel_radial(r, s, t):
    """Sphere-averaged free heat kernel, the radial-grid analogue of ``free_heat_kernel``."""
    return (4.0 * math.pi * t) ** -1.5 * sphere_average_gaussian(r, s, 4.0 * t)


def interior_mask(H: DiscreteHamiltonian, t: float) -> np.ndarray:
    """Nodes at least 3 sqrt(2t) from the wall."""
    g = H.grid
    margin = 3.0 * math.sqrt(2.0 * t)
    if isinstance(g, RadialGrid):
        return g.nodes <= g.r_max - margin
    P = np.abs(g.points)
    return np.all(P <= g.half_width - margin, axis=1)


@dataclass
class HeatKernelCheck:
    t: float
    max_violation: float
    constant: float
    width: float
    tolerance: float
    passed: bool
    skipped: bool = False
    reason: str = ""
    pairs: int = 0


def heat_bound_constant(t: float, kato_negative: float) -> float:
    return (2.0 * math.pi * t) ** -1.5 / (1.0 - 2.0 * kato_negative / C3)


def kernel_bound_check(H: DiscreteHamiltonian, t: float, kato_negative: float | None = None,
                       boundary_tol: float = 1e-3) -> HeatKernelCheck:
    """Largest k(t,x,y) - C e^{-|x-y|^2/8t} over interior node pairs.

    On radial grids both sides are sphere averages, so the bound is averaged
    the same way. ``boundary_tol`` is relative to the largest bound value.
    """
    if kato_negative is None:
        if H.spec is None or not isinstance(H.grid, RadialGrid):
            raise ValueError("kato_negative is required without a radial PotentialSpec")
        kato_negative = kato_norm(H.spec.negative_part(), H.grid)
    if kato_negative >= C3 / 2:
        return HeatKernelCheck(t, math.nan, math.nan, 8 * t, boundary_tol, False, True,
                               f"||V_-||_K = {kato_negative:.4g} is not below pi")
    const = heat_bound_constant(t, kato_negative)
    K = heat_kernel(H, t)
    mask = interior_mask(H, t)
    x = H.nodes[mask]
    sub = K[np.ix_(mask, mask)]
    if isinstance(H.grid, RadialGrid):
        B = const * sphere_average_gaussian(x[:, None], x[None, :], 8.0 * t)
    else:
        P = H.grid.points[mask]
        d2 = np.sum((P[:, None, :] - P[None, :, :]) ** 2, axis=-1)
        B = const * np.exp(-d2 / (8.0 * t))
    viol = float(np.max(sub - B))
    tol = boundary_tol * float(np.max(B))
    return HeatKernelCheck(t, viol, const, 8.0 * t, tol, viol <= tol, pairs=int(mask.sum()) ** 2)


@dataclass
class LpLqCheck:
    p: float
    q: float
    t: float
    measured: float
    bound: float
    passed: bool


def lplq_norm(H: DiscreteHamiltonian, t: float, p: float, q: float, mask: np.ndarray | None = None) -> float:
    K = heat_kernel(H, t)
    w = H.weights
    if mask is not None:
        K = K[np.ix_(mask, mask)]
        w = w[mask]
    key = (p, q)
    if key == (1, math.inf):
        return float(np.max(np.abs(K)))
    if key == (2, 2):
        return float(np.max(np.exp(-t * H.eigenvalues)))
    if key == (1, 2):
        return float(np.max(np.sqrt(np.sum(w[:, None] * K**2, axis=0))))
    if key == (2, math.inf):
        return float(np.max(np.sqrt(np.sum(w[None, :] * K**2, axis=1))))
    raise ValueError("(p, q) must be one of (1,inf), (2,2), (1,2), (2,inf)")


def lplq_check(H: DiscreteHamiltonian, t: float, p: float, q: float, kato_negative: float) -> LpLqCheck:
    gamma = 1.5 * (1.0 / p - 1.0 / q)
    bound = (2.0 * math.pi * t) ** -gamma / (1.0 - kato_negative / C3) ** 2
    measured = lplq_norm(H, t, p, q, interior_mask(H, t) if (p, q) != (2, 2) else None)
    return LpLqCheck(p, q, t, measured, bound, measured <= bound)


# ---------------------------------------------------------------------------
# Feynman-Kac Monte Carlo
# ---------------------------------------------------------------------------

@dataclass
class MCEstimate:
    estimate: float
    stderr: float
    paths: int
    steps: int
    seed: int | None
    flagged: bool = False

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "stderr": self.stderr, "paths": self.paths,
                "steps": self.steps, "seed": self.seed, "flagged": self.flagged}


def _path_integrals(V: PotentialSpec, x0, t: float, paths: int, steps: int,
                    rng: np.random.Generator, chunk: int = 10_000) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid values of int_0^t V(b_s) ds and endpoints b_t for Brownian motion with generator Delta."""
    dt = t / steps
    x0 = np.asarray(x0, float)

    def evaluate(pos):
        return V.radial(np.linalg.norm(pos, axis=1)) if V.is_radial else V(pos)

    integrals = np.empty(paths)
    ends = np.empty((paths, 3))
    done = 0
    while done < paths:
        m = min(chunk, paths - done)
        pos = np.broadcast_to(x0, (m, 3)).copy()
        acc = 0.5 * evaluate(pos)
        for k in range(steps):
            pos += rng.normal(scale=math.sqrt(2.0 * dt), size=(m, 3))
            vals = evaluate(pos)
            acc += vals if k < steps - 1 else 0.5 * vals
        integrals[done:done + m] = acc * dt
        ends[done:done + m] = pos
        done += m
    return integrals, ends


def _mean_err(samples: np.ndarray) -> tuple[float, float]:
    n = len(samples)
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf


def feynman_kac_mc(V: PotentialSpec, x, t: float, paths: int = 100_000, steps: int = 200,
                   seed: int | np.random.SeedSequence | None = 0, f=None, chunk: int = 10_000,
                   stderr_tol: float | None = None) -> MCEstimate:
    """E_x exp(-int_0^t V(b_s) ds) f(b_t), increments of variance 2 dt per coordinate."""
    rng = np.random.default_rng(seed)
    integrals, ends = _path_integrals(V, x, t, paths, steps, rng, chunk)
    samples = np.exp(-integrals)
    if f is not None:
        samples = samples * f(ends)
    est, err = _mean_err(samples)
    flagged = stderr_tol is not None and err > stderr_tol
    if flagged:
        warnings.warn(f"stderr {err:.3g} above tolerance; about {int(paths * (err / stderr_tol) ** 2)} paths needed",
                      RuntimeWarning, stacklevel=2)
    seed_out = seed if isinstance(seed, int) or seed is None else None
    return MCEstimate(est, err, paths, steps, seed_out, flagged)


def q_integral(rho, t: float):
    """int_0^t (2 pi s)^{-3/2} e^{-rho^2/2s} ds = erfc(rho / sqrt(2t)) / (2 pi rho)."""
    rho = np.asarray(rho, float)
    return special.erfc(rho / np.sqrt(2.0 * t)) / (2.0 * math.pi * rho)


def occupation_density(d, t: float):
    """Expected time density at distance d before time t for the generator Delta."""
    d = np.asarray(d, float)
    return special.erfc(d / (2.0 * math.sqrt(t))) / (4.0 * math.pi * d)


def _occupation_radial(rho: float, s: np.ndarray, t: float) -> np.ndarray:
    """Sphere average of ``occupation_density`` over |y| = s for |x| = rho."""
    a = 2.0 * math.sqrt(t)

    def E(d):
        return d * special.erfc(d / a) - a / math.sqrt(math.pi) * np.exp(-(d / a) ** 2)

    if rho == 0.0:
        return occupation_density(s, t)
    return (E(rho + s) - E(np.abs(rho - s))) / (8.0 * math.pi * rho * s)


def expected_occupation(V: PotentialSpec, rho: float, t: float) -> float:
    """E_x int_0^t |V|(b_s) ds for |x| = rho and radial V, by quadrature."""
    if not V.is_radial:
        raise ValueError("quadrature oracle needs a radial potential")
    R = V.support_radius
    upper = R if math.isfinite(R) else rho + 40.0 * math.sqrt(t) + 40.0
    if upper <= 0.0:
        return 0.0
    pts = sorted({p for p in [rho, *V.singular_points] if 0 < p < upper})

    def integrand(s):
        return _occupation_radial(rho, np.array([s]), t)[0] * abs(float(V.radial(np.array([s]))[0])) * 4 * math.pi * s * s

    val, _ = integrate.quad(integrand, 0.0, upper, points=pts or None, limit=200)
    return float(val)


@dataclass
class KhasminskiiReport:
    t: float
    probes: np.ndarray
    occupation_quadrature: np.ndarray
    occupation_mc: np.ndarray
    occupation_stderr: np.ndarray
    alpha_measured: float
    alpha_kato: float
    exp_moment: np.ndarray
    exp_stderr: np.ndarray
    bound_measured: float
    bound_kato: float
    passed: bool
    applicable: bool


def qt_and_khasminskii(V_minus: PotentialSpec, t: float, probes, paths: int = 100_000,
                       steps: int = 200, seed: int = 0, kato_minus: float | None = None,
                       grid: RadialGrid | None = None) -> KhasminskiiReport:
    """Occupation integrals by MC and quadrature, alpha, and the exponential-moment bound.

    ``alpha_measured`` is the sup over a radius scan of E_x int_0^t V_-; the
    Kato form is ``||V_-||_K / c_3``. Both give a Khasminskii bound; the
    check requires the MC supremum to respect both within 3 stderr.
    """
    probes = np.asarray(probes, float)
    if kato_minus is None:
        kato_minus = kato_norm(V_minus, grid or RadialGrid(max(4.0, 2 * V_minus.support_radius
                                                                if math.isfinite(V_minus.support_radius) else 20.0), 2000))
    alpha_kato = kato_minus / C3
    scan = np.unique(np.concatenate([probes, np.linspace(0.0, 3.0, 61)]))
    alpha_meas = max(expected_occupation(V_minus, r, t) for r in scan)
    quad = np.array([expected_occupation(V_minus, r, t) for r in probes])
    seqs = np.random.SeedSequence(seed).spawn(len(probes))
    occ_mc, occ_err, em, em_err = [], [], [], []
    for i, r in enumerate(probes):
        x = np.array([r, 0.0, 0.0])
        integrals, _ = _path_integrals(V_minus, x, t, paths, steps, np.random.default_rng(seqs[i]))
        integrals = np.abs(integrals)
        m, e = _mean_err(integrals)
        occ_mc.append(m)
        occ_err.append(e)
        m, e = _mean_err(np.exp(integrals))
        em.append(m)
        em_err.append(e)
    em = np.array(em)
    em_err = np.array(em_err)
    applicable = alpha_meas < 1.0
    b_meas = 1.0 / (1.0 - alpha_meas) if applicable else math.inf
    b_kato = 1.0 / (1.0 - alpha_kato) if alpha_kato < 1 else math.inf
    passed = bool(applicable and np.all(em <= min(b_meas, b_kato) + 3.0 * em_err))
    return KhasminskiiReport(t, probes, quad, np.array(occ_mc), np.array(occ_err), float(alpha_meas),
                             float(alpha_kato), em, em_err, b_meas, b_kato, passed, applicable)


# ---------------------------------------------------------------------------
# functional calculus
# ---------------------------------------------------------------------------

def functional_calculus(H: DiscreteHamiltonian, profile: Callable[[np.ndarray], np.ndarray],
                        theta: float = 1.0) -> np.ndarray:
    """g(theta H) as a matrix on nodal values.

    Warns when the profile has not decayed at the top of the discrete
    spectrum, since the operator is then truncated by the grid.
    """
    mult = np.asarray(profile(theta * H.eigenvalues), float)
    top = abs(mult[-1])
    if top > 1e-8 * max(float(np.max(np.abs(mult))), 1e-300):
        warnings.warn(f"profile is {top:.3g} at the top of the spectrum; g(theta H) is truncated by the grid",
                      SpectrumTruncationWarning, stacklevel=2)
    return H.operator(mult)


def sqrt_spectrum(H: DiscreteHamiltonian) -> np.ndarray:
    return np.sqrt(np.clip(H.eigenvalues, 0.0, None))


def resolved_frequency(H: DiscreteHamiltonian) -> float:
    """Largest sqrt(mu) the finite-difference operator represents faithfully."""
    return math.pi / (2.0 * H.grid.h)


def cross_block_norm(H: DiscreteHamiltonian, H0: DiscreteHamiltonian, j: int, k: int,
                     partition=None) -> float:
    """L1 -> L1 norm of phi_j(sqrt H) phi_k(sqrt H0)."""
    from .besov import build_partition

    if partition is None:
        partition = build_partition(min(j, k) - 1, max(j, k) + 1)
    A = H.operator(partition.block(j, sqrt_spectrum(H)))
    B = H0.operator(partition.block(k, sqrt_spectrum(H0)))
    return H.opnorm_l1(A @ B)
