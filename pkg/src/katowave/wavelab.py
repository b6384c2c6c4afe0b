"""Wave evolution u_tt - Delta u + V u = 0 with u(0) = 0, u_t(0) = f.

Three independent routes:

* eigen path: u(t) = sin(t sqrt H)/sqrt H f from the discrete Hamiltonian;
* resolvent path: a k-quadrature of the spectral measure R_V(k^2 + i eps) -
  R_V(k^2 - i eps) against a smooth window, in the plain form and after an
  integration by parts that trades sin for cos and R_V for R_V^2;
* leapfrog finite differences on a Cartesian grid.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg, ndimage

from .besov import besov_profile, dyadic_bump, mother_cutoff
from .grids import CartesianGrid, RadialGrid
from .potential import PotentialSpec, check_hypotheses
from .resolvent import POINTS_PER_WAVELENGTH, SpectralPoint, _potential_values, assemble_R0, assemble_R0_squared
from .semigroup import DiscreteHamiltonian, assemble_H, sqrt_spectrum


class OutsideTheoremWarning(UserWarning):
    pass


class QuadratureWarning(RuntimeWarning):
    pass


@dataclass
class WaveState:
    t: float
    u: np.ndarray
    method: str
    flags: list[str] = field(default_factory=list)

    def sup(self) -> float:
        return float(np.max(np.abs(self.u)))


# ---------------------------------------------------------------------------
# eigen path
# ---------------------------------------------------------------------------

def sine_multiplier(mu: np.ndarray, t: float) -> np.ndarray:
    """sin(t sqrt mu)/sqrt mu, continued by t at mu = 0 and by sinh below zero."""
    mu = np.asarray(mu, float)
    out = np.full(mu.shape, float(t))
    pos = mu > 0
    k = np.sqrt(mu[pos])
    out[pos] = np.sin(t * k) / k
    neg = mu < 0
    k = np.sqrt(-mu[neg])
    out[neg] = np.sinh(t * k) / k
    return out


def evolve_spectral(H: DiscreteHamiltonian, f: np.ndarray, t: float,
                    window: Callable[[np.ndarray], np.ndarray] | None = None) -> WaveState:
    mult = sine_multiplier(H.eigenvalues, t)
    if window is not None:
        mult = mult * window(H.eigenvalues)
    flags = []
    if np.any(H.eigenvalues < 0):
        flags.append("bound-state")
        warnings.warn("negative eigenvalue present; exponential growth, outside the dispersive regime",
                      OutsideTheoremWarning, stacklevel=2)
    return WaveState(t, H.apply(mult, f), "spectral-eigen", flags)


def free_gaussian_wave(r, t: float, sigma: float):
    """Spherical-means solution for V = 0 and f = exp(-|x|^2 / sigma^2)."""
    r = np.asarray(r, float)
    s2 = sigma * sigma
    out = np.empty(r.shape)
    small = r < 1e-12
    rr = r[~small]
    out[~small] = s2 / (4.0 * rr) * np.exp(-((rr - t) ** 2) / s2) * (-np.expm1(-4.0 * rr * t / s2))
    out[small] = t * math.exp(-t * t / s2)
    return out


# ---------------------------------------------------------------------------
# resolvent path
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralWindow:
    """Smooth bump in k = sqrt(lambda) supported in [k_lo, k_hi], flat in between the ramps."""

    k_lo: float
    k_hi: float
    ramp: float = 0.5

    def __post_init__(self):
        if not 0 < self.k_lo < self.k_hi or self.ramp <= 0 or 2 * self.ramp > self.k_hi - self.k_lo:
            raise ValueError("window needs 0 < k_lo < k_hi with room for two ramps")

    def of_k(self, k):
        k = np.asarray(k, float)
        up = 1.0 - mother_cutoff(1.0 + (k - self.k_lo) / self.ramp)
        down = mother_cutoff(1.0 + (k - self.k_hi + self.ramp) / self.ramp)
        return up * down

    def __call__(self, lam):
        lam = np.asarray(lam, float)
        return self.of_k(np.sqrt(np.clip(lam, 0.0, None)))

    def derivative(self, lam):
        """d/dlambda by a central difference; the profile is smooth so this is accurate to ~1e-9."""
        lam = np.asarray(lam, float)
        step = 1e-5 * max(1.0, float(np.max(lam)))
        return (self(lam + step) - self(lam - step)) / (2.0 * step)

    @classmethod
    def dyadic(cls, j: int) -> "SpectralWindow":
        return cls(2.0 ** (j - 1), 2.0 ** (j + 1), 2.0 ** (j - 1) * 0.5)


@dataclass
class ResolventWave:
    times: np.ndarray
    plain: np.ndarray            # (len(times), n) extrapolated to eps = 0
    by_parts: np.ndarray
    per_eps_plain: dict
    per_eps_by_parts: dict
    quadrature_error: float
    flags: list[str] = field(default_factory=list)


def _richardson(eps: np.ndarray, values: list[np.ndarray]) -> np.ndarray:
    """Value at eps = 0 of the polynomial through the samples."""
    eps = np.asarray(eps, float)
    V = np.vander(eps, len(eps), increasing=True)
    coef = np.linalg.solve(V, np.stack([v.reshape(-1) for v in values]))
    return coef[0].reshape(values[0].shape)


def evolve_spectral_resolvent(grid: RadialGrid, V, f: np.ndarray, times, window: SpectralWindow,
                              eps_seq=(0.1, 0.03, 0.01), dk: float | None = None,
                              rtol: float = 1e-2) -> ResolventWave:
    """Both spectral representations on the uniform k grid of the window, Richardson in eps.

    With lambda = k^2 the plain form is
        u = (2/pi) int sin(t k) psi(k^2) Im[R_V(k^2 + i eps) f] dk
    and the integrated-by-parts form is
        u = (4/(pi t)) int k cos(t k) Im[(psi' R_V + psi R_V^2)(k^2 + i eps) f] dk.
    The trapezoid rule is spectrally accurate for the smooth compactly
    supported integrand. The half-grid sum bounds the error of the coarse
    rule, so it overstates the error of the returned fine sum.
    """
    times = np.atleast_1d(np.asarray(times, float))
    v = _potential_values(grid, V)
    if dk is None:
        dk = math.pi / (8.0 * (times.max() + grid.r_max))
    m = int(math.ceil((window.k_hi - window.k_lo) / dk))
    m += m % 2
    ks = np.linspace(window.k_lo, window.k_hi, m + 1)
    dk = ks[1] - ks[0]
    per_plain, per_ibp = {}, {}
    qerr = 0.0
    eye = np.eye(grid.size)
    for eps in eps_seq:
        Im_R = np.zeros((len(ks), grid.size))
        Im_R2 = np.zeros((len(ks), grid.size))
        for a, k in enumerate(ks):
            lam = k * k
            w = window(lam)
            wd = window.derivative(lam)
            if w == 0.0 and wd == 0.0:
                continue
            z = SpectralPoint(lam, eps)
            R0 = assemble_R0(grid, z).entries
            left = linalg.lu_factor(eye + R0 * v[None, :])
            Rf = linalg.lu_solve(left, R0 @ f)
            Im_R[a] = Rf.imag
            S = assemble_R0_squared(grid, z).entries
            y = linalg.solve(eye + v[:, None] * R0, f)
            Im_R2[a] = linalg.lu_solve(left, S @ y).imag
        psi = window(ks**2)
        dpsi = window.derivative(ks**2)
        plain, ibp = [], []
        for t in times:
            g1 = (np.sin(t * ks) * psi)[:, None] * Im_R
            g2 = (ks * np.cos(t * ks))[:, None] * (dpsi[:, None] * Im_R + psi[:, None] * Im_R2)
            for g, out, c in ((g1, plain, 2.0 / math.pi), (g2, ibp, 4.0 / (math.pi * t))):
                fine = c * dk * (g.sum(axis=0) - 0.5 * (g[0] + g[-1]))
                coarse = c * 2 * dk * (g[::2].sum(axis=0) - 0.5 * (g[0] + g[-1]))
                scale = max(np.max(np.abs(fine)), 1e-300)
                qerr = max(qerr, float(np.max(np.abs(fine - coarse)) / scale))
                out.append(fine)
        per_plain[eps] = np.array(plain)
        per_ibp[eps] = np.array(ibp)
    flags = []
    if qerr > rtol:
        flags.append("quadrature-not-converged")
        warnings.warn(f"k-quadrature half-grid difference {qerr:.2e} exceeds {rtol:.1e}", QuadratureWarning,
                      stacklevel=2)
    eps = np.array(list(eps_seq))
    plain = _richardson(eps, [per_plain[e] for e in eps_seq])
    ibp = _richardson(eps, [per_ibp[e] for e in eps_seq])
    return ResolventWave(times, plain, ibp, per_plain, per_ibp, qerr, flags)


# ---------------------------------------------------------------------------
# localized evolution and dispersive ratios
# ---------------------------------------------------------------------------

@dataclass
class LocalizedReport:
    j: int
    times: np.ndarray
    sup_norms: np.ndarray
    block_l1: float
    ratios: np.ndarray
    skipped: bool = False


def evolve_localized(H: DiscreteHamiltonian, f: np.ndarray, j: int, times) -> LocalizedReport:
    """t ||u(t)||_inf / (2^j ||phi_j(sqrt H) f||_1) for the datum phi_j(sqrt H) f."""
    times = np.asarray(times, float)
    k = sqrt_spectrum(H)
    if 2.0 ** (j + 1) > 2.0 * math.pi / (POINTS_PER_WAVELENGTH * H.grid.h):
        warnings.warn(f"block {j} is finer than {POINTS_PER_WAVELENGTH} points per wavelength; skipped",
                      RuntimeWarning, stacklevel=2)
        return LocalizedReport(j, times, np.full(len(times), np.nan), math.nan, np.full(len(times), np.nan), True)
    block = dyadic_bump(k * 2.0**-j)
    datum = H.apply(block, f)
    l1 = H.l1_norm(datum)
    sups = np.array([evolve_spectral(H, datum, t).sup() for t in times])
    return LocalizedReport(j, times, sups, l1, times * sups / (2.0**j * l1))


@dataclass
class DecayReport:
    times: np.ndarray
    sup_norms: np.ndarray        # (len(fset), len(times))
    besov_norm: np.ndarray       # perturbed, per datum
    besov_norm_free: np.ndarray
    ratios: np.ndarray
    c_star: float
    flatness: np.ndarray         # max/min ratio per datum over the times
    outside_theorem: bool
    notes: list[str] = field(default_factory=list)

    def growth(self) -> np.ndarray:
        """Last over first ratio, per datum."""
        return self.ratios[:, -1] / self.ratios[:, 0]


def dispersive_ratio(grid: RadialGrid, V: PotentialSpec | None, fset: list[np.ndarray], times,
                     split_radius: float = 1.0, resonance_lambdas=None) -> DecayReport:
    """C* = max over data and times of t ||u(t)||_inf / ||f||_{B^1_{1,1}(V)}."""
    times = np.asarray(times, float)
    if times.min() < 0.5:
        raise ValueError("dispersive ratios need t >= 0.5")
    V = V if V is not None else PotentialSpec("zero", {})
    H = assemble_H(grid, V, check=False)
    H0 = H if V.kind == "zero" else assemble_H(grid, None)
    notes = []
    outside = False
    rep = check_hypotheses(V, split_radius, RadialGrid(max(4.0, 2 * split_radius), 2000))
    if not (rep.thm_main_ii and rep.thm_main_iii):
        outside = True
        notes.append("hypotheses fail")
    if np.any(H.eigenvalues < 0):
        outside = True
        notes.append("negative eigenvalue")
    if resonance_lambdas is not None:
        from .scattering import resonance_scan

        scan = resonance_scan(RadialGrid(max(2.0, 2 * split_radius), 400), V, resonance_lambdas)
        if scan.has_dip:
            outside = True
            notes.append("resonance dip")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutsideTheoremWarning)
        sups = np.array([[evolve_spectral(H, f, t).sup() for t in times] for f in fset])
    with warnings.catch_warnings():
        # bound-state content sits below the homogeneous partition; recorded as a note instead
        warnings.simplefilter("ignore", RuntimeWarning)
        prof = [besov_profile(H, f) for f in fset]
        prof0 = [besov_profile(H0, f) for f in fset]
    if any(p.flagged for p in prof + prof0):
        notes.append("datum content outside the dyadic range: max tail %.3g"
                     % max(p.tail for p in prof + prof0))
    bn = np.array([p.norm(1.0, 1.0) for p in prof])
    bn0 = np.array([p.norm(1.0, 1.0) for p in prof0])
    ratios = times[None, :] * sups / bn[:, None]
    flat = ratios.max(axis=1) / ratios.min(axis=1)
    return DecayReport(times, sups, bn, bn0, ratios, float(ratios.max()), flat, outside, notes)


# ---------------------------------------------------------------------------
# FDTD
# ---------------------------------------------------------------------------

class CFLError(ValueError):
    pass


def _laplacian_3d(u: np.ndarray, h: float) -> np.ndarray:
    """7-point Laplacian with zero Dirichlet data outside the box."""
    return ndimage.correlate(u, _STENCIL, mode="constant", cval=0.0) / (h * h)


_STENCIL = np.zeros((3, 3, 3))
_STENCIL[1, 1, :] = _STENCIL[1, :, 1] = _STENCIL[:, 1, 1] = 1.0
_STENCIL[1, 1, 1] = -6.0


@dataclass
class FDTDRun:
    grid: CartesianGrid
    dt: float
    states: list[WaveState]
    energies: np.ndarray

    @property
    def energy_drift(self) -> float:
        e = self.energies
        return float(np.max(np.abs(e - e[0])) / abs(e[0]))


def evolve_fdtd(grid: CartesianGrid, V: PotentialSpec | None, f, T: float, dt: float | None = None,
                record=None, support_radius: float | None = None) -> FDTDRun:
    """Leapfrog with a third-order start, Dirichlet box, staggered energy."""
    h = grid.h
    cfl = h / math.sqrt(3.0)
    if dt is None:
        dt = 0.5 * cfl
    if dt > cfl * (1 + 1e-12):
        raise CFLError(f"dt = {dt:.4g} violates the CFL limit h/sqrt(3) = {cfl:.4g}")
    if support_radius is not None and grid.half_width < support_radius + T:
        warnings.warn("box smaller than support + T; the wall is inside the light cone", RuntimeWarning,
                      stacklevel=2)
    steps = int(math.ceil(T / dt - 1e-9))
    dt = T / steps
    shape = grid.shape
    pts = grid.points
    vfield = np.zeros(shape) if V is None else np.asarray(V(pts), float).reshape(shape)
    f0 = np.asarray(f(pts) if callable(f) else f, float).reshape(shape)
    record = sorted(set(np.round(np.atleast_1d(record if record is not None else [T]) / dt).astype(int)))

    def A(u):
        return -_laplacian_3d(u, h) + vfield * u

    prev = np.zeros(shape)
    cur = dt * f0 - dt**3 / 6.0 * A(f0)
    states = []
    energies = []
    w = h**3

    def energy(a, b):
        vel = (b - a) / dt
        return 0.5 * w * (np.sum(vel * vel) + np.sum(A(b) * a))

    energies.append(energy(prev, cur))
    if 1 in record:
        states.append(WaveState(dt, cur.copy(), "fdtd"))
    for n in range(1, steps):
        nxt = 2.0 * cur - prev - dt * dt * A(cur)
        prev, cur = cur, nxt
        energies.append(energy(prev, cur))
        if n + 1 in record:
            states.append(WaveState((n + 1) * dt, cur.copy(), "fdtd"))
    return FDTDRun(grid, dt, states, np.array(energies))
