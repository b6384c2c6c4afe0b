"""Test potentials, Kato-norm analysis and hypothesis checks.

All potentials are real valued functions on R^3 described symbolically by
:class:`PotentialSpec`. Radial specs are the fast path: the Kato integral of a
radial density reduces to a one dimensional integral with an exactly known
angular kernel, so the supremum over probe points becomes a scan over radii.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, signal

from .grids import UNIT_CUBE_COULOMB, CartesianGrid, RadialGrid, gauss_legendre01

SELFADJOINT_THRESHOLD = 4.0 * math.pi


def kato_constant(n: int = 3) -> float:
    """c_n = 2 pi^{n/2} / Gamma(n/2 - 1); equals 2 pi for n = 3."""
    if n < 3:
        raise ValueError("c_n is defined for n >= 3")
    if n == 3:
        # Gamma(1/2) = sqrt(pi) cancels exactly
        return 2.0 * math.pi
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2 - 1)


class KatoDivergenceError(ArithmeticError):
    """Kato quadrature does not settle under grid refinement."""


class TruncationWarning(UserWarning):
    pass


_KINDS = {
    "zero", "ball-well", "gaussian", "inverse-decay", "sum", "scaled",
    "window", "sign-part", "tabulated",
}


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """Symbolic potential V(x).

    ``ball-well`` is ``-depth`` on the ball, so positive depth is attractive.
    Composite kinds (``sum``, ``scaled``, ``window``, ``sign-part``) hold
    their operands in ``parts``.
    """

    kind: str
    params: dict = field(default_factory=dict)
    parts: tuple["PotentialSpec", ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")

    # --- evaluation -------------------------------------------------------

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "gaussian" and self._centered is False:
            c = np.asarray(self.params["center"], dtype=float)
            d2 = np.sum((x - c) ** 2, axis=-1)
            return self.params["amplitude"] * np.exp(-d2 / self.params["width"] ** 2)
        if self.kind == "scaled":
            return self.params["amplitude"] * self.parts[0](self.params["dilation"] * x)
        if self.kind == "sum":
            return sum(p(x) for p in self.parts)
        if self.kind == "window":
            r = np.linalg.norm(x, axis=-1)
            inside = (r >= self.params["r_in"]) & (r < self.params["r_out"])
            return np.where(inside, self.parts[0](x), 0.0)
        if self.kind == "sign-part":
            v = self.parts[0](x)
            return np.maximum(v, 0.0) if self.params["sign"] == "+" else np.maximum(-v, 0.0)
        return self.radial(np.linalg.norm(x, axis=-1))

    def radial(self, r) -> np.ndarray:
        """Profile V(|x| = r); only for radial specs."""
        if not self.is_radial:
            raise ValueError("radial() called on a non-radial potential")
        r = np.asarray(r, dtype=float)
        p = self.params
        k = self.kind
        if k == "zero":
            return np.zeros_like(r)
        if k == "ball-well":
            return np.where(r < p["radius"], -p["depth"], 0.0)
        if k == "gaussian":
            return p["amplitude"] * np.exp(-(r**2) / p["width"] ** 2)
        if k == "inverse-decay":
            e = p["eps"]
            with np.errstate(divide="ignore"):
                return p["C"] / (r ** (2 + e) + r ** (2 - e))
        if k == "sum":
            return sum(q.radial(r) for q in self.parts)
        if k == "scaled":
            return p["amplitude"] * self.parts[0].radial(p["dilation"] * r)
        if k == "window":
            inside = (r >= p["r_in"]) & (r < p["r_out"])
            return np.where(inside, self.parts[0].radial(r), 0.0)
        if k == "sign-part":
            v = self.parts[0].radial(r)
            return np.maximum(v, 0.0) if p["sign"] == "+" else np.maximum(-v, 0.0)
        if k == "tabulated":
            return np.interp(r, p["radii"], p["values"], right=0.0)
        raise AssertionError(k)

    @property
    def _centered(self) -> bool:
        c = self.params.get("center")
        return c is None or not np.any(np.asarray(c, dtype=float))

    # --- declared properties ----------------------------------------------

    @property
    def is_radial(self) -> bool:
        if self.kind == "gaussian":
            return self._centered
        return all(p.is_radial for p in self.parts)

    @property
    def support_radius(self) -> float:
        k, p = self.kind, self.params
        if k == "zero":
            return 0.0
        if k == "ball-well":
            return float(p["radius"]) if p["depth"] != 0 else 0.0
        if k in ("gaussian", "inverse-decay"):
            return math.inf if p.get("amplitude", p.get("C")) != 0 else 0.0
        if k == "sum":
            return max((q.support_radius for q in self.parts), default=0.0)
        if k == "scaled":
            if p["amplitude"] == 0:
                return 0.0
            return self.parts[0].support_radius / p["dilation"]
        if k == "window":
            return min(p["r_out"], self.parts[0].support_radius)
        if k == "sign-part":
            return self.parts[0].support_radius
        if k == "tabulated":
            radii = np.asarray(p["radii"])
            nz = np.nonzero(np.asarray(p["values"]))[0]
            return float(radii[min(nz[-1] + 1, len(radii) - 1)]) if len(nz) else 0.0
        raise AssertionError(k)

    @property
    def decay_exponent(self) -> float:
        """Declared power q with |V(x)| <~ |x|^{-q} at infinity (inf if compact)."""
        if math.isfinite(self.support_radius):
            return math.inf
        k, p = self.kind, self.params
        if k == "gaussian":
            return math.inf
        if k == "inverse-decay":
            return 2.0 + p["eps"]
        if k == "sum":
            return min(q.decay_exponent for q in self.parts)
        return self.parts[0].decay_exponent

    @property
    def singular_points(self) -> list[float]:
        """Radii where V may be unbounded."""
        if self.kind == "inverse-decay":
            return [0.0]
        if self.kind == "scaled":
            return [r / self.params["dilation"] for r in self.parts[0].singular_points]
        return sorted({r for q in self.parts for r in q.singular_points})

    # --- algebra ----------------------------------------------------------

    def __add__(self, other: "PotentialSpec") -> "PotentialSpec":
        return PotentialSpec("sum", {}, (self, other))

    def __neg__(self) -> "PotentialSpec":
        return self.scaled(-1.0)

    def __sub__(self, other: "PotentialSpec") -> "PotentialSpec":
        return self + (-other)

    def __mul__(self, a: float) -> "PotentialSpec":
        return self.scaled(float(a))

    __rmul__ = __mul__

    def scaled(self, amplitude: float, dilation: float = 1.0) -> "PotentialSpec":
        """x -> amplitude * V(dilation * x)."""
        return PotentialSpec("scaled", {"amplitude": amplitude, "dilation": dilation}, (self,))

    def rescaled(self, theta: float) -> "PotentialSpec":
        """V_theta(x) = theta V(sqrt(theta) x); leaves the Kato norm unchanged."""
        return self.scaled(theta, math.sqrt(theta))

    def window(self, r_in: float, r_out: float) -> "PotentialSpec":
        return PotentialSpec("window", {"r_in": float(r_in), "r_out": float(r_out)}, (self,))

    def positive_part(self) -> "PotentialSpec":
        return PotentialSpec("sign-part", {"sign": "+"}, (self,))

    def negative_part(self) -> "PotentialSpec":
        return PotentialSpec("sign-part", {"sign": "-"}, (self,))

    # --- sampling ---------------------------------------------------------

    def sample(self, grid: RadialGrid | CartesianGrid, order: int = 4) -> np.ndarray:
        """Values used by discretized operators.

        Radial grids get r^2-weighted cell averages (finite for integrable
        singularities and exact for piecewise-constant profiles); Cartesian
        grids get nodal values.
        """
        if isinstance(grid, CartesianGrid):
            return np.asarray(self(grid.points), dtype=float)
        s, w = grid.sub_points(order)
        ws = w * s**2
        return np.sum(self.radial(s) * ws, axis=1) / np.sum(ws, axis=1)

    # --- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        params = {k: (np.asarray(v).tolist() if isinstance(v, np.ndarray) else v)
                  for k, v in self.params.items()}
        d = {"kind": self.kind, **params}
        if self.parts:
            d["parts"] = [q.to_dict() for q in self.parts]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PotentialSpec":
        d = dict(d)
        kind = d.pop("kind")
        d.pop("split_radius", None)
        parts = tuple(cls.from_dict(q) for q in d.pop("parts", ()))
        if kind == "tabulated":
            d = {k: np.asarray(v, dtype=float) for k, v in d.items()}
        return cls(kind, d, parts)

    def __repr__(self) -> str:
        return f"PotentialSpec({json.dumps(self.to_dict(), default=str)})"


def zero() -> PotentialSpec:
    return PotentialSpec("zero")


def ball_well(depth: float, radius: float = 1.0) -> PotentialSpec:
    return PotentialSpec("ball-well", {"radius": float(radius), "depth": float(depth)})


def unit_ball() -> PotentialSpec:
    """Indicator of the unit ball (a ball-well of depth -1)."""
    return ball_well(-1.0, 1.0)


def gaussian(amplitude: float, width: float = 1.0, center=None) -> PotentialSpec:
    params = {"amplitude": float(amplitude), "width": float(width)}
    if center is not None:
        params["center"] = [float(c) for c in center]
    return PotentialSpec("gaussian", params)


def inverse_decay(C: float, eps: float) -> PotentialSpec:
    """C / (|x|^{2+eps} + |x|^{2-eps})."""
    if not 0 < eps < 1:
        raise ValueError("inverse-decay needs 0 < eps < 1")
    return PotentialSpec("inverse-decay", {"C": float(C), "eps": float(eps)})


def tabulated(radii: np.ndarray, values: np.ndarray) -> PotentialSpec:
    return PotentialSpec("tabulated", {"radii": np.asarray(radii, float), "values": np.asarray(values, float)})


def load_catalog(path: str | Path) -> dict[str, tuple[PotentialSpec, float | None]]:
    """Read a TOML or JSON catalog: ``{name: {kind, params..., split_radius?}}``."""
    path = Path(path)
    if path.suffix == ".toml":
        import tomli

        data = tomli.loads(path.read_text())
    else:
        data = json.loads(path.read_text())
    out = {}
    for name, entry in data.items():
        out[name] = (PotentialSpec.from_dict(entry), entry.get("split_radius"))
    return out


# ---------------------------------------------------------------------------
# Kato integrals for radial densities
# ---------------------------------------------------------------------------

def _coulomb_shell_potential(edges: np.ndarray, dens: np.ndarray, probes: np.ndarray) -> np.ndarray:
    """int |V(y)|/|x-y| dy at |x| = probe for a piecewise-constant radial density.

    Newton's shell theorem, exact per cell including the cell cut by the probe.
    """
    a, b = edges[:-1], edges[1:]
    inner_mass = dens * 4.0 * np.pi / 3.0 * (b**3 - a**3)
    outer_moment = dens * 2.0 * np.pi * (b**2 - a**2)
    cum_mass = np.concatenate([[0.0], np.cumsum(inner_mass)])
    tail_moment = np.concatenate([np.cumsum(outer_moment[::-1])[::-1], [0.0]])
    out = np.empty(len(probes))
    for i, rho in enumerate(probes):
        c = int(np.searchsorted(edges, rho, side="right")) - 1
        if c >= len(dens):
            out[i] = cum_mass[-1] / rho
            continue
        c = max(c, 0)
        m = cum_mass[c] + dens[c] * 4.0 * np.pi / 3.0 * (rho**3 - a[c] ** 3)
        t = tail_moment[c + 1] + dens[c] * 2.0 * np.pi * (b[c] ** 2 - rho**2)
        out[i] = (m / rho if rho > 0 else 0.0) + t
    return out


def _truncated_kernel_integral(edges: np.ndarray, dens: np.ndarray, rho: float, cut: float) -> float:
    """int_{|x-y|<cut} |V(y)|/|x-y| dy at |x| = rho, piecewise-constant density.

    The sphere-averaged kernel (2 pi s / rho)(min(cut, rho+s) - |rho-s|)_+ is
    quadratic between the breakpoints rho, |cut-rho|, rho+cut, so Simpson's
    rule on the merged knot set is exact.
    """
    if rho == 0.0:
        hi = np.minimum(edges[1:], cut)
        lo = edges[:-1]
        return float(np.sum(dens * 2.0 * np.pi * np.clip(hi**2 - lo**2, 0.0, None)))
    bps = np.array([rho, cut - rho, rho - cut, rho + cut])
    bps = bps[(bps > edges[0]) & (bps < edges[-1])]
    knots = np.union1d(edges, bps)
    lo, hi = knots[:-1], knots[1:]
    mid = 0.5 * (lo + hi)
    cell = np.clip(np.searchsorted(edges, mid) - 1, 0, len(dens) - 1)

    def kern(s):
        return 2.0 * np.pi * s / rho * np.clip(np.minimum(cut, rho + s) - np.abs(rho - s), 0.0, None)

    simpson = (hi - lo) / 6.0 * (kern(lo) + 4.0 * kern(mid) + kern(hi))
    return float(np.sum(dens[cell] * simpson))


def _radial_density(V: PotentialSpec, grid: RadialGrid) -> np.ndarray:
    return np.abs(V.sample(grid))


def _cartesian_kato_field(V: PotentialSpec, grid: CartesianGrid, cut: float = math.inf) -> np.ndarray:
    """Kato integral at every node via FFT convolution with the cell-averaged 1/|x|."""
    h = grid.h
    m = grid.count
    ax = np.arange(-(m - 1), m) * h
    X, Y, Z = np.meshgrid(ax, ax, ax, indexing="ij")
    d = np.sqrt(X**2 + Y**2 + Z**2)
    with np.errstate(divide="ignore"):
        ker = np.where(d > 0, h**3 / d, UNIT_CUBE_COULOMB * h**2)
    ker = np.where(d < cut, ker, 0.0)
    dens = np.abs(V.sample(grid)).reshape(grid.shape)
    return signal.fftconvolve(dens, ker, mode="valid").ravel()


def _kato_on_grid(V: PotentialSpec, grid: RadialGrid | CartesianGrid) -> float:
    if isinstance(grid, CartesianGrid):
        return float(np.max(_cartesian_kato_field(V, grid)))
    if not V.is_radial:
        raise ValueError("non-radial potential needs a CartesianGrid")
    dens = _radial_density(V, grid)
    probes = np.concatenate([[0.0], grid.nodes, grid.edges[1:]])
    return float(np.max(_coulomb_shell_potential(grid.edges, dens, probes)))


def kato_norm(V: PotentialSpec, grid: RadialGrid | CartesianGrid, check_convergence: bool = False,
              divergence_ratio: float = 0.9) -> float:
    """sup_x int |V(y)| / |x - y| dy by cell-exact quadrature.

    With ``check_convergence`` the value is recomputed on two coarser grids;
    successive differences that fail to shrink signal a non-integrable
    singularity (KatoDivergenceError).
    """
    value = _kato_on_grid(V, grid)
    if check_convergence and isinstance(grid, RadialGrid) and grid.n >= 16:
        k2 = _kato_on_grid(V, grid.coarsened(2))
        k4 = _kato_on_grid(V, grid.coarsened(4))
        d1, d2 = abs(value - k2), abs(k2 - k4)
        if d1 > 1e-3 * max(value, 1e-300) and d1 > divergence_ratio * d2:
            raise KatoDivergenceError(
                f"Kato norm likely infinite: refinement increments {d2:.4g} -> {d1:.4g} do not decay"
            )
    return value


def kato_modulus(V: PotentialSpec, radii: Sequence[float], grid: RadialGrid | CartesianGrid
                 ) -> list[tuple[float, float]]:
    """eta(r) = sup_x int_{|x-y|<r} |V(y)|/|x-y| dy for each r in ``radii``."""
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0) or np.any(np.diff(radii) < 0):
        raise ValueError("radii must be positive and ascending")
    out = []
    if isinstance(grid, CartesianGrid):
        for r in radii:
            out.append((float(r), float(np.max(_cartesian_kato_field(V, grid, cut=r)))))
        return out
    dens = _radial_density(V, grid)
    probes = np.concatenate([[0.0], grid.nodes])
    support = dens > 0
    if support.any():
        # probes farther than r from the support see nothing
        reach = grid.edges[1:][support].max()
    else:
        return [(float(r), 0.0) for r in radii]
    for r in radii:
        p = probes[probes < reach + r]
        eta = max(_truncated_kernel_integral(grid.edges, dens, float(rho), float(r)) for rho in p)
        out.append((float(r), float(eta)))
    return out


@dataclass
class KatoReport:
    kato_norm: float
    modulus_samples: list[tuple[float, float]]
    class_verdict: bool

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def kato_report(V: PotentialSpec, grid: RadialGrid | CartesianGrid, radii: Sequence[float] | None = None,
                tolerance: float = 0.05) -> KatoReport:
    """Kato norm plus modulus samples; the class verdict asks eta(r_min) < tolerance."""
    if radii is None:
        radii = np.geomspace(max(grid.h, 1e-3), 4.0, 9)
    norm = kato_norm(V, grid)
    mod = kato_modulus(V, radii, grid)
    return KatoReport(norm, mod, bool(mod[0][1] < tolerance))


# ---------------------------------------------------------------------------
# Lorentz norm
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LorentzNorm:
    value: float
    tail_bound: float

    def __float__(self) -> float:
        return self.value


def _level_set_integral(vals: np.ndarray, vols: np.ndarray, power: float = 2.0 / 3.0) -> float:
    """int_0^inf mu{|f| > s}^power ds for a step function (exact)."""
    order = np.argsort(-vals)
    v = vals[order]
    mu = np.cumsum(vols[order])
    drops = v - np.concatenate([v[1:], [0.0]])
    return float(np.sum(drops * mu**power))


def lorentz_321_norm(V: PotentialSpec, grid: RadialGrid | CartesianGrid, tail_tolerance: float = 1e-2
                     ) -> LorentzNorm:
    """L^{3/2,1} norm in the convention int_0^inf mu{|V| > s}^{2/3} ds.

    For unbounded supports the part beyond the grid is bounded analytically
    from the declared decay exponent; a dominant tail raises TruncationWarning.
    """
    vals = np.abs(V.sample(grid))
    value = _level_set_integral(vals, grid.weights)
    tail = 0.0
    if isinstance(grid, RadialGrid) and not math.isfinite(V.support_radius):
        q = V.decay_exponent
        R = grid.r_max
        rr = np.linspace(R / 2, R, 64)
        C = float(np.max(np.abs(V.radial(rr)) * rr**q)) if math.isfinite(q) else 0.0
        if math.isfinite(q) and q <= 2.0:
            tail = math.inf
        elif C > 0:
            if math.isfinite(q):
                s0 = C * R ** (-q)

                def mu23(s):
                    return (4.0 * math.pi / 3.0 * max((C / s) ** (3.0 / q) - R**3, 0.0)) ** (2.0 / 3.0)

                tail = integrate.quad(mu23, 0.0, s0, limit=200)[0]
            else:
                # faster than any power: bound by the boundary value on the annulus R..2R
                tail = float(abs(V.radial(np.array([R]))[0])) * (4.0 * math.pi / 3.0 * 7 * R**3) ** (2 / 3)
        if tail > tail_tolerance * max(value, 1e-300):
            warnings.warn(f"Lorentz norm truncation: tail bound {tail:.3g} vs value {value:.3g}",
                          TruncationWarning, stacklevel=2)
    return LorentzNorm(value + tail if math.isfinite(tail) else math.inf, tail)


# ---------------------------------------------------------------------------
# splitting, mollification, hypotheses
# ---------------------------------------------------------------------------

def split_potential(V: PotentialSpec, R: float) -> tuple[PotentialSpec, PotentialSpec]:
    """V1 = V on |x| < R, V2 = the rest."""
    if R < 0:
        raise ValueError("split radius must be nonnegative")
    return V.window(0.0, R), V.window(R, math.inf)


def mollifier_profile(r: np.ndarray) -> np.ndarray:
    """Unnormalized exp(-1/(1-r^2)) on r < 1."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    m = r < 1.0
    out[m] = np.exp(-1.0 / (1.0 - r[m] ** 2))
    return out


_MOLLIFIER_MASS = integrate.quad(lambda r: 4 * np.pi * r**2 * float(mollifier_profile(np.array(r))), 0, 1)[0]


def _mollifier_cumulative(eps: float) -> Callable[[np.ndarray], np.ndarray]:
    """P(d) = int_0^d t rho_eps(t) dt, tabulated and interpolated."""
    t = np.linspace(0.0, eps, 4001)
    rho = mollifier_profile(t / eps) / (_MOLLIFIER_MASS * eps**3)
    P = integrate.cumulative_trapezoid(t * rho, t, initial=0.0)
    return lambda d: np.interp(d, t, P)


@dataclass(frozen=True)
class Mollified:
    potential: PotentialSpec
    kato_distance: float
    support_radius: float


def mollify(V: PotentialSpec, eps: float, grid: RadialGrid, order: int = 6) -> Mollified:
    """V * rho_eps for radial, compactly supported V, tabulated on a fine radial mesh."""
    if not V.is_radial or not math.isfinite(V.support_radius):
        raise ValueError("mollify needs a radial compactly supported potential")
    P = _mollifier_cumulative(eps)
    r_out = np.concatenate([[0.0], grid.nodes, grid.edges[1:]])
    r_out = np.unique(r_out[r_out <= V.support_radius + eps + grid.h])
    r_out = np.union1d(r_out, [V.support_radius + eps, V.support_radius + eps + grid.h])
    s, w = grid.sub_points(order)
    s, w = s.ravel(), w.ravel()
    vs = V.radial(s) * 4.0 * np.pi * s**2 * w
    keep = vs != 0
    s, vs = s[keep], vs[keep]
    vals = np.empty(len(r_out))
    for i, r in enumerate(r_out):
        if r == 0.0:
            kern = mollifier_profile(s / eps) / (_MOLLIFIER_MASS * eps**3)
        else:
            kern = (P(r + s) - P(np.abs(r - s))) / (2.0 * r * s)
        vals[i] = np.dot(kern, vs)
    vals[r_out >= V.support_radius + eps] = 0.0
    Ve = tabulated(r_out, vals)
    dist = kato_norm(Ve - V, grid)
    return Mollified(Ve, dist, V.support_radius + eps)


@dataclass
class HypothesisReport:
    kato_norm: float
    kato_v1: float
    kato_v2: float
    kato_negative: float
    kato_positive: float
    selfadjoint_margin: float
    selfadjoint_ok: bool
    thm_main_i: bool
    thm_main_ii_value: float
    thm_main_ii: bool
    thm_main_iii_value: float
    thm_main_iii: bool
    semigroup_ok: bool
    heat_margin: float
    heat_ok: bool
    decay_exponent: float
    decay_exponent_check: dict
    split_radius: float

    def to_json(self) -> str:
        d = asdict(self)
        return json.dumps(d, indent=2, default=lambda x: None if x is None else str(x))


def check_hypotheses(V: PotentialSpec, R: float, grid: RadialGrid | CartesianGrid) -> HypothesisReport:
    """Margins of the Kato-norm hypotheses; resonances are not decided here."""
    c3 = kato_constant(3)
    V1, V2 = split_potential(V, R)
    kV, k1, k2 = kato_norm(V, grid), kato_norm(V1, grid), kato_norm(V2, grid)
    kneg = kato_norm(V.negative_part(), grid)
    kpos = kato_norm(V.positive_part(), grid)
    ii = k2 * (1.0 + k1 / (4.0 * math.pi))
    q = V.decay_exponent
    finite = all(math.isfinite(x) for x in (kV, k1, k2))
    decay = {
        "short_range_gt_2": bool(q > 2.0),
        "decay_gt_1": bool(q > 1.0),
        "decay_gt_3": bool(q > 3.0),
    }
    return HypothesisReport(
        kato_norm=kV, kato_v1=k1, kato_v2=k2, kato_negative=kneg, kato_positive=kpos,
        selfadjoint_margin=SELFADJOINT_THRESHOLD - kneg,
        selfadjoint_ok=bool(finite and kneg < SELFADJOINT_THRESHOLD),
        thm_main_i=bool(math.isfinite(R) and math.isfinite(k1)),
        thm_main_ii_value=ii, thm_main_ii=bool(finite and ii < 4.0 * math.pi),
        thm_main_iii_value=kneg, thm_main_iii=bool(finite and kneg < c3),
        semigroup_ok=bool(finite and kneg < c3),
        heat_margin=c3 / 2.0 - kneg, heat_ok=bool(finite and kneg < c3 / 2.0),
        decay_exponent=q, decay_exponent_check=decay, split_radius=R,
    )
