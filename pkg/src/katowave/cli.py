"""Batch experiment runner.

Usage: ``katowave [--config FILE] [--seed N] [--jobs N] [--tolerance-profile fast|strict]
[--output DIR] SUBCOMMAND``. Outputs go to ``DIR``, else ``$KATOWAVE_OUTPUT``,
else ``./runs``; every CSV row and JSON file carries the config hash and each
run writes ``manifest.json`` next to its artifacts.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import platform
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .grids import RadialGrid
from .potential import PotentialSpec, check_hypotheses, kato_report, lorentz_321_norm
from .resolvent import ResolutionError, lambda_cap, lambda_eps, spectral_measure_free
from .scattering import resonance_scan, spectral_measure_perturbed

SUBCOMMANDS = ("kato-norm", "hypotheses", "resonance-scan", "spectral-measure", "heat-check",
               "fk-mc", "besov-equiv", "dispersive-run", "all")
OUTPUT_ENV = "KATOWAVE_OUTPUT"

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION = 0, 2, 3

PROFILES = {
    "fast": {"scatter_n": 200, "heat_n": 600, "besov_n": 1000, "wave_h": 0.02, "paths": 20_000},
    "strict": {"scatter_n": 400, "heat_n": 1000, "besov_n": 2000, "wave_h": 0.01, "paths": 100_000},
}


@dataclass
class ExperimentConfig:
    potential: dict = field(default_factory=lambda: {"kind": "ball-well", "depth": 0.4, "radius": 1.0})
    split_radius: float = 1.0
    grid: dict = field(default_factory=dict)
    scan: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    profile: str = "fast"

    @classmethod
    def from_toml(cls, path: str | Path) -> "ExperimentConfig":
        import tomli

        with open(path, "rb") as fh:
            data = tomli.load(fh)
        known = {k: data.pop(k) for k in list(data) if k in cls.__dataclass_fields__}
        if data:
            raise ValueError(f"unknown config keys: {sorted(data)}")
        return cls(**known)

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def spec(self) -> PotentialSpec:
        return PotentialSpec.from_dict(self.potential)

    def knob(self, name: str):
        return self.grid.get(name, PROFILES[self.profile][name])


class Runner:
    def __init__(self, cfg: ExperimentConfig, out: Path, jobs: int = 1):
        self.cfg = cfg
        self.out = out
        self.jobs = max(1, jobs)
        self.tag = cfg.hash()
        self.V = cfg.spec()
        self.R = cfg.split_radius
        self.flags: dict[str, object] = {}
        out.mkdir(parents=True, exist_ok=True)

    # -- io ----------------------------------------------------------------

    def write_json(self, name: str, payload: dict) -> None:
        payload = {"config_hash": self.tag, **payload}
        (self.out / name).write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")

    def write_csv(self, name: str, header: list[str], rows) -> None:
        with open(self.out / name, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header + ["config_hash"])
            for row in rows:
                w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row] + [self.tag])

    def pmap(self, fn, items):
        if self.jobs == 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(self.jobs) as ex:
            return list(ex.map(fn, items))

    # -- subcommands -------------------------------------------------------

    def kato_norm(self):
        grid = RadialGrid(max(4.0, 4 * self.R), 2000)
        rep = kato_report(self.V, grid)
        lor = lorentz_321_norm(self.V, grid)
        self.write_json("kato.json", {"report": json.loads(rep.to_json()), "lorentz_321": float(lor),
                                      "lorentz_tail": lor.tail_bound})
        self.write_csv("kato_modulus.csv", ["radius", "modulus"], rep.modulus_samples)

    def hypotheses(self):
        rep = check_hypotheses(self.V, self.R, RadialGrid(max(4.0, 4 * self.R), 2000))
        self.write_json("hypotheses.json", {"report": json.loads(rep.to_json())})
        self.flags["hypotheses_pass"] = bool(rep.thm_main_i and rep.thm_main_ii and rep.thm_main_iii)

    def resonance_scan(self):
        grid = RadialGrid(max(2.0, 2 * self.R), self.cfg.knob("scatter_n"))
        lmax = min(self.cfg.scan.get("lambda_max", 50.0), lambda_cap(grid))
        lams = np.linspace(0.0, lmax, int(self.cfg.scan.get("lambda_count", 26)))
        scan = resonance_scan(grid, self.V, lams, tau=self.cfg.tolerances.get("tau"))
        self.write_csv("resonance_scan.csv", ["lambda", "sigma_min", "condition", "neumann_norm"], scan.rows())
        self.write_json("resonance_dips.json", {"tau": scan.tau, "dips": scan.minima, "has_dip": scan.has_dip,
                                                "truncated_at": scan.truncated_at})
        self.flags["resonance_dip"] = scan.has_dip

    def spectral_measure(self):
        grid = RadialGrid(max(2.0, 2 * self.R), self.cfg.knob("scatter_n"))
        lmax = min(self.cfg.scan.get("lambda_max", lambda_cap(grid)), lambda_cap(grid))
        lams = np.geomspace(1.0, lmax, int(self.cfg.scan.get("lambda_count", 8)))
        eps_list = self.cfg.scan.get("eps", [0.0, 0.1])
        items = [(float(l), float(e)) for e in eps_list for l in lams]

        def one(item):
            lam, eps = item
            free = spectral_measure_free(grid, lam, eps).opnorm_l1_linf()
            pert = spectral_measure_perturbed(grid, self.V, lam, eps).opnorm_l1_linf()
            root = math.sqrt(lambda_eps(lam, eps))
            return [lam, eps, free, root / (2 * math.pi), pert, pert / root]

        self.write_csv("spectral_measure.csv",
                       ["lambda", "eps", "free_norm", "free_expected", "perturbed_norm", "perturbed_over_sqrt"],
                       self.pmap(one, items))

    def heat_check(self):
        from .potential import kato_norm
        from .semigroup import assemble_H, kernel_bound_check, lplq_check

        grid = RadialGrid(10.0, self.cfg.knob("heat_n"))
        H = assemble_H(grid, self.V)
        kneg = kato_norm(self.V.negative_part(), RadialGrid(max(4.0, 4 * self.R), 2000))
        rows = []
        for t in self.cfg.scan.get("times", [0.1, 0.5, 1.0]):
            chk = kernel_bound_check(H, t, kneg)
            lp = lplq_check(H, t, 1, math.inf, kneg)
            rows.append([t, lp.measured, lp.bound, chk.max_violation])
            if chk.skipped:
                self.flags["heat_check_skipped"] = chk.reason
        self.write_csv("heat_check.csv", ["t", "measured_l1linf", "bound", "max_kernel_violation"], rows)

    def fk_mc(self):
        from .semigroup import assemble_H, feynman_kac_mc, heat_apply

        t = float(self.cfg.scan.get("fk_time", 1.0))
        probes = [float(p) for p in self.cfg.scan.get("probes", [0.0, 0.5, 1.5])]
        paths = int(self.cfg.scan.get("paths", self.cfg.knob("paths")))
        H = assemble_H(RadialGrid(12.0, 1200), self.V, check=False)
        grid_vals = heat_apply(H, t, np.ones(H.grid.size))
        seeds = np.random.SeedSequence(self.cfg.seed).spawn(len(probes))

        def one(k):
            est = feynman_kac_mc(self.V, [probes[k], 0.0, 0.0], t, paths=paths, seed=seeds[k])
            d = est.to_dict()
            d.update(probe=probes[k], seed=self.cfg.seed, spawn_index=k,
                     grid_value=float(np.interp(probes[k], H.grid.nodes, grid_vals)))
            return d

        self.write_json("fk_mc.json", {"t": t, "results": self.pmap(one, range(len(probes)))})

    def besov_equiv(self):
        from .besov import besov_profile, equivalence_ratio
        from .semigroup import assemble_H

        grid = RadialGrid(40.0, self.cfg.knob("besov_n"))
        r = grid.nodes
        widths = self.cfg.scan.get("widths", [0.5, 1.0, 2.0])
        fset = [np.exp(-(r / w) ** 2) for w in widths] + [(3 - 2 * (r / w) ** 2) * np.exp(-(r / w) ** 2)
                                                          for w in widths]
        s = float(self.cfg.scan.get("s", 1.0))
        q = float(self.cfg.scan.get("q", 1.0))
        thetas = self.cfg.scan.get("thetas", [2.0**k for k in range(-4, 5)])
        rep = equivalence_ratio(grid, self.V, fset, s, q, thetas)
        H0, H = assemble_H(grid, None), assemble_H(grid, self.V, check=False)
        rows = []
        for b, f in enumerate(fset):
            p0, p1 = besov_profile(H0, f), besov_profile(H, f)
            for j, c0, c1 in zip(p0.js, p0.coefficients, p1.coefficients):
                rows.append([b, int(j), c0, c1])
        self.write_csv("besov_equiv.csv", ["function", "j", "coeff_free", "coeff_perturbed"], rows)
        self.write_json("besov_summary.json", {"s": s, "q": q, "c_low": rep.c_low, "c_high": rep.c_high,
                                               "spread": rep.spread, "per_theta": rep.per_theta})

    def dispersive_run(self):
        from .wavelab import dispersive_ratio

        h = self.cfg.knob("wave_h")
        grid = RadialGrid.with_spacing(16.0, h)
        r = grid.nodes
        fset = [np.exp(-(r / s) ** 2) for s in self.cfg.scan.get("sigmas", [0.25, 0.35, 0.5])]
        times = np.geomspace(1.0, 8.0, int(self.cfg.scan.get("time_count", 8)))
        rep = dispersive_ratio(grid, self.V, fset, times, self.R)
        rows = []
        for b in range(len(fset)):
            for t, s, ratio in zip(times, rep.sup_norms[b], rep.ratios[b]):
                rows.append([b, t, s, ratio, "spectral-eigen"])
        self.write_csv("dispersive.csv", ["datum", "t", "sup_norm", "ratio", "method"], rows)
        hyp = check_hypotheses(self.V, self.R, RadialGrid(max(4.0, 4 * self.R), 2000)).to_json()
        self.write_json("dispersive_summary.json", {
            "c_star": rep.c_star, "besov_perturbed": rep.besov_norm.tolist(),
            "besov_free": rep.besov_norm_free.tolist(), "flatness": rep.flatness.tolist(),
            "outside_theorem": rep.outside_theorem, "notes": rep.notes,
            "hypothesis_report_hash": hashlib.sha256(hyp.encode()).hexdigest()[:16]})


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return str(x)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="katowave", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", type=Path, help="TOML experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--tolerance-profile", choices=tuple(PROFILES), default=None)
    p.add_argument("--output", type=Path)
    return p


def run(subcommand: str, cfg: ExperimentConfig, out_root: Path, jobs: int = 1) -> tuple[int, dict]:
    if subcommand not in SUBCOMMANDS:
        return EXIT_CONFIG, {"error": f"unknown subcommand {subcommand}"}
    names = SUBCOMMANDS[:-1] if subcommand == "all" else (subcommand,)
    runner = Runner(cfg, out_root / cfg.hash(), jobs)
    started = time.perf_counter()
    timings = {}
    for name in names:
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            getattr(runner, name.replace("-", "_"))()
        timings[name] = time.perf_counter() - t0
    manifest = {
        "config_hash": runner.tag,
        "config": cfg.to_dict(),
        "subcommands": list(names),
        "flags": runner.flags,
        "versions": {"katowave": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "wall_time": {"total": time.perf_counter() - started, **timings},
    }
    (runner.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return EXIT_OK, manifest


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.from_toml(args.config) if args.config else ExperimentConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        if args.tolerance_profile:
            cfg.profile = args.tolerance_profile
        if cfg.profile not in PROFILES:
            raise ValueError(f"unknown tolerance profile {cfg.profile!r}")
        cfg.spec()
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_root = args.output or Path(os.environ.get(OUTPUT_ENV, "runs"))
    try:
        code, manifest = run(args.subcommand, cfg, out_root, args.jobs)
    except (ResolutionError, ValueError, ArithmeticError) as exc:
        print(f"{args.subcommand}: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    print(json.dumps({"config_hash": manifest["config_hash"], "flags": manifest["flags"],
                      "output": str(out_root / manifest["config_hash"])}))
    return code


if __name__ == "__main__":
    sys.exit(main())
