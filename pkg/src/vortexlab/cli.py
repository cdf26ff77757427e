"""Command-line runner: one subcommand per experiment, JSON config plus flags.

Every run writes ``manifest.json`` and CSV/JSON artifacts into its own
directory (``runs/<timestamp>-<subcommand>`` unless ``--out`` is given).
Exit status: 0 when every in-run check passes, 1 on a failed numerical check
(the check is named on stderr), 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import hasimoto, nlscoeff, polyflow, riemann, selfsim, talbot
from .seqcore import ComplexSeq, RationalTime, gauss_sum_table, weighted_norm

WORKERS_ENV = "VORTEXLAB_WORKERS"
GOLDEN_TURNS = (math.sqrt(5.0) - 1.0) / 2.0

COMMON_DEFAULTS: Dict[str, object] = {"seed": 0, "out": None, "runs_dir": "runs"}

DEFAULTS: Dict[str, Dict[str, object]] = {
    "selfsim": {
        "a": None,
        "a_values": [0.2, 0.4, 0.6, 0.8, 1.0, 1.2],
        "S_factor": 20.0,
        "dx": None,
        "window": 0.1,
        "calibrate": True,
        "r2_min": 0.999,
    },
    "simulate": {
        "n": 2,
        "theta": 1.0,
        "gamma": 0.0,
        "t0": 1e-3,
        "T": 0.1,
        "n_save": 5,
        "x_half": 6.0,
        "nx": 1537,
        "margin": 8,
        "split_step": 0.02,
        "phase_per_cell": polyflow.PHASE_PER_CELL,
        "ortho_tol": hasimoto.ORTHO_TOL,
    },
    "talbot": {
        "mode": "linear",
        "p": 1,
        "q_values": [3, 5, 7],
        "eta": 0.4,
        "radius_fraction": 0.95,
        "nx": 2001,
        "closed_form_tol": 1e-8,
        "support_tol": 1e-10,
        "epsilon": 0.05,
        "sobolev_s": 1.0,
        "t0": 1e-3,
        "split_step": 0.01,
        "offlattice_factor": 2.0,
        "lambdas": [8.0, 16.0, 32.0],
        "concentration_band": [1.9, 2.1],
        "poisson_times": [0.3, 0.7, 1.3],
        "poisson_epsilon": 1e-4,
        "poisson_tol": 1e-6,
    },
    "riemann": {
        "mode": "trajectory",
        "x0": 0.0,
        "omega0": 0.0,
        "N": 10000,
        "tmin": 0.0,
        "tmax": 2.0 * math.pi,
        "nt": 4097,
        "flatness_N": [16, 32, 64, 128, 256],
        "holder_turns": [0.0, GOLDEN_TURNS],
        "holder_N": 65536,
        "holder_lo": 1e-7,
        "holder_hi": 1e-3,
        "holder_scales": 17,
        "holder_samples": 64,
        "holder_r2_min": 0.9,
        "block_p": [1.0, 2.0, 3.0, 4.0, 6.0, 8.0],
        "block_range": [4, 10],
    },
    "growth": {
        "mode": "both",
        "theta": 0.5,
        "times": [2.0 ** -k for k in range(4, 11)],
        "L": 8.0,
        "L_alt": 12.0,
        "r2_min": 0.9,
        "outside_factor": 3.0,
        "energy_theta": 2.0,
        "bands": [4, 16],
        "energy_tol": 0.02,
        "margin": 8,
        "split_step": 0.02,
    },
    "validate": {
        "gauss_q_max": 99,
        "gauss_tol": 1e-9,
        "mass_K": 8,
        "mass_tol": 1e-8,
        "single_mode_tol": 1e-8,
        "ortho_tol": hasimoto.ORTHO_TOL,
        "smoke_ring_tol": 1e-4,
        "talbot_tol": 1e-8,
        "riemann_period_tol": 1e-12,
        "poisson_tol": 1e-6,
    },
}


class ConfigError(ValueError):
    """Bad configuration: unknown key, wrong type or unknown subcommand."""


@dataclass
class Check:
    name: str
    value: float
    bound: float
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "bound": self.bound, "passed": self.passed}


@dataclass
class RunContext:
    subcommand: str
    config: Dict[str, object]
    out_dir: Path
    checks: List[Check] = field(default_factory=list)
    artifacts: List[str] = field(default_factory=list)
    results: Dict[str, object] = field(default_factory=dict)

    def check_below(self, name: str, value: float, bound: float) -> None:
        self.checks.append(Check(name, float(value), float(bound), bool(value < bound)))

    def check_above(self, name: str, value: float, bound: float) -> None:
        self.checks.append(Check(name, float(value), float(bound), bool(value >= bound)))

    def check_true(self, name: str, ok: bool) -> None:
        self.checks.append(Check(name, float(bool(ok)), 1.0, bool(ok)))

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[float]]) -> Path:
        path = self.out_dir / name
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([f"{float(v):.17g}" for v in row])
        self.artifacts.append(name)
        return path

    def write_json(self, name: str, payload: dict) -> Path:
        path = self.out_dir / name
        path.write_text(json.dumps(payload, indent=2, default=_json_default))
        self.artifacts.append(name)
        return path


def _json_default(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return str(v)


# --- parallel map ------------------------------------------------------------------

def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    return max(1, n)


def parallel_map(func: Callable, items: Sequence) -> list:
    """Ordered map; a process pool when the worker count is above one."""
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [func(it) for it in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))


# --- configuration -------------------------------------------------------------------

def _coerce(key: str, value, default):
    if default is None or value is None:
        return value
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{key}: expected true/false, got {value!r}")
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{key}: expected a list, got {value!r}")
        return value
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    return value


def load_config_file(path: str) -> Dict[str, object]:
    """Flat JSON object of keys; a manifest.json is accepted and its config reused."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    if "config" in data and "subcommand" in data:
        return dict(data["config"], subcommand=data["subcommand"])
    return data


def resolve_config(subcommand: str, file_cfg: Dict[str, object], flags: Dict[str, object]) -> Dict[str, object]:
    """Defaults, then the config file, then flags. Unknown keys raise ConfigError."""
    if subcommand not in DEFAULTS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    defaults = dict(COMMON_DEFAULTS, **DEFAULTS[subcommand])
    cfg = dict(defaults)
    file_cfg = dict(file_cfg)
    named = file_cfg.pop("subcommand", subcommand)
    if named != subcommand:
        raise ConfigError(f"config is for {named!r}, not {subcommand!r}")
    for source in (file_cfg, flags):
        for key, value in source.items():
            if key not in defaults:
                raise ConfigError(f"unknown config key {key!r} for {subcommand}")
            cfg[key] = _coerce(key, value, defaults[key])
    return cfg


def _flag_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 2 like every other config error
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vortexlab", description="Polygonal vortex filament and Riemann-function experiments.")
    subs = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name, defaults in DEFAULTS.items():
        sp = subs.add_parser(name, help=f"{name} experiment")
        sp.add_argument("--config", default=None, help="JSON config file (or a previous manifest.json)")
        for key in list(COMMON_DEFAULTS) + list(defaults):
            sp.add_argument(f"--{key.replace('_', '-')}", dest=key, type=_flag_value, default=argparse.SUPPRESS,
                            help=f"default: {json.dumps(dict(COMMON_DEFAULTS, **defaults)[key])}")
    return parser


# --- subcommands -----------------------------------------------------------------------

def _profile_theta(args) -> float:
    a, S, dx, window = args
    return selfsim.integrate_profile(a, S, dx, window).theta


def run_selfsim(ctx: RunContext) -> None:
    cfg = ctx.config
    out: Dict[str, object] = {}
    if cfg["a"] is not None:
        a = float(cfg["a"])
        S = cfg["S_factor"] / a
        dx = cfg["dx"] or min(2.0 ** -7, 0.25 / S)
        prof = selfsim.integrate_profile(a, S, dx, cfg["window"])
        stride = max(1, prof.s.size // 4096)
        rows = np.column_stack([prof.s, prof.G, prof.T])[::stride]
        ctx.write_csv("profile.csv", ["s", "G1", "G2", "G3", "T1", "T2", "T3"], rows)
        out.update({"a": a, "theta": prof.theta, "oscillation": prof.oscillation, "saturated": prof.saturated, "S": S, "dx": dx})
        ctx.check_below("profile tangent saturation", prof.oscillation, selfsim.SATURATION_TOL)
    if cfg["calibrate"]:
        a_values = [float(v) for v in cfg["a_values"]]
        S = cfg["S_factor"] / min(a_values)
        dx = cfg["dx"] or min(2.0 ** -7, 0.25 / S)
        thetas = parallel_map(_profile_theta, [(a, S, dx, cfg["window"]) for a in a_values])
        fit = selfsim.fit_angle_law(a_values, thetas)
        out["calibration"] = dict(fit.to_dict(), S=S, dx=dx)
        out["c_star"] = fit.c_star
        if "a" in out:
            out["theta_from_law"] = 2.0 * math.asin(math.exp(-fit.c_star * out["a"] ** 2))
        ctx.check_above("angle law linearity R^2", fit.r2, cfg["r2_min"])
    ctx.write_json("selfsim.json", out)
    ctx.results.update(out)


def run_simulate(ctx: RunContext) -> None:
    cfg = ctx.config
    spec = hasimoto.PolygonSpec.uniform(cfg["n"], cfg["theta"], cfg["gamma"])
    x = np.linspace(-cfg["x_half"], cfg["x_half"], cfg["nx"])
    t_save = np.geomspace(cfg["t0"], cfg["T"], cfg["n_save"])
    run = polyflow.simulate_polygon(spec, cfg["t0"], cfg["T"], t_save=t_save, x=x, margin=cfg["margin"],
                                    step=cfg["split_step"], phase_per_cell=cfg["phase_per_cell"])
    hasimoto.dump_curves(run.curves, ctx.out_dir / "curves.csv")
    ctx.artifacts.append("curves.csv")
    ctx.write_csv("trace.csv", ["t", "chi1", "chi2", "chi3"], np.column_stack([run.trace.t, run.trace.chi]))
    drift = max(hasimoto.orthonormality_error(run.trace.frames),
                max(hasimoto.orthonormality_error(c.frames) for c in run.curves))
    ctx.check_below("frame orthonormality", drift, cfg["ortho_tol"])
    tangent = max(c.tangent_consistency() for c in run.curves)
    res = {"metadata": run.metadata, "orthonormality": drift, "tangent_consistency": tangent}
    if run.residual is not None:
        res["binormal_residual_max"] = float(np.max(run.residual[1]))
    ctx.write_json("simulate.json", res)
    ctx.results.update(res)


def _talbot_profile(cfg, p: int) -> talbot.PeriodicFourierProfile:
    radius = cfg["radius_fraction"] * cfg["eta"] * math.pi / p
    return talbot.PeriodicFourierProfile.from_function(lambda xi: talbot.bump(xi, radius), radius)


def _nonlinear_talbot(args):
    cfg, q = args
    rt = RationalTime(cfg["p"], q)
    prof = _talbot_profile(cfg, cfg["p"])
    alpha = ComplexSeq(prof.alpha.values * cfg["epsilon"] / weighted_norm(prof.alpha, cfg["sobolev_s"]))
    x = np.linspace(0.0, 1.0, cfg["nx"])
    return nlscoeff.nonlinear_talbot_profile(alpha, rt, x, eta=cfg["eta"], s=cfg["sobolev_s"], t0=cfg["t0"], step=cfg["split_step"])


def run_talbot(ctx: RunContext) -> None:
    cfg = ctx.config
    mode = cfg["mode"]
    if mode not in ("linear", "nonlinear", "concentration", "poisson", "all"):
        raise ConfigError(f"talbot mode must be linear, nonlinear, concentration, poisson or all; got {mode!r}")
    out: Dict[str, object] = {}
    p = cfg["p"]
    if mode in ("linear", "all"):
        prof = _talbot_profile(cfg, p)
        x = np.linspace(0.0, 1.0, cfg["nx"])
        lin = {}
        for q in cfg["q_values"]:
            rt = RationalTime(p, q)
            closed = talbot.linear_talbot_eval(prof, rt, x, cfg["eta"])
            direct = talbot.free_evolution_direct(prof.alpha, rt, x)
            err = float(np.max(np.abs(closed - direct)))
            shifted = np.abs(talbot.linear_talbot_eval(prof, rt, x + 1.0 / q, cfg["eta"]))
            period = float(np.max(np.abs(shifted - np.abs(closed))))
            off = nlscoeff.lattice_distance(x, q) > cfg["eta"] / q
            leak = float(np.max(np.abs(closed[off]))) if np.any(off) else 0.0
            ctx.write_csv(f"talbot_linear_q{q}.csv", ["x", "re_u", "im_u", "abs_u"],
                          np.column_stack([x, closed.real, closed.imag, np.abs(closed)]))
            ctx.check_below(f"linear Talbot closed form q={q}", err, cfg["closed_form_tol"])
            ctx.check_below(f"linear Talbot 1/q-periodic modulus q={q}", period, cfg["closed_form_tol"])
            ctx.check_below(f"linear Talbot off-support q={q}", leak, cfg["support_tol"])
            lin[q] = {"closed_form_error": err, "periodicity_error": period, "off_support_max": leak, "K": prof.alpha.K}
        out["linear"] = lin
    if mode in ("nonlinear", "all"):
        results = parallel_map(_nonlinear_talbot, [(cfg, q) for q in cfg["q_values"]])
        nonlin = {}
        for q, res in zip(cfg["q_values"], results):
            ctx.write_csv(f"talbot_nonlinear_q{q}.csv", ["x", "abs_u"], np.column_stack([res.x, res.modulus]))
            ctx.check_below(f"nonlinear Talbot off-lattice q={q}", res.off_lattice_max,
                            cfg["offlattice_factor"] * cfg["epsilon"] * (1 + 1e-12))
            nonlin[q] = {"off_lattice_max": res.off_lattice_max, "epsilon": res.epsilon, "smallness": res.smallness}
        out["nonlinear"] = nonlin
    if mode in ("concentration", "all"):
        rt = RationalTime(p, cfg["q_values"][0])
        lams = [float(v) for v in cfg["lambdas"]]
        ratios = [talbot.concentration_family(lam, rt).ratio for lam in lams]
        ctx.write_csv("concentration.csv", ["lambda", "ratio"], zip(lams, ratios))
        lo, hi = cfg["concentration_band"]
        for (l1, r1), (l2, r2) in zip(zip(lams, ratios), zip(lams[1:], ratios[1:])):
            slope = r2 / r1
            ctx.check_true(f"concentration ratio({l2:g})/ratio({l1:g}) in [{lo}, {hi}]", lo <= slope <= hi)
        out["concentration"] = {"lambda": lams, "ratio": ratios}
    if mode in ("poisson", "all"):
        pois = []
        for t in cfg["poisson_times"]:
            chk = talbot.poisson_identity_check(float(t), cfg["poisson_epsilon"])
            ctx.check_below(f"Poisson identity t={t}", chk.residual, cfg["poisson_tol"])
            pois.append({"t": t, "residual": chk.residual, "K": chk.K, "J": chk.J})
        out["poisson"] = pois
    ctx.write_json("talbot.json", out)
    ctx.results.update(out)


def _holder_one(args):
    x0, N, turns, lo, hi, count, samples, seed = args
    series = riemann.RiemannSeries(x0, 0.0, N)
    return riemann.holder_estimate(series, 2 * math.pi * turns, np.geomspace(lo, hi, count), samples=samples, seed=seed)


def run_riemann(ctx: RunContext) -> None:
    cfg = ctx.config
    mode = cfg["mode"]
    if mode not in ("trajectory", "flatness", "holder", "blocks"):
        raise ConfigError(f"riemann mode must be trajectory, flatness, holder or blocks; got {mode!r}")
    series = riemann.RiemannSeries(cfg["x0"], cfg["omega0"], cfg["N"])
    out: Dict[str, object] = {"mode": mode}
    if mode == "trajectory":
        t = np.linspace(cfg["tmin"], cfg["tmax"], cfg["nt"])
        R = riemann.eval_R(series, t).value
        ctx.write_csv("trajectory.csv", ["t", "Re R", "Im R"], np.column_stack([t, R.real, R.imag]))
        out["tail_bound"] = series.tail_bound
        if cfg["tmin"] == 0.0:
            ctx.checks.append(Check("R(0) = 0", float(abs(R[0])), 0.0, bool(R[0] == 0)))
    elif mode == "flatness":
        res = [riemann.flatness(series, int(n)) for n in cfg["flatness_N"]]
        vals = [r.flatness for r in res]
        ctx.write_csv("flatness.csv", ["N", "flatness"], zip(cfg["flatness_N"], vals))
        ctx.check_true("flatness strictly increasing", bool(np.all(np.diff(vals) > 0)))
        out["flatness"] = vals
    elif mode == "holder":
        jobs = [(cfg["x0"], cfg["holder_N"], float(tu), cfg["holder_lo"], cfg["holder_hi"], cfg["holder_scales"],
                 cfg["holder_samples"], cfg["seed"]) for tu in cfg["holder_turns"]]
        ests = parallel_map(_holder_one, jobs)
        rows = []
        for est in ests:
            rows.extend((est.t, d, o) for d, o in zip(est.deltas, est.oscillations))
            ctx.check_above(f"Holder fit R^2 at t={est.t:.6g}", est.r2, cfg["holder_r2_min"])
        ctx.write_csv("holder.csv", ["t", "delta", "oscillation"], rows)
        out["estimates"] = [e.to_dict() for e in ests]
    else:
        first, last = cfg["block_range"]
        rows = []
        for p in cfg["block_p"]:
            eta, beta = riemann.structure_exponent(series, float(p), range(int(first), int(last)))
            rows.append((p, eta, beta))
        ctx.write_csv("blocks.csv", ["p", "eta", "beta"], rows)
        out["eta"] = {str(r[0]): r[1] for r in rows}
    ctx.write_json("riemann.json", out)
    ctx.results.update(out)


def run_growth(ctx: RunContext) -> None:
    cfg = ctx.config
    mode = cfg["mode"]
    if mode not in ("fourier", "energy", "both"):
        raise ConfigError(f"growth mode must be fourier, energy or both; got {mode!r}")
    out: Dict[str, object] = {}
    if mode in ("fourier", "both"):
        rep = polyflow.tangent_fourier_growth(cfg["theta"], cfg["times"], L=cfg["L"], L_alt=cfg["L_alt"],
                                              margin=cfg["margin"], step=cfg["split_step"])
        ctx.write_csv("growth.csv", ["t", "log_inv_t", "sup_inside", "sup_inside_alt", "sup_outside"],
                      np.column_stack([rep.times, np.log(1 / rep.times), rep.sup_inside, rep.sup_inside_alt, rep.sup_outside]))
        ctx.check_above("Fourier growth linear in log(1/t), R^2", rep.r2, cfg["r2_min"])
        ctx.check_below("outside-window sup bounded (max/median)", rep.outside_ratio, cfg["outside_factor"])
        out["fourier"] = rep.to_dict()
    if mode in ("energy", "both"):
        rep = polyflow.energy_density(polyflow.two_corner_spec(cfg["energy_theta"]), tuple(cfg["bands"]),
                                      margin=cfg["margin"], step=cfg["split_step"])
        ctx.write_csv("energy.csv", ["band", "value", "closed_form"],
                      [(n, v, rep.closed_form) for n, v in rep.band_values.items()])
        ctx.check_below("energy density vs closed form", rep.relative_error, cfg["energy_tol"])
        ctx.check_true("energy strict gap at t = 0", rep.strict_gap)
        out["energy"] = {"closed_form": rep.closed_form, "positive_time": rep.positive_time,
                         "bands": rep.band_values, "relative_error": rep.relative_error, "metadata": rep.metadata}
    ctx.write_json("growth.json", out)
    ctx.results.update(out)


# --- validate suites -------------------------------------------------------------------

def _suite_gauss(cfg) -> List[Check]:
    worst = 0.0
    for q in range(1, cfg["gauss_q_max"] + 1, 2):
        coprime = [-p for p in range(1, q + 1) if math.gcd(p, q) == 1]
        worst = max(worst, float(np.max(np.abs(np.abs(gauss_sum_table(q, coprime)) - math.sqrt(q)))))
    return [Check("Gauss sum modulus sqrt(q), odd q", worst, cfg["gauss_tol"], worst < cfg["gauss_tol"])]


def _suite_mass(cfg) -> List[Check]:
    rng = np.random.default_rng(cfg["seed"])
    K = cfg["mass_K"]
    alpha = ComplexSeq(0.05 * (rng.standard_normal(2 * K + 1) + 1j * rng.standard_normal(2 * K + 1)))
    end = nlscoeff.evolve_coeffs(alpha, 1.0, 1e-2)[-1]
    drift = abs(end.A.mass() - alpha.mass()) / alpha.mass()
    return [Check("coefficient mass conservation", drift, cfg["mass_tol"], drift < cfg["mass_tol"])]


def _suite_single_mode(cfg) -> List[Check]:
    alpha = ComplexSeq.from_dict({0: 1.0})
    ts = np.geomspace(1.0, 1e-2, 9)
    states = nlscoeff.evolve_coeffs(alpha, 1.0, 1e-2, t_eval=ts)
    got = np.array([s.A[0] for s in states])
    err = float(np.max(np.abs(got - nlscoeff.single_mode_closed_form(1.0, 1.0, ts))))
    return [Check("single-mode closed form", err, cfg["single_mode_tol"], err < cfg["single_mode_tol"])]


def _suite_frames(cfg) -> List[Check]:
    x = np.linspace(-2 * math.pi, 2 * math.pi, 1025)
    ts = np.linspace(0.0, 1.0, 5)
    curves = hasimoto.reconstruct_curve(hasimoto.smoke_ring_field, hasimoto.smoke_ring_sampler, x, ts,
                                        x0_index=512, dt=1e-3)
    ring = max(float(np.max(np.linalg.norm(c.chi - hasimoto.smoke_ring_curve(c.t, x), axis=1))) for c in curves)
    ring_ortho = max(hasimoto.orthonormality_error(c.frames) for c in curves)
    spec = hasimoto.PolygonSpec.uniform(1, 2.0)
    run = polyflow.simulate_polygon(spec, 1e-3, 0.05, t_save=[1e-3, 1e-2, 0.05], x=np.linspace(-4, 4, 513))
    poly_ortho = max(hasimoto.orthonormality_error(run.trace.frames), max(hasimoto.orthonormality_error(c.frames) for c in run.curves))
    tol = cfg["ortho_tol"]
    return [
        Check("smoke ring curve error", ring, cfg["smoke_ring_tol"], ring < cfg["smoke_ring_tol"]),
        Check("frame orthonormality (explicit solution)", ring_ortho, tol, ring_ortho < tol),
        Check("frame orthonormality (polygon pipeline)", poly_ortho, tol, poly_ortho < tol),
    ]


def _suite_talbot(cfg) -> List[Check]:
    radius = 0.95 * 0.4 * math.pi
    prof = talbot.PeriodicFourierProfile.from_function(lambda xi: talbot.bump(xi, radius), radius)
    rng = np.random.default_rng(cfg["seed"])
    x = rng.uniform(-1.0, 1.0, 257)
    worst = 0.0
    for q in (3, 5):
        rt = RationalTime(1, q)
        diff = talbot.linear_talbot_eval(prof, rt, x, 0.4) - talbot.free_evolution_direct(prof.alpha, rt, x)
        worst = max(worst, float(np.max(np.abs(diff))))
    return [Check("linear Talbot closed form vs direct sum", worst, cfg["talbot_tol"], worst < cfg["talbot_tol"])]


def _suite_riemann(cfg) -> List[Check]:
    series = riemann.RiemannSeries(0.0, 0.0, 10_000)
    t = np.linspace(0.1, 6.0, 33)
    r0 = abs(complex(riemann.eval_R(series, 0.0).value))
    per = float(np.max(np.abs(riemann.eval_R(series, t + 2 * math.pi).value - riemann.eval_R(series, t).value)))
    half = abs(complex(riemann.eval_R(series, math.pi).value) + math.pi ** 2 / 2)
    tol = cfg["riemann_period_tol"]
    return [
        Check("R(0) = 0", r0, 0.0, r0 == 0.0),
        Check("R 2 pi-periodic", per, tol, per < tol),
        Check("R(pi) = -pi^2/2 within tail bound", half, series.tail_bound, half <= series.tail_bound),
    ]


def _suite_poisson(cfg) -> List[Check]:
    worst = max(talbot.poisson_identity_check(t).residual for t in (0.3, 0.7, 1.3))
    return [Check("regularized Poisson identity", worst, cfg["poisson_tol"], worst < cfg["poisson_tol"])]


SUITES: Dict[str, Callable[[dict], List[Check]]] = {
    "gauss_sum": _suite_gauss,
    "mass_conservation": _suite_mass,
    "single_mode": _suite_single_mode,
    "frame_integrity": _suite_frames,
    "linear_talbot": _suite_talbot,
    "riemann_basics": _suite_riemann,
    "poisson_identity": _suite_poisson,
}


def _run_suite(args) -> List[Check]:
    name, cfg = args
    return SUITES[name](cfg)


def run_validate(ctx: RunContext) -> None:
    names = list(SUITES)
    results = parallel_map(_run_suite, [(n, ctx.config) for n in names])
    summary = {}
    for name, checks in zip(names, results):
        ctx.checks.extend(checks)
        summary[name] = [c.to_dict() for c in checks]
    ctx.write_json("validate.json", summary)
    ctx.results["suites"] = names


RUNNERS: Dict[str, Callable[[RunContext], None]] = {
    "selfsim": run_selfsim,
    "simulate": run_simulate,
    "talbot": run_talbot,
    "riemann": run_riemann,
    "growth": run_growth,
    "validate": run_validate,
}


# --- entry point -------------------------------------------------------------------------

def _out_dir(cfg: Dict[str, object], subcommand: str) -> Path:
    if cfg["out"]:
        return Path(str(cfg["out"]))
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
    return Path(str(cfg["runs_dir"])) / f"{stamp}-{subcommand}"


def run(subcommand: str, config: Dict[str, object]) -> int:
    """Execute one subcommand with a resolved config; returns the exit status."""
    out_dir = _out_dir(config, subcommand)
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(subcommand, config, out_dir)
    start = time.perf_counter()
    np.random.seed(int(config["seed"]))
    RUNNERS[subcommand](ctx)
    failed = [c for c in ctx.checks if not c.passed]
    polyflow.write_manifest(out_dir / "manifest.json", config, {
        "subcommand": subcommand,
        "workers": worker_count(),
        "artifacts": ctx.artifacts,
        "checks": [c.to_dict() for c in ctx.checks],
        "suites": ctx.results.get("suites", [subcommand]),
        "passed": not failed,
        "wall_seconds": time.perf_counter() - start,
    })
    for c in ctx.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.6g} (bound {c.bound:.6g})")
    print(f"artifacts in {out_dir}")
    for c in failed:
        print(f"invariant failed: {c.name} (value {c.value:.6g}, bound {c.bound:.6g})", file=sys.stderr)
    return 1 if failed else 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = vars(parser.parse_args(argv))
        subcommand = args.pop("subcommand")
        cfg_path = args.pop("config")
        file_cfg = load_config_file(cfg_path) if cfg_path else {}
        config = resolve_config(subcommand, file_cfg, args)
        worker_count()
        return run(subcommand, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
