"""Acceptance criteria, one test each, with a PASS/FAIL line in the terminal summary."""

from __future__ import annotations

import json
import math
import time
from contextlib import contextmanager

import numpy as np

from conftest import ACCEPTANCE_LINES
from vortexlab import cli
from vortexlab.hasimoto import (
    reconstruct_curve,
    rigid_align,
    smoke_ring_curve,
    smoke_ring_field,
    smoke_ring_sampler,
    soliton_curve,
    soliton_field,
    soliton_sampler,
)
from vortexlab.nlscoeff import evolve_coeffs, lattice_distance, nonlinear_talbot_profile, single_mode_closed_form
from vortexlab.polyflow import corner_vs_riemann, energy_density, tangent_fourier_growth, two_corner_spec
from vortexlab.riemann import RiemannSeries, constructed_time, eval_R, flatness, holder_at_convergents, holder_estimate
from vortexlab.selfsim import calibrate
from vortexlab.seqcore import ComplexSeq, RationalTime, gauss_sum_table, weighted_norm
from vortexlab.talbot import (
    PeriodicFourierProfile,
    bump,
    concentration_family,
    free_evolution_direct,
    linear_talbot_eval,
    poisson_identity_check,
)

GOLDEN_TURNS = (math.sqrt(5.0) - 1.0) / 2.0
ETA = 0.4
TALBOT_PAIRS = [(1, 3), (1, 5), (3, 5), (1, 7)]
A_GRID = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2]


class Criterion:
    def __init__(self, number: int, title: str, budget: float):
        self.number, self.title, self.budget = number, title, budget
        self.details: list = []
        self.ok = True

    def check(self, label: str, passed: bool, value=None) -> None:
        self.ok &= bool(passed)
        shown = f"{label}={value:.4g}" if isinstance(value, (int, float)) else label
        self.details.append(shown if passed else f"{shown} [fail]")


@contextmanager
def criterion(number: int, title: str, budget: float):
    crit = Criterion(number, title, budget)
    start = time.perf_counter()
    try:
        yield crit
    finally:
        elapsed = time.perf_counter() - start
        crit.check("runtime_s", elapsed < budget, elapsed)
        line = f"criterion {number}: {'PASS' if crit.ok else 'FAIL'}  {title}  ({'; '.join(crit.details)})"
        ACCEPTANCE_LINES.append(line)
        print(line)
    assert crit.ok, line


def bump_profile(p: int) -> PeriodicFourierProfile:
    radius = 0.95 * ETA * math.pi / p
    return PeriodicFourierProfile.from_function(lambda xi: bump(xi, radius), radius)


def test_criterion_01_gauss_sum_modulus():
    with criterion(1, "Gauss sums have modulus sqrt(q) for odd q", 1.0) as crit:
        worst = 0.0
        for q in range(1, 100, 2):
            coprime = [-p for p in range(1, q + 1) if math.gcd(p, q) == 1]
            worst = max(worst, float(np.max(np.abs(np.abs(gauss_sum_table(q, coprime)) - math.sqrt(q)))))
        crit.check("max_dev", worst < 1e-9, worst)


def test_criterion_02_mass_conservation():
    with criterion(2, "coefficient mass conserved, K = 32", 60.0) as crit:
        rng = np.random.default_rng(2024)
        alpha = ComplexSeq(0.02 * (rng.standard_normal(65) + 1j * rng.standard_normal(65)))
        states = evolve_coeffs(alpha, 1.0, 1e-2, t_eval=np.geomspace(1.0, 1e-2, 9))
        drift = max(abs(s.A.mass() - alpha.mass()) / alpha.mass() for s in states)
        crit.check("rel_drift", drift < 1e-8, drift)


def test_criterion_03_single_mode():
    with criterion(3, "single-mode closed form", 1.0) as crit:
        ts = np.geomspace(1.0, 1e-2, 41)
        amp = 0.7 * np.exp(0.3j)
        got = np.array([s.A[0] for s in evolve_coeffs(ComplexSeq.from_dict({0: amp}), 1.0, 1e-2, t_eval=ts)])
        # Hand solution: modulus fixed, phase -c0 |amp|^2 log t with c0 = 1/4.
        hand = amp * np.exp(-0.25j * abs(amp) ** 2 * np.log(ts))
        mod_err = float(np.max(np.abs(np.abs(got) - np.abs(hand))))
        phase_err = float(np.max(np.abs(np.angle(got / hand))))
        crit.check("modulus_err", mod_err < 1e-8, mod_err)
        crit.check("phase_err", phase_err < 1e-8, phase_err)
        lib = float(np.max(np.abs(single_mode_closed_form(amp, 1.0, ts) - hand)))
        crit.check("library_closed_form", lib < 1e-12, lib)


def test_criterion_04_frame_integrity(tmp_path):
    with criterion(4, "frame orthonormality across the validate suite", 60.0) as crit:
        code = cli.main(["validate", "--out", str(tmp_path / "v")])
        man = json.loads((tmp_path / "v" / "manifest.json").read_text())
        frame_checks = [c for c in man["checks"] if "orthonormality" in c["name"]]
        crit.check("exit_code_0", code == 0)
        crit.check("stages_checked", len(frame_checks) >= 2, len(frame_checks))
        worst = max(c["value"] for c in frame_checks)
        crit.check("max_drift", worst < 1e-8, worst)


def soliton_error(alpha: float, dx: float, half: float = 12.0) -> float:
    n = int(round(2 * half / dx))
    x = -half + dx * np.arange(n + 1)
    curves = reconstruct_curve(soliton_field(alpha), soliton_sampler(alpha), x, np.linspace(0.0, 1.0, 5), x0_index=n // 2, dt=dx)
    R, b = rigid_align(curves[0].chi, soliton_curve(alpha, 0.0, x))
    return max(float(np.max(np.linalg.norm(c.chi @ R.T + b - soliton_curve(alpha, c.t, x), axis=1))) for c in curves)


def test_criterion_05_explicit_solutions():
    with criterion(5, "smoke ring and soliton end-to-end", 120.0) as crit:
        dx = 2.0 ** -7
        half = int(round(math.pi / dx))
        x = dx * np.arange(-half, half + 1)
        curves = reconstruct_curve(smoke_ring_field, smoke_ring_sampler, x, np.linspace(0, 1, 9), x0_index=x.size // 2, dt=dx)
        ring = max(float(np.max(np.linalg.norm(c.chi - smoke_ring_curve(c.t, x), axis=1))) for c in curves)
        crit.check("smoke_ring_err", ring < 1e-4, ring)
        steps = [2.0 ** -5, 2.0 ** -6, 2.0 ** -7]
        errs = [soliton_error(0.5, h) for h in steps]
        order = float(np.polyfit(np.log(steps), np.log(errs), 1)[0])
        crit.check("soliton_err", errs[-1] < 1e-4, errs[-1])
        crit.check("soliton_order", order >= 1.8, order)


def test_criterion_06_self_similar_angle_law():
    with criterion(6, "self-similar angle law", 120.0) as crit:
        short = calibrate(A_GRID, 20.0)
        long = calibrate(A_GRID, 40.0)
        crit.check("r2", short.r2 >= 0.999, short.r2)
        crit.check("c_star", True, short.c_star)
        rel = abs(long.c_star - short.c_star) / short.c_star
        crit.check("S_to_2S_change", rel < 0.01, rel)


def test_criterion_07_linear_talbot():
    with criterion(7, "linear Talbot closed form", 30.0) as crit:
        rng = np.random.default_rng(7)
        worst_closed = worst_period = worst_leak = 0.0
        for p, q in TALBOT_PAIRS:
            prof = bump_profile(p)
            rt = RationalTime(p, q)
            x = np.sort(rng.uniform(-1.0, 1.0, 2000))
            closed = linear_talbot_eval(prof, rt, x, ETA)
            worst_closed = max(worst_closed, float(np.max(np.abs(closed - free_evolution_direct(prof.alpha, rt, x)))))
            shifted = np.abs(linear_talbot_eval(prof, rt, x + 1.0 / q, ETA))
            worst_period = max(worst_period, float(np.max(np.abs(shifted - np.abs(closed)))))
            off = lattice_distance(x, q) > ETA / q
            worst_leak = max(worst_leak, float(np.max(np.abs(closed[off]))))
        crit.check("closed_vs_direct", worst_closed < 1e-8, worst_closed)
        crit.check("periodicity", worst_period < 1e-12, worst_period)
        crit.check("off_support", worst_leak < 1e-10, worst_leak)


def test_criterion_08_nonlinear_talbot():
    with criterion(8, "nonlinear Talbot almost vanishes off the lattice", 300.0) as crit:
        eps = 0.05
        x = np.linspace(0.0, 1.0, 2001)
        for q in (3, 5, 7):
            prof = bump_profile(1)
            alpha = ComplexSeq(prof.alpha.values * eps / weighted_norm(prof.alpha, 1.0))
            res = nonlinear_talbot_profile(alpha, RationalTime(1, q), x, eta=ETA, s=1.0, t0=1e-3, step=0.01)
            crit.check(f"q{q}_offlattice", res.off_lattice_max <= 2 * eps, res.off_lattice_max)


def test_criterion_09_concentration():
    with criterion(9, "concentration ratio grows linearly", 30.0) as crit:
        rt = RationalTime(1, 3)
        ratios = [concentration_family(lam, rt).ratio for lam in (8.0, 16.0, 32.0)]
        for lam, r1, r2 in zip((8, 16), ratios, ratios[1:]):
            crit.check(f"ratio_{2 * lam}_over_{lam}", 1.9 <= r2 / r1 <= 2.1, r2 / r1)


def test_criterion_10_riemann_series():
    with criterion(10, "Riemann series basics", 10.0) as crit:
        series = RiemannSeries(0.0, 0.0, 10_000)
        crit.check("R0_exact", eval_R(series, 0.0).value == 0)
        t = np.linspace(0.05, 6.2, 101)
        period = float(np.max(np.abs(eval_R(series, t + 2 * math.pi).value - eval_R(series, t).value)))
        crit.check("periodicity", period < 1e-12, period)
        at_pi = abs(complex(eval_R(series, math.pi).value) + math.pi ** 2 / 2)
        crit.check("R_pi_vs_tail_bound", at_pi <= series.tail_bound, at_pi)


def test_criterion_11_holder_panel():
    with criterion(11, "Hoelder exponents and the mu-alpha panel", 300.0) as crit:
        zero = holder_estimate(RiemannSeries(0.0, 0.0, 2 ** 16), 0.0, np.geomspace(1e-7, 1e-3, 17), samples=64)
        golden = holder_estimate(RiemannSeries(0.0, 0.0, 2 ** 16), 2 * math.pi * GOLDEN_TURNS, np.geomspace(1e-7, 1e-3, 17), samples=64)
        crit.check("alpha_at_0", abs(zero.alpha_hat - 0.5) <= 0.05, zero.alpha_hat)
        crit.check("r2_at_0", zero.r2 >= 0.9, zero.r2)
        crit.check("alpha_at_golden", abs(golden.alpha_hat - 0.75) <= 0.07, golden.alpha_hat)
        crit.check("r2_at_golden", golden.r2 >= 0.9, golden.r2)
        series = RiemannSeries(0.0, 0.0, 2 ** 20)
        mus, alphas = [], []
        for mu in np.arange(2.0, 4.01, 0.25):
            for q1 in (3, 5, 7, 9):
                ct = constructed_time(float(mu), q1, q_max=10 ** 8)
                try:
                    est = holder_at_convergents(series, ct.t, lo=1e-10, hi=3e-3, samples=8, denominators=ct.denominators)
                except ValueError:
                    continue
                mus.append(est.mu_hat)
                alphas.append(est.alpha_hat)
        slope = float(np.polyfit(1.0 / (2.0 * np.array(mus)), np.array(alphas) - 0.5, 1)[0])
        crit.check("panel_size", len(mus) >= 10, len(mus))
        crit.check("panel_slope", abs(slope - 1.0) <= 0.15, slope)


def test_criterion_12_intermittency():
    with criterion(12, "flatness strictly increasing", 120.0) as crit:
        series = RiemannSeries(0.0, 0.0, 10_000)
        vals = [flatness(series, n).flatness for n in (16, 32, 64, 128, 256)]
        crit.check("increasing", bool(np.all(np.diff(vals) > 0)))
        crit.check("F_256", True, vals[-1])


def test_criterion_13_corner_trajectory():
    with criterion(13, "corner trajectory approaches the Riemann curve", 1800.0) as crit:
        theta = 1.0
        sizes = (8, 16, 32)
        for t0 in (1e-2, 1e-3):
            devs = [corner_vs_riemann(n, 1.0, theta, 0.0, 0.5, t0=t0).deviation for n in sizes]
            crit.check(f"monotone_t0={t0:g}", devs[0] > devs[1] > devs[2])
            crit.check(f"dev_n32_t0={t0:g}", devs[-1] < 0.1 * theta, devs[-1])
        # Anchor sweep on the common window [1e-2, T] so only the anchor differs.
        for n in sizes:
            a = corner_vs_riemann(n, 1.0, theta, 0.0, 0.5, t0=1e-2, compare_from=1e-2).deviation
            b = corner_vs_riemann(n, 1.0, theta, 0.0, 0.5, t0=1e-3, compare_from=1e-2).deviation
            crit.check(f"anchor_spread_n{n}", abs(a - b) <= 0.2 * max(a, b), abs(a - b) / max(a, b))


def test_criterion_14_fourier_growth():
    with criterion(14, "logarithmic growth of the windowed transform", 900.0) as crit:
        rep = tangent_fourier_growth(0.5, [2.0 ** -k for k in range(4, 11)])
        crit.check("r2", rep.r2 >= 0.9, rep.r2)
        crit.check("slope", rep.slope > 0, rep.slope)
        crit.check("outside_ratio", rep.outside_ratio <= 3.0, rep.outside_ratio)


def test_criterion_15_energy_density():
    with criterion(15, "band energy of the t = 0 trace", 120.0) as crit:
        rep = energy_density(two_corner_spec(2.0), bands=(4.0, 16.0))
        rel16 = abs(rep.band_values[16.0] - rep.closed_form) / rep.closed_form
        crit.check("rel_err_band16", rel16 < 0.02, rel16)
        crit.check("strict_gap", rep.closed_form < rep.positive_time, rep.positive_time - rep.closed_form)


def test_criterion_16_poisson_identity():
    with criterion(16, "regularized Poisson identity", 10.0) as crit:
        for t in (0.3, 0.7, 1.3):
            chk = poisson_identity_check(t)
            crit.check(f"residual_t={t}", chk.residual < 1e-6, chk.residual)
