from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from vortexlab.riemann import (
    F_ZERO_MODULUS,
    F_asymptotic,
    F_kernel,
    RiemannSeries,
    _frac_turns_times_square,
    _window_convergents,
    constructed_time,
    dyadic_block_lp,
    eval_R,
    flatness,
    holder_at_convergents,
    holder_estimate,
    increments,
    increments_at_rational,
    mu_in_window,
    near_rational_expansion,
    oscillation,
    report_json,
    structure_exponent,
)
from vortexlab.seqcore import RationalTime, continued_fraction

TWO_PI = 2 * math.pi


def F_fresnel(x: float) -> complex:
    """F from F'' = -sqrt(pi) e^{i pi/4} e^{-i x^2/4} + 2 pi delta, F(+-inf) = 0, via Fresnel integrals."""
    x = abs(x)
    z = (x / 2) * math.sqrt(2 / math.pi)
    S, C = special.fresnel(z)
    tail = math.sqrt(math.pi / 8) - math.sqrt(math.pi / 2) * C - 1j * (math.sqrt(math.pi / 8) - math.sqrt(math.pi / 2) * S)
    inner = -2j * np.exp(-1j * x * x / 4) - 2 * x * tail
    return complex(-math.sqrt(math.pi) * np.exp(1j * math.pi / 4) * inner)


def test_R_at_zero_is_exactly_zero():
    for x0 in (0.0, 0.3):
        assert eval_R(RiemannSeries(x0, 0.0, 5000), 0.0).value == 0


def test_R_periodic():
    s = RiemannSeries(0.0, 0.0, 10_000)
    t = np.linspace(0.05, 6.2, 41)
    diff = eval_R(s, t + TWO_PI).value - eval_R(s, t).value
    assert np.max(np.abs(diff)) < 1e-12


def test_R_at_pi_within_tail_bound():
    s = RiemannSeries(0.0, 0.0, 10_000)
    val = complex(eval_R(s, math.pi).value)
    assert abs(val + math.pi ** 2 / 2) <= s.tail_bound


def test_torsion_variant_matches_direct_sum():
    s = RiemannSeries(0.4, 0.3, 50)
    t = 0.7
    j = np.arange(-50, 51)
    w = j - 0.3
    direct = np.sum((np.exp(1j * t * w * w) - 1) / (w * w) * np.exp(1j * j * 0.4))
    assert abs(complex(eval_R(s, t).value) - direct) < 1e-12
    assert not s.plain
    with pytest.raises(ValueError):
        RiemannSeries(0.0, 60.0, 50)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 1.0), st.lists(st.integers(1, 2 ** 30 - 1), min_size=1, max_size=5))
def test_exact_phase_reduction(turns, js):
    j = np.array(js, dtype=np.int64)
    got = _frac_turns_times_square(turns, j)
    exact = np.array([float((Fraction(turns) * int(v) ** 2) % 1) for v in js])
    d = np.abs(got - exact)
    assert np.all(np.minimum(d, 1 - d) < 1e-12)


def test_increments_match_differences():
    s = RiemannSeries(0.0, 0.0, 2000)
    turns = 0.3141
    h = np.array([-1e-3, 1e-4, 2e-2])
    want = eval_R(s, TWO_PI * turns + h).value - eval_R(s, TWO_PI * turns).value
    assert np.max(np.abs(increments(s, turns, h) - want)) < 1e-9


def test_rational_increments_match_float_route():
    s = RiemannSeries(0.0, 0.0, 3000)
    rt = RationalTime(1, 3)
    h = np.array([1e-5, 1e-4])
    a = increments_at_rational(s, rt, h, tail_correction=False)
    b = increments(s, 1 / 3, h)
    assert np.max(np.abs(a - b)) < 1e-9


@pytest.mark.parametrize("x", [0.0, 0.5, 2.0, 7.5, 15.0])
def test_F_kernel_matches_fresnel_closed_form(x):
    assert abs(F_kernel(x).value - F_fresnel(x)) < 1e-9


def test_F_zero_value():
    val = F_kernel(0.0).value
    assert abs(val - 2 * math.sqrt(math.pi) * np.exp(3j * math.pi / 4)) < 1e-10
    assert abs(val) == pytest.approx(F_ZERO_MODULUS)


@pytest.mark.parametrize("x", [30.0, 60.0, 99.0])
def test_F_asymptotic_matches_quadrature(x):
    assert abs(F_asymptotic(x) - F_fresnel(x)) < 1e-9
    with pytest.raises(ValueError):
        F_asymptotic(1.0)


@pytest.mark.parametrize("p,q", [(1, 3), (1, 4), (2, 5)])
def test_near_rational_expansion(p, q):
    s = RiemannSeries(0.0, 0.0, 20_000)
    exp = near_rational_expansion(s, RationalTime(p, q), 1e-5)
    assert exp.in_window
    assert abs(exp.actual - exp.full) < 1e-6
    assert exp.discrepancy < 0.05 * abs(exp.actual)


def test_oscillation_near_rational_scale():
    s = RiemannSeries(0.0, 0.0, 20_000)
    delta = 1e-6
    osc = oscillation(s, 1 / 3, [delta], samples=8)[0]
    assert osc / (F_ZERO_MODULUS * math.sqrt(delta / 3)) == pytest.approx(1.0, abs=0.05)


def test_flatness_increasing():
    s = RiemannSeries(0.0, 0.0, 10_000)
    vals = [flatness(s, n).flatness for n in (16, 32, 64, 128, 256)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_block_parseval_at_p2():
    s = RiemannSeries(0.0, 0.0, 10_000)
    blk = dyadic_block_lp(s, 5, 2.0)
    assert blk.norm == pytest.approx(blk.parseval, rel=1e-10)


@pytest.mark.parametrize("p,target", [(1.0, 0.75), (2.0, 1.5), (4.0, 3.0), (6.0, 4.0)])
def test_structure_exponents(p, target):
    eta, _ = structure_exponent(RiemannSeries(0.0, 0.0, 10_000), p, range(4, 10))
    assert eta == pytest.approx(target, abs=0.1)


def test_holder_at_zero():
    est = holder_estimate(RiemannSeries(0.0, 0.0, 2 ** 14), 0.0, np.geomspace(1e-6, 1e-3, 9), samples=16)
    assert est.alpha_hat == pytest.approx(0.5, abs=0.05)
    assert est.r2 > 0.99
    assert "alpha_hat" in json.loads(report_json(est))


def test_constructed_time_denominators():
    ct = constructed_time(3.0, 5, 10 ** 6)
    cf = continued_fraction(ct.turns, 30)
    qs = [q for _, q in cf.convergents]
    for q in ct.denominators:
        assert q in qs and q % 2 == 1
    with pytest.raises(ValueError):
        constructed_time(1.5)
    with pytest.raises(ValueError):
        constructed_time(3.0, q1=4)


def test_holder_at_convergents_smoke():
    ct = constructed_time(2.5, 3, 10 ** 6)
    est = holder_at_convergents(RiemannSeries(0.0, 0.0, 2 ** 14), ct.t, lo=1e-8, hi=1e-2, samples=8,
                                denominators=ct.denominators)
    assert 0.5 <= est.alpha_hat <= 1.0
    assert est.mu_hat == pytest.approx(2.5, abs=0.3)


def test_mu_in_window_skips_vanishing_gauss_sums():
    cf = continued_fraction(math.sqrt(2) - 1, 20)
    used = _window_convergents(cf, 1e-12, 1.0)
    qs = [q for _, q, _ in used]
    assert 70 not in qs and 29 in qs
    assert all(q % 4 != 2 for q in qs)
    # mu_n = 2 + O(1 / log q) for a quadratic irrational.
    assert mu_in_window(cf, 1e-12, 1.0) == pytest.approx(2.0, abs=0.3)
