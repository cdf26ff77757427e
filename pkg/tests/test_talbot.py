from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexlab.seqcore import ComplexSeq, RationalTime
from vortexlab.talbot import (
    KERNEL_FACTOR,
    PeriodicFourierProfile,
    bump,
    comb_plancherel,
    concentration_family,
    dirac_comb_evolution,
    free_evolution_direct,
    linear_talbot_eval,
    poisson_identity_check,
    talbot_carpet,
    talbot_modulus_law,
    truncation_tail,
)

ETA = 0.4
PAIRS = [(1, 3), (1, 5), (3, 5), (1, 7)]


def bump_profile(p: int, fraction: float = 0.95) -> PeriodicFourierProfile:
    radius = fraction * ETA * math.pi / p
    return PeriodicFourierProfile.from_function(lambda xi: bump(xi, radius), radius)


def evolved_gaussian(x, t, width):
    """Free evolution of exp(-x^2 / (2 width^2)) under i u_t + u_xx = 0."""
    z = width * width + 2j * t
    return np.sqrt(width * width / z) * np.exp(-x * x / (2 * z))


def test_kernel_factor():
    assert KERNEL_FACTOR == pytest.approx(np.sqrt(4j * math.pi))


def test_bump_shape():
    assert bump(0.0) == 1.0
    assert bump(np.array([1.0, -1.5]))[0] == 0.0
    assert np.all(bump(np.linspace(-0.99, 0.99, 11)) > 0)


@pytest.mark.parametrize("p,q", PAIRS)
def test_closed_form_matches_direct_sum(p, q):
    prof = bump_profile(p)
    rt = RationalTime(p, q)
    x = np.random.default_rng(p * 100 + q).uniform(-2, 2, 400)
    closed = linear_talbot_eval(prof, rt, x, ETA)
    direct = free_evolution_direct(prof.alpha, rt, x)
    assert np.max(np.abs(closed - direct)) < 1e-8


@pytest.mark.parametrize("p,q", PAIRS)
def test_modulus_periodic_and_off_support(p, q):
    prof = bump_profile(p)
    rt = RationalTime(p, q)
    x = np.linspace(-1, 1, 1001)
    mod = np.abs(linear_talbot_eval(prof, rt, x, ETA))
    shifted = np.abs(linear_talbot_eval(prof, rt, x + 1.0 / q, ETA))
    assert np.max(np.abs(mod - shifted)) < 1e-12
    y = q * x
    off = np.abs(y - np.round(y)) / q > ETA / q
    assert np.max(mod[off]) < 1e-10
    assert np.allclose(mod, talbot_modulus_law(prof, rt, x), atol=1e-12)


def test_closed_form_rejects_bad_input():
    prof = bump_profile(1)
    with pytest.raises(ValueError):
        linear_talbot_eval(prof, RationalTime(1, 4), [0.0], ETA)
    with pytest.raises(ValueError):
        linear_talbot_eval(prof, RationalTime(3, 5), [0.0], ETA)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 60), st.integers(1, 200))
def test_comb_plancherel_is_one(q, p):
    if math.gcd(p, q) != 1:
        return
    assert comb_plancherel(RationalTime(p, q)) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("p,q", [(1, 3), (2, 5), (1, 4)])
def test_gaussian_comb_matches_atoms(p, q):
    # Route 1: each narrow Gaussian of the comb evolved in closed form and summed.
    # Route 2: the evolved Dirac comb atoms convolved with the undispersed Gaussian.
    rt = RationalTime(p, q)
    width = 0.01
    x = np.linspace(-0.5, 0.5, 201)
    K = int(40 * 2 * rt.t / width)
    k = np.arange(-K, K + 1)
    direct = evolved_gaussian(x[:, None] - k[None, :], rt.t, width).sum(axis=1)
    atoms = sum(c * np.exp(-(x - m - l) ** 2 / (2 * width ** 2)) for m, c in dirac_comb_evolution(rt) for l in (-1, 0, 1))
    assert np.max(np.abs(direct - atoms)) < 1e-10


def test_banded_comb_within_truncation_tail():
    prof = bump_profile(1)
    rt = RationalTime(1, 3)
    K = 40
    short = ComplexSeq(prof.alpha.values[prof.alpha.K - K: prof.alpha.K + K + 1])
    x = np.linspace(-0.5, 0.5, 101)
    diff = np.max(np.abs(free_evolution_direct(short, rt, x) - linear_talbot_eval(prof, rt, x, ETA)))
    assert diff <= truncation_tail(prof.alpha, K, rt.t) + 1e-9


def test_concentration_grows_linearly():
    rt = RationalTime(1, 3)
    ratios = [concentration_family(lam, rt).ratio for lam in (8.0, 16.0, 32.0)]
    for r1, r2 in zip(ratios, ratios[1:]):
        assert 1.9 <= r2 / r1 <= 2.1


@pytest.mark.parametrize("t", [0.3, 0.7, 1.3])
def test_poisson_identity(t):
    chk = poisson_identity_check(t)
    assert chk.residual < 1e-6
    assert chk.prefactor_deviation < 1e-3


def test_direct_evolution_of_zero_is_zero():
    assert not np.any(free_evolution_direct(ComplexSeq.zeros(3), 0.2, np.linspace(0, 1, 5)))
    with pytest.raises(ValueError):
        free_evolution_direct(ComplexSeq.zeros(1), 0.0, [0.0])


def test_support_leak_small():
    assert bump_profile(1).support_leak() < 1e-12


def test_talbot_carpet_csv(tmp_path):
    prof = bump_profile(1)
    times = [RationalTime(1, 3), RationalTime(1, 5)]
    x = np.linspace(0, 1, 21)
    mat = talbot_carpet(prof.alpha, times, x, tmp_path / "carpet.csv")
    assert mat.shape == (2, 21)
    lines = (tmp_path / "carpet.csv").read_text().splitlines()
    assert len(lines) == 3 and lines[1].startswith("1,3,")
