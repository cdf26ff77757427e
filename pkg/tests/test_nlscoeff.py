from __future__ import annotations

import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from vortexlab.nlscoeff import (
    C0,
    CoeffState,
    SmallnessError,
    anchor_state,
    cubic_band_sum,
    dump_trajectory,
    evaluate_u,
    evaluate_u_at_rational,
    evolve_coeffs,
    lattice_distance,
    nonlinear_talbot_profile,
    nonresonant_sum,
    periodic_system_rhs,
    pseudo_conformal,
    resonant_partition,
    single_mode_closed_form,
    system_rhs,
)
from vortexlab.seqcore import ComplexSeq, RationalTime


def random_seq(K: int, scale: float, seed: int) -> ComplexSeq:
    rng = np.random.default_rng(seed)
    return ComplexSeq(scale * (rng.standard_normal(2 * K + 1) + 1j * rng.standard_normal(2 * K + 1)))


def brute_force_rhs(t: float, A: ComplexSeq, c0: float = C0) -> np.ndarray:
    """Triple loop over the nonresonant set plus the resonant diagonal term."""
    K = A.K
    band = range(-K, K + 1)
    mass = A.mass()
    out = np.zeros(2 * K + 1, dtype=complex)
    for k in band:
        total = A[k] * (2 * mass - abs(A[k]) ** 2)
        _, nonres = resonant_partition(k, band)
        for tr in nonres:
            total += cmath.exp(-1j * tr.omega / (4 * t)) * A[tr.j1] * A[tr.j2].conjugate() * A[tr.j3]
        out[k + K] = -1j * c0 / t * total
    return out


def test_cubic_band_sum_matches_triple_loop():
    w = random_seq(4, 1.0, 1).values
    K = 4
    expected = np.zeros_like(w)
    for k in range(-K, K + 1):
        for j1 in range(-K, K + 1):
            for j2 in range(-K, K + 1):
                j3 = k - j1 + j2
                if abs(j3) <= K:
                    expected[k + K] += w[j1 + K] * np.conj(w[j2 + K]) * w[j3 + K]
    assert np.max(np.abs(cubic_band_sum(w) - expected)) < 1e-12


@pytest.mark.parametrize("t", [0.05, 0.3, 2.0])
def test_system_rhs_matches_brute_force(t):
    A = random_seq(3, 0.3, 7)
    got = system_rhs(CoeffState(t, A)).values
    assert np.max(np.abs(got - brute_force_rhs(t, A))) < 1e-12


def test_nonresonant_sum_drops_the_diagonal():
    t, A = 0.4, random_seq(2, 0.5, 3)
    full = 1j * t / C0 * brute_force_rhs(t, A)
    diag = A.values * (2 * A.mass() - np.abs(A.values) ** 2)
    assert np.max(np.abs(nonresonant_sum(t, A.values) - (full - diag))) < 1e-12


def test_nonresonant_phase_identity_exhaustive():
    for K in range(1, 9):
        band = range(-K, K + 1)
        for k in band:
            resonant, nonres = resonant_partition(k, band)
            for tr in nonres:
                assert tr.omega == 2 * tr.m != 0
            for j1, j2, j3 in resonant:
                assert j1 == k or j2 == j1 or j2 == j3


def test_single_mode_closed_form():
    ts = np.geomspace(1.0, 1e-2, 25)
    states = evolve_coeffs(ComplexSeq.from_dict({0: 1.0}), 1.0, 1e-2, t_eval=ts)
    got = np.array([s.A[0] for s in states])
    # Hand solution of i A' = c0 |A|^2 A / t with |A| = 1: A = exp(-i c0 log t).
    expected = np.exp(-1j * C0 * np.log(ts))
    assert np.max(np.abs(got - expected)) < 1e-8
    assert np.max(np.abs(got - single_mode_closed_form(1.0, 1.0, ts))) < 1e-8


@settings(max_examples=8, deadline=None)
@given(st.integers(1, 6), st.floats(0.01, 0.2), st.integers(0, 10_000))
def test_mass_conservation(K, scale, seed):
    alpha = random_seq(K, scale, seed)
    end = evolve_coeffs(alpha, 1.0, 1e-2)[-1]
    assert abs(end.A.mass() - alpha.mass()) / alpha.mass() < 1e-8


@settings(max_examples=8, deadline=None)
@given(st.floats(0.0, 2 * math.pi), st.integers(0, 1000))
def test_gauge_covariance(phase, seed):
    alpha = random_seq(2, 0.2, seed)
    rot = cmath.exp(1j * phase)
    a = evolve_coeffs(alpha, 1.0, 0.1)[-1].A.values
    b = evolve_coeffs(ComplexSeq(rot * alpha.values), 1.0, 0.1)[-1].A.values
    assert np.max(np.abs(b - rot * a)) < 1e-9


def test_split_and_rk_agree():
    alpha = random_seq(3, 0.15, 11)
    rk = evolve_coeffs(alpha, 0.5, 0.05, tol=1e-12)[-1].A.values
    split = evolve_coeffs(alpha, 0.5, 0.05, method="split", step=0.005)[-1].A.values
    assert np.max(np.abs(rk - split)) < 1e-6


def test_inverted_time_route_agrees():
    # Independent route: integrate B(s) = conj(A(1/s)) with its own right-hand side.
    alpha = random_seq(3, 0.2, 5)
    t0, t1 = 0.5, 0.1
    direct = evolve_coeffs(alpha, t0, t1, tol=1e-12)[-1].A.values
    B0 = np.conj(alpha.values)
    sol = solve_ivp(lambda s, B: periodic_system_rhs(s, B), (1 / t0, 1 / t1), B0, method="DOP853", rtol=1e-12, atol=1e-14)
    inverted = np.conj(sol.y[:, -1])
    assert np.max(np.abs(direct - inverted)) < 1e-9


def test_pseudo_conformal_is_involution():
    st_ = CoeffState(0.25, random_seq(2, 0.4, 2))
    back = pseudo_conformal(pseudo_conformal(st_))
    assert back.t == st_.t
    assert np.array_equal(back.A.values, st_.A.values)


def test_anchor_state_has_pure_phase():
    alpha = random_seq(3, 0.3, 9)
    anc = anchor_state(alpha, 1e-3)
    assert np.allclose(np.abs(anc.A.values), np.abs(alpha.values), atol=1e-15)
    assert anc.M == pytest.approx(alpha.mass(), rel=1e-14)


def test_zero_data_stays_zero():
    states = evolve_coeffs(ComplexSeq.zeros(3), 1.0, 0.1)
    assert all(not np.any(s.A.values) for s in states)


def test_evaluate_u_at_rational_matches_float_phases():
    alpha = random_seq(4, 0.3, 4)
    rt = RationalTime(1, 5)
    x = np.linspace(-1, 1, 41)
    u, _ = evaluate_u(CoeffState(rt.t, alpha), x)
    assert np.max(np.abs(evaluate_u_at_rational(CoeffState(rt.t, alpha), rt, x) - u)) < 1e-10


def test_evaluate_u_derivative_by_differences():
    state = CoeffState(0.3, random_seq(2, 0.5, 8))
    x = np.linspace(-1, 1, 11)
    h = 1e-6
    _, ux = evaluate_u(state, x)
    fd = (evaluate_u(state, x + h)[0] - evaluate_u(state, x - h)[0]) / (2 * h)
    assert np.max(np.abs(ux - fd)) < 1e-6


def test_lattice_distance():
    assert np.allclose(lattice_distance([0.0, 0.1, 1 / 3, 0.5], 3), [0.0, 0.1, 0.0, 1 / 6])


def test_talbot_profile_zero_data_and_smallness():
    rt = RationalTime(1, 3)
    x = np.linspace(0, 1, 31)
    res = nonlinear_talbot_profile(ComplexSeq.zeros(4), rt, x, eta=0.4)
    assert not np.any(res.modulus) and res.off_lattice_max == 0.0
    with pytest.raises(SmallnessError):
        nonlinear_talbot_profile(ComplexSeq.from_dict({0: 2.0}), rt, x, eta=0.4)
    with pytest.raises(ValueError):
        nonlinear_talbot_profile(ComplexSeq.zeros(1), rt, x, eta=0.4, t0=0.5)


def test_dump_trajectory(tmp_path):
    traj = evolve_coeffs(random_seq(1, 0.2, 1), 1.0, 0.5, t_eval=[1.0, 0.75, 0.5])
    csv_path, side = dump_trajectory(traj, tmp_path / "traj.csv", c0=C0, t0=1.0, tol=1e-12)
    lines = csv_path.read_text().splitlines()
    assert lines[0].split(",")[:3] == ["t", "ReA_-1", "ImA_-1"]
    assert len(lines) == 4
    assert json.loads(side.read_text())["K"] == 1
