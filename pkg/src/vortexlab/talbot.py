"""Linear Talbot effect: Dirac combs and banded data at rational times.

The propagator is pinned to the repo kernel e^{i (x - k)^2 / (4t)} / sqrt(t) for
a unit mass at k. That is sqrt(4 pi i) times the true free Schroedinger kernel,
so every closed form below carries that factor explicitly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Sequence, Tuple

import numpy as np

from .nlscoeff import CoeffState, evaluate_u_at_rational
from .seqcore import ComplexSeq, RationalTime, gauss_sum

KERNEL_FACTOR = 2.0 * math.sqrt(math.pi) * np.exp(1j * math.pi / 4)
"""sqrt(4 pi i): repo kernel divided by the true free kernel."""

PROFILE_GRID = 2 ** 15
SUPPORT_TOL = 1e-12


def bump(xi, radius: float = 1.0) -> np.ndarray:
    """C-infinity bump exp(1 - 1/(1 - (xi/r)^2)) on |xi| < r, equal to 1 at 0."""
    y = np.asarray(xi, dtype=float) / radius
    out = np.zeros_like(y)
    inside = np.abs(y) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - y[inside] ** 2))
    return out


@dataclass(frozen=True)
class PeriodicFourierProfile:
    """2 pi-periodic profile P(xi) = sum_k alpha_k e^{i k xi}, supported in B(0, r) mod 2 pi."""

    alpha: ComplexSeq
    radius: float

    def __call__(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        k = self.alpha.indices.astype(float)
        flat = xi.ravel()
        out = np.exp(1j * np.outer(flat, k)) @ self.alpha.values
        return out.reshape(xi.shape)

    @classmethod
    def from_function(
        cls,
        func: Callable[[np.ndarray], np.ndarray],
        radius: float,
        *,
        K: int | None = None,
        tail_tol: float = 1e-13,
        grid: int = PROFILE_GRID,
    ) -> "PeriodicFourierProfile":
        """Fourier coefficients of ``func`` on [-pi, pi) by FFT, truncated at K.

        Without K the band is the smallest one whose discarded l^1 tail is below
        ``tail_tol``.
        """
        if not 0 < radius < math.pi:
            raise ValueError("support radius must lie in (0, pi)")
        xi = -math.pi + 2 * math.pi * np.arange(grid) / grid
        vals = np.asarray(func(xi), dtype=complex)
        coef = np.fft.fft(vals) / grid
        # Sampling starts at -pi, so coefficient k picks up (-1)^k.
        kk = np.fft.fftfreq(grid, 1.0 / grid).astype(int)
        coef = coef * np.where(kk % 2 == 0, 1.0, -1.0)
        full_K = grid // 2 - 1
        alpha_full = np.zeros(2 * full_K + 1, dtype=complex)
        sel = np.abs(kk) <= full_K
        alpha_full[kk[sel] + full_K] = coef[sel]
        if K is None:
            mags = np.abs(alpha_full)
            pair = mags[full_K:] + np.concatenate([[0.0], mags[:full_K][::-1]])
            tail = np.cumsum(pair[::-1])[::-1]
            ok = np.nonzero(tail < tail_tol)[0]
            K = int(ok[0]) if ok.size else full_K
            K = max(K, 1)
        alpha = ComplexSeq(alpha_full[full_K - K: full_K + K + 1])
        return cls(alpha, radius)

    def support_leak(self, samples: int = 4096) -> float:
        """max |P| over a grid of the complement of B(0, r) in [-pi, pi)."""
        xi = np.linspace(self.radius, math.pi, samples)
        xi = np.concatenate([xi[1:], -xi[1:]])
        return float(np.max(np.abs(self(xi))))


def dirac_comb_evolution(rt: RationalTime) -> List[Tuple[float, complex]]:
    """Atoms (m/q, G(-p, m, q)/q) per unit cell of the evolved comb sum_k delta_k.

    This is the true free evolution, without the repo kernel factor.
    """
    return [(m / rt.q, gauss_sum(-rt.p, m, rt.q) / rt.q) for m in range(rt.q)]


def comb_plancherel(rt: RationalTime) -> float:
    """sum_m |G(-p, m, q)/q|^2, equal to 1."""
    return float(sum(abs(w) ** 2 for _, w in dirac_comb_evolution(rt)))


def linear_talbot_eval(profile: PeriodicFourierProfile, rt: RationalTime, x, eta: float) -> np.ndarray:
    """Closed form of the repo-kernel evolution of sum_k alpha_k delta_k at t_pq.

    With xi* = pi (q x - l)/p the atoms of the evolved comb inside the support,

        u(x) = sqrt(4 pi i)/(2p) sum_l G(-p, l, q) P(-xi*) e^{-i t xi*^2 + i x xi*}.

    For eta <= 1/2 at most one atom contributes, so |u| = sqrt(pi q)/p |P(-xi*)|
    and the modulus is 1/q-periodic.
    """
    p, q = rt.p, rt.q
    if q % 2 == 0:
        raise ValueError("q must be odd")
    if p < 1:
        raise ValueError("p must be positive")
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    if profile.radius > eta * math.pi / p * (1 + 1e-12):
        raise ValueError(f"support radius {profile.radius:.6g} exceeds eta pi / p = {eta * math.pi / p:.6g}")
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    t = rt.t
    out = np.zeros(flat.size, dtype=complex)
    G = np.array([gauss_sum(-p, m, q) for m in range(q)])
    base = np.round(q * flat).astype(np.int64)
    for shift in (-1, 0, 1):
        ell = base + shift
        xi = math.pi * (q * flat - ell) / p
        inside = np.abs(xi) < profile.radius
        if not np.any(inside):
            continue
        xs, xis = flat[inside], xi[inside]
        vals = G[ell[inside] % q] * profile(-xis) * np.exp(-1j * t * xis ** 2 + 1j * xs * xis)
        out[inside] += vals
    return (KERNEL_FACTOR / (2 * p) * out).reshape(x.shape)


def talbot_modulus_law(profile: PeriodicFourierProfile, rt: RationalTime, x) -> np.ndarray:
    """Single-atom modulus sqrt(pi q)/p |P(-xi*)|, xi* = pi (q x - round(q x)) / p.

    |xi*| = (pi q / p) d(x, Z/q); for even profiles the sign is immaterial.
    """
    y = np.asarray(x, dtype=float) * rt.q
    xi = math.pi * (y - np.round(y)) / rt.p
    return math.sqrt(math.pi * rt.q) / rt.p * np.abs(profile(-xi))


def free_evolution_direct(alpha: ComplexSeq, t, x) -> np.ndarray:
    """sum_k alpha_k e^{i (x-k)^2/(4t)} / sqrt(t); t may be a RationalTime (exact phases)."""
    if isinstance(t, RationalTime):
        return evaluate_u_at_rational(CoeffState(max(t.t, 1e-300), alpha), t, x)
    if not t > 0:
        raise ValueError("t must be positive")
    x = np.asarray(x, dtype=float)
    k = alpha.indices.astype(float)
    flat = x.ravel()
    out = np.empty(flat.size, dtype=complex)
    chunk = max(1, 2_000_000 // k.size)
    for lo in range(0, flat.size, chunk):
        d = flat[lo:lo + chunk, None] - k[None, :]
        out[lo:lo + chunk] = np.exp(1j * d * d / (4.0 * t)) @ alpha.values
    return (out / math.sqrt(t)).reshape(x.shape)


def truncation_tail(alpha: ComplexSeq, K: int, t: float) -> float:
    """Bound sum_{|k| > K} |alpha_k| / sqrt(t) on the error of dropping modes beyond K."""
    mask = np.abs(alpha.indices) > K
    return float(np.sum(np.abs(alpha.values[mask])) / math.sqrt(t))


@dataclass(frozen=True)
class ConcentrationResult:
    lam: float
    numerator: complex
    denominator: complex
    ratio: float
    alpha0: complex


def concentration_family(
    lam: float,
    rt: RationalTime,
    psi: Callable[[np.ndarray], np.ndarray] = bump,
    psi_radius: float = 1.0,
) -> ConcentrationResult:
    """Ratio |e^{it D} u0^lam (0)| / |e^{it D} (alpha_0^lam delta_0)(0)| at t_pq.

    u0^lam has the profile f(xi) = lam psi(lam xi). Both values use the repo
    kernel and are computed by direct summation.
    """
    if not lam > rt.p:
        raise ValueError("need lambda > p")
    radius = psi_radius / lam
    prof = PeriodicFourierProfile.from_function(lambda xi: lam * psi(lam * xi), radius)
    num = complex(free_evolution_direct(prof.alpha, rt, np.array([0.0]))[0])
    a0 = prof.alpha[0]
    den = a0 / math.sqrt(rt.t)
    return ConcentrationResult(lam, num, den, abs(num) / abs(den), a0)


@dataclass(frozen=True)
class PoissonCheck:
    t: float
    epsilon: float
    K: int
    J: int
    lhs: complex
    rhs: complex
    residual: float
    prefactor_deviation: float


def poisson_identity_check(t: float, epsilon: float = 1e-4, tail: float = 1e-10) -> PoissonCheck:
    """Regularized theta-function identity with z = epsilon - 4 pi^2 i t:

        sum_k e^{-z k^2} = sqrt(pi / z) sum_j e^{-pi^2 j^2 / z},

    exact for Re z > 0. As epsilon -> 0 the prefactor sqrt(pi/z) tends to
    e^{i pi/4} / (2 sqrt(pi t)) and the right-hand terms to e^{-i j^2/(4t)}.
    Truncations K and J make both Gaussian tails smaller than ``tail``.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    z = complex(epsilon, -4 * math.pi ** 2 * t)
    log_tail = -math.log(tail)
    K = int(math.ceil(math.sqrt(log_tail / epsilon))) + 1
    decay = (math.pi ** 2 / z).real
    J = int(math.ceil(math.sqrt(log_tail / decay))) + 1
    k = np.arange(1, K + 1, dtype=float)
    lhs = 1.0 + 2.0 * np.sum(np.exp(-epsilon * k * k) * np.exp(4j * math.pi ** 2 * t * k * k))
    j = np.arange(1, J + 1, dtype=float)
    rhs_sum = 1.0 + 2.0 * np.sum(np.exp(-(math.pi ** 2 / z) * j * j))
    pref = np.sqrt(math.pi / z)
    rhs = pref * rhs_sum
    limit_pref = np.exp(1j * math.pi / 4) / (2 * math.sqrt(math.pi * t))
    return PoissonCheck(t, epsilon, K, J, complex(lhs), complex(rhs), float(abs(lhs - rhs)), float(abs(pref - limit_pref)))


def talbot_carpet(alpha: ComplexSeq, times: Sequence[RationalTime], x, path=None) -> np.ndarray:
    """|u| over x for each rational time; optional CSV with one (p, q) row each."""
    x = np.asarray(x, dtype=float)
    mat = np.stack([np.abs(free_evolution_direct(alpha, rt, x)) for rt in times])
    if path is not None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["p", "q"] + [f"{v:.17g}" for v in x])
            for rt, row in zip(times, mat):
                w.writerow([rt.p, rt.q] + [f"{v:.17g}" for v in row])
    return mat
