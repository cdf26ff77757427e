"""Coefficient dynamics of the Dirac-superposition ansatz

    u(t, x) = sum_k A_k(t) exp(i (x - k)^2 / (4 t)) / sqrt(t).

The coefficients obey

    dA_k/dt = -i c0/t [ sum_{NR_k} e^{-i Omega / (4t)} A_j1 conj(A_j2) A_j3
                        + A_k (2 M - |A_k|^2) ],

with Omega = k^2 - j1^2 + j2^2 - j3^2 and M the conserved mass. The full cubic
sum (resonant plus nonresonant) factorizes after the substitution
w_j = A_j e^{i j^2 / (4t)}, so the right-hand side is one zero-padded FFT
convolution per evaluation.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from .seqcore import ComplexSeq, RationalTime, weighted_norm

C0 = 0.25
"""Repo-wide normalization constant of the coefficient system."""

MASS_RTOL = 1e-12


class StiffnessError(RuntimeError):
    """Raised when the adaptive integrator's step size underflows."""

    def __init__(self, t: float, message: str):
        super().__init__(f"step size underflow near t={t:.6e}: {message}")
        self.t = t


class SmallnessError(ValueError):
    """Raised when data violate the smallness hypothesis of the Talbot profile."""


@dataclass(frozen=True)
class CoeffState:
    """Time t > 0 and coefficients A_k(t); ``M`` caches sum |A_k|^2."""

    t: float
    A: ComplexSeq
    M: float = float("nan")

    def __post_init__(self) -> None:
        if not self.t > 0:
            raise ValueError("t must be positive")
        actual = self.A.mass()
        if math.isnan(self.M):
            object.__setattr__(self, "M", actual)
        elif abs(self.M - actual) > MASS_RTOL * max(actual, 1e-300):
            raise ValueError(f"cached mass {self.M!r} disagrees with {actual!r}")

    @property
    def K(self) -> int:
        return self.A.K


@dataclass(frozen=True)
class NonresonantTriple:
    """(j1, j2, j3) with k - j1 + j2 - j3 = 0 and nonzero phase Omega = 2m."""

    k: int
    j1: int
    j2: int
    j3: int

    @property
    def omega(self) -> int:
        return self.k ** 2 - self.j1 ** 2 + self.j2 ** 2 - self.j3 ** 2

    @property
    def m(self) -> int:
        return (self.k - self.j1) * (self.j1 - self.j2)


def resonant_partition(k: int, band: Sequence[int]) -> Tuple[List[Tuple[int, int, int]], List[NonresonantTriple]]:
    """Split all (j1, j2, j3) in band^3 with k - j1 + j2 - j3 = 0 by their phase."""
    members = set(int(b) for b in band)
    resonant: List[Tuple[int, int, int]] = []
    nonresonant: List[NonresonantTriple] = []
    for j1 in sorted(members):
        for j2 in sorted(members):
            j3 = k - j1 + j2
            if j3 not in members:
                continue
            if k * k - j1 * j1 + j2 * j2 - j3 * j3 == 0:
                resonant.append((j1, j2, j3))
            else:
                nonresonant.append(NonresonantTriple(k, j1, j2, j3))
    return resonant, nonresonant


@lru_cache(maxsize=64)
def _fft_size(K: int) -> int:
    # A cubic product of band-limited signals spans [-3K, 3K]; aliasing stays
    # out of [-K, K] once the grid has more than 4K + 1 points.
    n = 8
    while n < 4 * K + 2:
        n *= 2
    return n


def cubic_band_sum(w: np.ndarray) -> np.ndarray:
    """sum_{j1 - j2 + j3 = k} w_j1 conj(w_j2) w_j3 for k in the band of w."""
    K = (w.size - 1) // 2
    n = _fft_size(K)
    idx = np.arange(-K, K + 1) % n
    spec = np.zeros(n, dtype=complex)
    spec[idx] = w
    field = np.fft.ifft(spec) * n
    prod = np.abs(field) ** 2 * field
    return np.fft.fft(prod)[idx] / n


def _k2(K: int) -> np.ndarray:
    return np.arange(-K, K + 1, dtype=float) ** 2


def _rhs_bracket(t: float, A: np.ndarray) -> np.ndarray:
    """The full cubic sum in the A variables (resonant terms included)."""
    k2 = _k2((A.size - 1) // 2)
    w = A * np.exp(1j * k2 / (4.0 * t))
    return np.exp(-1j * k2 / (4.0 * t)) * cubic_band_sum(w)


def system_rhs(state: CoeffState, c0: float = C0) -> ComplexSeq:
    """dA_k/dt of the coefficient system at ``state``."""
    if not state.t > 0:
        raise ValueError("t must be positive")
    A = state.A.values
    return ComplexSeq(-1j * c0 / state.t * _rhs_bracket(state.t, A))


def nonresonant_sum(t: float, A: np.ndarray) -> np.ndarray:
    """The NR_k part of the cubic sum: full sum minus A_k (2M - |A_k|^2)."""
    mass = float(np.sum(np.abs(A) ** 2))
    return _rhs_bracket(t, A) - A * (2.0 * mass - np.abs(A) ** 2)


def periodic_system_rhs(s: float, B: np.ndarray, c0: float = C0) -> np.ndarray:
    """Right-hand side of the time-inverted system for B_k(s) = conj(A_k(1/s)).

    dB_k/ds = -i c0/s [ sum_{NR_k} e^{+i Omega s / 4} B_j1 conj(B_j2) B_j3
                        + B_k (2M - |B_k|^2) ]
    """
    k2 = _k2((B.size - 1) // 2)
    w = B * np.exp(-1j * k2 * s / 4.0)
    return -1j * c0 / s * np.exp(1j * k2 * s / 4.0) * cubic_band_sum(w)


def resonant_phase(alpha: np.ndarray, t, c0: float = C0) -> np.ndarray:
    """exp(i c0 (|alpha_k|^2 - 2M) log t), the exact resonant-only evolution."""
    mass = float(np.sum(np.abs(alpha) ** 2))
    return np.exp(1j * c0 * np.multiply.outer(np.log(t), np.abs(alpha) ** 2 - 2.0 * mass))


def anchor_state(alpha: ComplexSeq, t0: float, c0: float = C0) -> CoeffState:
    """A_k(t0) set to the pure-phase leading term, dropping the remainder R_k."""
    vals = resonant_phase(alpha.values, t0, c0) * alpha.values
    return CoeffState(t0, ComplexSeq(vals))


def single_mode_closed_form(alpha0: complex, t_start: float, t, c0: float = C0) -> np.ndarray:
    """A_0(t) for one nonzero mode with A_0(t_start) = alpha0."""
    t = np.asarray(t, dtype=float)
    return alpha0 * np.exp(-1j * c0 * abs(alpha0) ** 2 * np.log(t / t_start))


def _saved_times(t_start: float, t_end: float, t_eval: Optional[Sequence[float]]) -> np.ndarray:
    if t_eval is None:
        return np.array([t_start, t_end])
    ts = np.asarray(t_eval, dtype=float)
    lo, hi = min(t_start, t_end), max(t_start, t_end)
    if np.any(ts < lo * (1 - 1e-12)) or np.any(ts > hi * (1 + 1e-12)):
        raise ValueError("t_eval must lie inside the integration window")
    return ts


def evolve_coeffs(
    alpha: ComplexSeq,
    t_start: float,
    t_end: float,
    tol: float = 1e-12,
    *,
    c0: float = C0,
    t_eval: Optional[Sequence[float]] = None,
    method: str = "rk",
    step: float = 0.02,
) -> List[CoeffState]:
    """Integrate the coefficient system from A(t_start) = alpha to t_end.

    ``method="rk"`` runs an adaptive embedded Runge-Kutta scheme (DOP853) in
    tau = log t on the modulated unknowns B_k = A_k exp(-i c0 (|alpha_k|^2 -
    2M) tau), with rtol = atol/mass-scale = tol.

    ``method="split"`` is a Strang splitting in s = 1/t: the free phases
    exp(i k^2 s / 4) are applied exactly and the cubic part is advanced by the
    implicit midpoint rule in log s, which conserves the mass exactly. ``step``
    is the splitting step in s. Use it for wide bands, where the nonresonant
    phases make the adaptive scheme expensive.
    """
    if not (t_start > 0 and t_end > 0):
        raise ValueError("times must be positive")
    times = _saved_times(t_start, t_end, t_eval)
    a0 = np.array(alpha.values, dtype=complex)
    if not np.any(a0):
        return [CoeffState(float(t), ComplexSeq(np.zeros_like(a0)), 0.0) for t in times]
    if method == "rk":
        traj = _evolve_rk(a0, t_start, t_end, tol, c0, times)
    elif method == "split":
        traj = _evolve_split(a0, t_start, times, c0, step)
    else:
        raise ValueError(f"unknown method {method!r}")
    return [CoeffState(float(t), ComplexSeq(A)) for t, A in zip(times, traj)]


def _evolve_rk(a0, t_start, t_end, tol, c0, times) -> np.ndarray:
    mass = float(np.sum(np.abs(a0) ** 2))
    rate = c0 * (np.abs(a0) ** 2 - 2.0 * mass)
    tau0 = math.log(t_start)

    def rhs(tau, B):
        t = math.exp(tau)
        phase = np.exp(1j * rate * (tau - tau0))
        A = B * phase
        dA_dtau = -1j * c0 * _rhs_bracket(t, A)
        return dA_dtau / phase - 1j * rate * B

    scale = math.sqrt(mass)
    sol = solve_ivp(
        rhs,
        (tau0, math.log(t_end)),
        a0,
        method="DOP853",
        t_eval=np.log(times),
        rtol=tol,
        atol=tol * scale,
    )
    if sol.status != 0:
        t_fail = math.exp(sol.t[-1]) if sol.t.size else t_start
        raise StiffnessError(t_fail, sol.message)
    B = sol.y.T
    return B * np.exp(1j * np.outer(np.log(times) - tau0, rate))


def _cubic_step(c: np.ndarray, dsigma: float, c0: float) -> np.ndarray:
    """Implicit midpoint for dc/dsigma = i c0 P(|v|^2 v), sigma = log s."""
    c_new = c + 1j * c0 * dsigma * cubic_band_sum(c)
    for _ in range(50):
        mid = 0.5 * (c + c_new)
        nxt = c + 1j * c0 * dsigma * cubic_band_sum(mid)
        if np.max(np.abs(nxt - c_new)) <= 1e-15 * max(1.0, np.max(np.abs(nxt))):
            return nxt
        c_new = nxt
    return c_new


def split_step(c: np.ndarray, s: float, ds: float, c0: float, k2: np.ndarray) -> np.ndarray:
    """One symmetric step of the s = 1/t splitting on c_k = A_k e^{i k^2 s/4}.

    ``ds`` may be negative (moving forward in t means decreasing s).
    """
    half = np.exp(1j * k2 * ds / 8.0)
    c = half * c
    c = _cubic_step(c, math.log((s + ds) / s), c0)
    return half * c


def _evolve_split(a0, t_start, times, c0, step) -> np.ndarray:
    K = (a0.size - 1) // 2
    k2 = _k2(K)
    s = 1.0 / t_start
    c = a0 * np.exp(1j * k2 * s / 4.0)
    targets = 1.0 / times
    out = np.empty((times.size, a0.size), dtype=complex)
    order = np.argsort(np.abs(targets - s))
    for i in order:
        goal = targets[i]
        while abs(goal - s) > 1e-14 * goal:
            ds = math.copysign(min(step, abs(goal - s)), goal - s)
            c = split_step(c, s, ds, c0, k2)
            s += ds
        s = goal
        out[i] = c * np.exp(-1j * k2 * s / 4.0)
    return out


def evaluate_u(state: CoeffState, x) -> Tuple[np.ndarray, np.ndarray]:
    """u(t, x) and its x-derivative by termwise summation."""
    x = np.asarray(x, dtype=float)
    t = state.t
    k = state.A.indices.astype(float)
    A = state.A.values
    out_u = np.zeros(x.shape, dtype=complex)
    out_ux = np.zeros(x.shape, dtype=complex)
    nz = np.nonzero(A)[0]
    for i in nz:
        d = x - k[i]
        term = A[i] * np.exp(1j * d * d / (4.0 * t)) / math.sqrt(t)
        out_u += term
        out_ux += term * (1j * d / (2.0 * t))
    return out_u, out_ux


def pseudo_conformal(state: CoeffState) -> CoeffState:
    """State at time 1/t with conjugated coefficients; an involution."""
    return CoeffState(1.0 / state.t, ComplexSeq(np.conj(state.A.values)), state.M)


@dataclass(frozen=True)
class TalbotProfileResult:
    x: np.ndarray
    modulus: np.ndarray
    off_lattice_max: float
    epsilon: float
    smallness: float
    t: float
    anchor: float


def lattice_distance(x, q: int) -> np.ndarray:
    """d(x, Z/q)."""
    y = np.asarray(x, dtype=float) * q
    return np.abs(y - np.round(y)) / q


def nonlinear_talbot_profile(
    alpha: ComplexSeq,
    rt: RationalTime,
    x,
    *,
    eta: float,
    s: float = 1.0,
    t0: float = 1e-3,
    c0: float = C0,
    step: float = 0.01,
    linear: bool = False,
) -> TalbotProfileResult:
    """|u(t_pq, x)| for data anchored at t0, with the max over d(x, Z/q) > eta/q.

    ``linear=True`` freezes the coefficients (nonlinearity switched off).
    """
    if not 1e-4 <= t0 <= 1e-2:
        raise ValueError("anchor time must lie in [1e-4, 1e-2]")
    eps = weighted_norm(alpha, s)
    q = rt.q
    smallness = eps ** 2 * math.sqrt(q) * math.log(q) if q > 1 else 0.0
    if smallness >= 0.5:
        raise SmallnessError(f"eps^2 sqrt(q) log q = {smallness:.3g} is not below 1/2")
    x = np.asarray(x, dtype=float)
    t_pq = rt.t
    if eps == 0:
        mod = np.zeros_like(x)
    else:
        if linear:
            state = CoeffState(t_pq, alpha)
        else:
            start = anchor_state(alpha, t0, c0)
            state = evolve_coeffs(start.A, t0, t_pq, c0=c0, method="split", step=step)[-1]
        mod = np.abs(evaluate_u_at_rational(state, rt, x))
    off = lattice_distance(x, q) > eta / q
    off_max = float(np.max(mod[off])) if np.any(off) else 0.0
    return TalbotProfileResult(x, mod, off_max, eps, smallness, t_pq, t0)


def evaluate_u_at_rational(state: CoeffState, rt: RationalTime, x: np.ndarray) -> np.ndarray:
    """u at t = p/(2 pi q) with the k^2 phase reduced exactly; ``state.t`` is ignored."""
    p, q = rt.p, rt.q
    if p == 0:
        raise ValueError("t = 0 has no kernel")
    t = rt.t
    x = np.asarray(x, dtype=float)
    kk = state.A.indices.astype(np.int64)
    # k^2/(4t) = pi q k^2 / (2p); reduce q k^2 modulo 4p before scaling.
    k2_phase = ((q * kk * kk) % (4 * p)) * (math.pi / (2 * p))
    weights = state.A.values * np.exp(1j * k2_phase)
    kf = kk.astype(float) * (math.pi * q / p)
    flat = x.ravel()
    out = np.empty(flat.size, dtype=complex)
    chunk = max(1, 2_000_000 // max(1, kk.size))
    for lo in range(0, flat.size, chunk):
        xs = flat[lo:lo + chunk]
        out[lo:lo + chunk] = np.exp(-1j * np.outer(xs, kf)) @ weights
    quad = flat * flat / (4.0 * t)
    return (np.exp(1j * quad) * out / math.sqrt(t)).reshape(x.shape)


def dump_trajectory(traj: Sequence[CoeffState], path, *, c0: float, t0: float, tol: float) -> Tuple[Path, Path]:
    """CSV of {t, Re A_k, Im A_k, ..., mass} plus a JSON sidecar."""
    path = Path(path)
    K = traj[0].K
    header = ["t"]
    for k in range(-K, K + 1):
        header += [f"ReA_{k}", f"ImA_{k}"]
    header.append("mass")
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for st in traj:
            row = [f"{st.t:.17g}"]
            for v in st.A.values:
                row += [f"{v.real:.17g}", f"{v.imag:.17g}"]
            row.append(f"{st.M:.17g}")
            writer.writerow(row)
    side = path.with_suffix(".json")
    side.write_text(json.dumps({"K": K, "c0": c0, "t0": t0, "tol": tol}, indent=2))
    return path, side
