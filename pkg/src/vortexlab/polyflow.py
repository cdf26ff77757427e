"""Polygonal binormal-flow runs: coefficients, base-point trace, curves and diagnostics.

Pipeline: polygon_filament -> anchored coefficients at t0 -> splitting
integrator in s = 1/t (every node kept) -> frame time ODE at the base point on
a fine s-grid -> space ODE fan-out at the saved times.

The frame equations are those of iu_t + u_xx + (|u|^2 - f) u / 2 = 0. With the
gauge f = 0 the coefficient system is the nlscoeff system with coupling
HASIMOTO_COUPLING.
"""

from __future__ import annotations

import json
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .hasimoto import (
    Frame,
    CurveState,
    PolygonSpec,
    TimeTrace,
    angle_to_weight,
    binormal_residual,
    chi_velocity,
    expm_antisym,
    integrate_tangent,
    magnus4,
    orthonormality_error,
    parallel_frame_space,
    polygon_filament,
    prefix_products,
    time_generator,
    GAUSS_OFFSETS,
)
from .nlscoeff import CoeffState, _k2, anchor_state, split_step
from .riemann import RiemannSeries, eval_R
from .seqcore import ComplexSeq

HASIMOTO_COUPLING = -0.5
"""c0 of the coefficient system matching the frame equations in the gauge f = 0."""

PHASE_PER_CELL = 0.3
MODE_CUT = 1e-10
CHUNK_CELLS = 16384


# --- coefficients along a dense s-grid -----------------------------------------

@dataclass
class CoefficientPath:
    """A_k at the splitting nodes s_m (decreasing), linearly interpolated in between.

    A is slow: the free phases exp(i k^2 s / 4) are carried exactly by the
    evaluation routines, so only the small nonlinear drift is interpolated.
    """

    s: np.ndarray
    A: np.ndarray
    k: np.ndarray
    c0: float

    @property
    def t(self) -> np.ndarray:
        return 1.0 / self.s

    def state_at_node(self, m: int) -> CoeffState:
        return CoeffState(float(1.0 / self.s[m]), ComplexSeq(self.A[m]))

    def A_at(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        rev_s = self.s[::-1]
        pos = np.clip(np.searchsorted(rev_s, s) - 1, 0, rev_s.size - 2)
        w = ((s - rev_s[pos]) / (rev_s[pos + 1] - rev_s[pos]))[:, None]
        lo = self.A[::-1][pos]
        hi = self.A[::-1][pos + 1]
        return (1.0 - w) * lo + w * hi

    def state_at(self, t: float) -> CoeffState:
        return CoeffState(float(t), ComplexSeq(self.A_at(np.array([1.0 / t]))[0]))

    def active_modes(self, cut: float = MODE_CUT) -> np.ndarray:
        """Indices into k of modes whose amplitude ever exceeds cut * max."""
        amp = np.max(np.abs(self.A), axis=0)
        return np.nonzero(amp > cut * amp.max())[0] if amp.max() > 0 else np.array([], dtype=int)


def polygon_band(spec: PolygonSpec, margin: int) -> ComplexSeq:
    """polygon_filament zero-padded by ``margin`` modes on each side."""
    alpha = polygon_filament(spec)
    return alpha.padded(alpha.K + margin)


def coefficient_path(alpha: ComplexSeq, t0: float, T: float, *, c0: float = HASIMOTO_COUPLING, step: float = 0.02) -> CoefficientPath:
    """Anchor at t0 and run the s-splitting to 1/T, keeping every node."""
    if not 0 < t0 < T:
        raise ValueError("need 0 < t0 < T")
    state = anchor_state(alpha, t0, c0)
    k2 = _k2(alpha.K)
    s0, s1 = 1.0 / t0, 1.0 / T
    m = max(1, int(math.ceil((s0 - s1) / step)))
    nodes = np.linspace(s0, s1, m + 1)
    out = np.empty((m + 1, alpha.values.size), dtype=complex)
    c = state.A.values * np.exp(1j * k2 * s0 / 4.0)
    out[0] = state.A.values
    for i in range(m):
        ds = nodes[i + 1] - nodes[i]
        c = split_step(c, nodes[i], ds, c0, k2)
        out[i + 1] = c * np.exp(-1j * k2 * nodes[i + 1] / 4.0)
    return CoefficientPath(nodes, out, alpha.indices.astype(float), c0)


def _field_at_point(path: CoefficientPath, s: np.ndarray, x0: float, modes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """u(1/s, x0) and u_x(1/s, x0) for an array of s values."""
    A = path.A_at(s)[:, modes]
    d = x0 - path.k[modes]
    ph = np.exp(0.25j * np.outer(s, d * d))
    terms = A * ph
    root = np.sqrt(s)
    u = root * terms.sum(axis=1)
    ux = root * (terms @ (0.5j * d)) * s
    return u, ux


# --- frame time ODE at the base point on a fine s-grid --------------------------

def base_point_trace(
    path: CoefficientPath,
    t_save: Sequence[float],
    *,
    x0: float = 0.0,
    frame0: Optional[Frame] = None,
    point0=(0.0, 0.0, 0.0),
    phase_per_cell: float = PHASE_PER_CELL,
) -> TimeTrace:
    """Frame and chi at x0 from t0 = 1/path.s[0] to each saved time.

    The time ODE dF/dt = G(u, u_x, 0) F becomes dF/ds = -G/s^2 F. Each cell is
    one fourth-order Magnus step; the cell width keeps the fastest free phase
    (x0 - k)^2 s / 4 below ``phase_per_cell`` radians per cell. chi is advanced
    by composite Simpson over the cell nodes.
    """
    frame0 = frame0 or Frame.standard()
    t_save = np.asarray(t_save, dtype=float)
    s_save = 1.0 / t_save
    s0 = float(path.s[0])
    if np.any(np.diff(t_save) < 0) or np.any(s_save > s0 * (1 + 1e-12)) or np.any(s_save < path.s[-1] * (1 - 1e-12)):
        raise ValueError("save times must be increasing and inside the coefficient path")
    modes = path.active_modes()
    if modes.size == 0:
        F = frame0.matrix
        return TimeTrace(t_save, np.broadcast_to(F, (t_save.size, 3, 3)).copy(), np.tile(np.asarray(point0, float), (t_save.size, 1)))
    freq = np.max((x0 - path.k[modes]) ** 2) / 4.0
    h_max = phase_per_cell / max(freq, 1.0)
    F = frame0.matrix.copy()
    X = np.asarray(point0, dtype=float).copy()
    frames = np.empty((t_save.size, 3, 3))
    chis = np.empty((t_save.size, 3))
    s = s0
    zero = np.zeros(1)
    for i, goal in enumerate(s_save):
        span = s - goal
        if span > 0:
            cells = 2 * int(math.ceil(span / (2 * h_max)))
            h = -span / cells
            done = 0
            while done < cells:
                n_c = min(CHUNK_CELLS, cells - done)
                left = s + h * np.arange(n_c)
                g1 = left + GAUSS_OFFSETS[0] * h
                g2 = left + GAUSS_OFFSETS[1] * h
                u1, ux1 = _field_at_point(path, g1, x0, modes)
                u2, ux2 = _field_at_point(path, g2, x0, modes)
                G1 = -time_generator(u1, ux1, zero) / (g1 * g1)[:, None, None]
                G2 = -time_generator(u2, ux2, zero) / (g2 * g2)[:, None, None]
                steps = expm_antisym(magnus4(G1, G2, h))
                nodes_F = np.concatenate([F[None], prefix_products(steps) @ F])
                node_s = np.concatenate([left, [left[-1] + h]])
                un, _ = _field_at_point(path, node_s, x0, modes)
                vel = chi_velocity(un, nodes_F) * (-1.0 / node_s ** 2)[:, None]
                # Simpson over consecutive cell pairs; chunks hold an even number of cells.
                X = X + (h / 3.0) * (vel[0:-1:2] + 4 * vel[1::2] + vel[2::2]).sum(axis=0)
                F = nodes_F[-1]
                s = float(node_s[-1])
                done += n_c
        s = goal
        frames[i] = F
        chis[i] = X
    err = orthonormality_error(frames)
    if err > 1e-8:
        raise RuntimeError(f"base_point_trace: orthonormality drift {err:.3e}")
    return TimeTrace(t_save, frames, chis)


# --- runs -------------------------------------------------------------------------

@dataclass
class PolygonRun:
    spec: PolygonSpec
    t0: float
    T: float
    times: np.ndarray
    path: CoefficientPath
    trace: TimeTrace
    curves: List[CurveState]
    residual: Optional[Tuple[np.ndarray, np.ndarray]]
    metadata: Dict[str, object] = field(default_factory=dict)

    def states(self) -> List[CoeffState]:
        return [self.path.state_at(t) for t in self.times]


def curve_at(path: CoefficientPath, t: float, x: np.ndarray, frame: np.ndarray, point, x0_index: int) -> CurveState:
    """Spread the base-point frame along x with exact u at the Gauss points."""
    x = np.asarray(x, dtype=float)
    dx = float(x[1] - x[0])
    state = path.state_at(t)
    u = _field_line(state, x)
    left = x[:-1]
    ug = tuple(_field_line(state, left + off * dx) for off in GAUSS_OFFSETS)
    frames = parallel_frame_space(u, dx, Frame.from_matrix(frame), x0_index, u_gauss=ug)
    chi = integrate_tangent(frames, u, dx, x0_index, point)
    return CurveState(float(t), x, chi, frames, {"x0_index": x0_index})


def _field_line(state: CoeffState, x: np.ndarray) -> np.ndarray:
    k = state.A.indices.astype(float)
    A = state.A.values
    nz = np.nonzero(A)[0]
    out = np.zeros(x.shape, dtype=complex)
    for i in nz:
        d = x - k[i]
        out += A[i] * np.exp(1j * d * d / (4.0 * state.t))
    return out / math.sqrt(state.t)


def simulate_polygon(
    spec: PolygonSpec,
    t0: float,
    T: float,
    *,
    t_save: Optional[Sequence[float]] = None,
    x: Optional[np.ndarray] = None,
    x0: float = 0.0,
    margin: int = 8,
    step: float = 0.02,
    phase_per_cell: float = PHASE_PER_CELL,
    c0: float = HASIMOTO_COUPLING,
    with_residual: bool = True,
) -> PolygonRun:
    """Run the full pipeline and rebuild chi(t, x) at the saved times.

    The base point x0 must be a grid node. Corners must sit at least 2 away
    from the ends of the x-grid.
    """
    if x is None:
        x = np.linspace(-4.0, 4.0, 1025)
    x = np.asarray(x, dtype=float)
    if spec.indices and (min(spec.indices) - 2 < x[0] or max(spec.indices) + 2 > x[-1]):
        raise ValueError("corners must lie at least 2 inside the x-grid")
    idx = int(np.argmin(np.abs(x - x0)))
    if abs(x[idx] - x0) > 1e-12:
        raise ValueError("x0 must be a grid node")
    times = np.sort(np.asarray(t_save if t_save is not None else [t0, T], dtype=float))
    stage = "coefficients"
    try:
        alpha = polygon_band(spec, margin)
        path = coefficient_path(alpha, t0, T, c0=c0, step=step)
        stage = "time trace"
        trace = base_point_trace(path, times, x0=x0, frame0=spec.base_frame, point0=spec.base_point, phase_per_cell=phase_per_cell)
        stage = "space fan-out"
        curves = [curve_at(path, t, x, F, P, idx) for t, F, P in zip(times, trace.frames, trace.chi)]
        uniform = times.size >= 3 and np.allclose(np.diff(times), times[1] - times[0], rtol=1e-9, atol=0.0)
        residual = binormal_residual(curves) if with_residual and uniform else None
    except Exception as exc:
        raise RuntimeError(f"simulate_polygon failed at stage '{stage}': {exc}") from exc
    meta = {
        "t0": t0, "T": T, "margin": margin, "split_step": step, "phase_per_cell": phase_per_cell,
        "c0": c0, "gauge": "f = 0", "x0": x0, "dx": float(x[1] - x[0]), "x_range": [float(x[0]), float(x[-1])],
        "band_K": alpha.K, "mode_cut": MODE_CUT,
    }
    return PolygonRun(spec, t0, T, times, path, trace, curves, residual, meta)


def trace_convergence(run: PolygonRun, x_samples: Optional[Sequence[float]] = None) -> Dict[str, object]:
    """Fit |chi(t, x) - chi(0, x)| = C t^p at each x sample.

    chi(0, x) is extrapolated as the intercept of a linear fit of chi against
    sqrt(t), then p and C come from a log-log fit of the deviations.
    """
    if run.times.size < 4:
        raise ValueError("need at least four saved times")
    x = run.curves[0].x
    xs = [0.0] if x_samples is None else list(x_samples)
    root = np.sqrt(run.times)
    out = {"x": [], "exponent": [], "constant": []}
    for xv in xs:
        i = int(np.argmin(np.abs(x - xv)))
        pts = np.array([c.chi[i] for c in run.curves])
        design = np.column_stack([np.ones_like(root), root])
        coef, *_ = np.linalg.lstsq(design, pts, rcond=None)
        dev = np.linalg.norm(pts - coef[0], axis=1)
        if np.all(dev < 1e-14):
            p, C = float("nan"), 0.0
        else:
            p, logC = np.polyfit(np.log(run.times), np.log(dev), 1)
            C = math.exp(logC)
        out["x"].append(float(x[i]))
        out["exponent"].append(float(p))
        out["constant"].append(float(C))
    return out


# --- corner trajectory against Riemann's function --------------------------------

@dataclass
class CornerTrajectory:
    n: int
    nu: float
    theta: float
    x0: float
    t: np.ndarray
    path: np.ndarray
    rescaled: np.ndarray
    reference: np.ndarray
    rotation: np.ndarray
    deviation: float
    fit_residual: float
    metadata: Dict[str, object] = field(default_factory=dict)

    def to_rows(self) -> List[List[float]]:
        aligned = self.rescaled @ self.rotation.T
        return [[t, *a, *r, float(np.linalg.norm(a - r))] for t, a, r in zip(self.t, aligned, self.reference)]


def riemann_reference(theta: float, t: np.ndarray, x0: float = 0.0, N: int = 20000) -> np.ndarray:
    """theta / (4 pi^2) (0, Re Rt, Im Rt) with Rt(tau) = R_{2 pi x0}(tau) + i tau and tau = 4 pi^2 t.

    The +i tau is the j = 0 term of the sum over all integers.
    """
    tau = 4.0 * math.pi ** 2 * np.asarray(t, dtype=float)
    vals = eval_R(RiemannSeries(x0=2.0 * math.pi * x0, N=N), tau).value + 1j * tau
    return theta / (4.0 * math.pi ** 2) * np.column_stack([np.zeros_like(tau), vals.real, vals.imag])


def rotation_fit(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Proper rotation R minimizing sum |R p - q|^2 over paired rows (no shift)."""
    h = np.asarray(source, float).T @ np.asarray(target, float)
    U, _, Vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(Vt.T @ U.T)) or 1.0
    return Vt.T @ np.diag([1.0, 1.0, d]) @ U.T


def corner_spec(n: int, nu: float, theta: float) -> PolygonSpec:
    """Planar polygon with corners at |j| <= n^nu, all of angle pi - theta/n."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 < nu <= 1:
        raise ValueError("nu must lie in (0, 1]")
    J = int(math.floor(n ** nu + 1e-12))
    idx = tuple(range(-J, J + 1))
    angle = math.pi - theta / n
    return PolygonSpec(idx, (angle,) * len(idx), (0.0,) * len(idx))


def corner_vs_riemann(
    n: int,
    nu: float = 1.0,
    theta: float = 1.0,
    x0: float = 0.0,
    T: float = 0.5,
    *,
    t0: float = 1e-3,
    compare_from: Optional[float] = None,
    samples: int = 256,
    margin: int = 8,
    step: float = 0.02,
    phase_per_cell: float = PHASE_PER_CELL,
    c0: float = HASIMOTO_COUPLING,
    N_riemann: int = 20000,
) -> CornerTrajectory:
    """Rescaled base-point trajectory n (chi_n(t, x0) - chi_n(t0, x0)) against the Riemann path.

    Increments are taken from ``compare_from`` (default: the anchor time t0) on
    both sides, and one global rotation is fitted over the whole sampled path.
    The reported deviation is the sup over the samples after that rotation.
    A common ``compare_from`` across anchors isolates the anchor bias.
    """
    if n < 1:
        raise ValueError("n must be positive")
    start = t0 if compare_from is None else compare_from
    if start < t0:
        raise ValueError("compare_from must not precede the anchor time")
    t = np.geomspace(start, T, samples)
    ref = riemann_reference(theta, t, x0, N_riemann)
    ref = ref - ref[0]
    if theta == 0:
        zeros = np.zeros((samples, 3))
        return CornerTrajectory(n, nu, theta, x0, t, zeros, zeros, ref, np.eye(3), 0.0, 0.0, {"t0": t0})
    spec = corner_spec(n, nu, theta)
    alpha = polygon_band(spec, margin)
    path = coefficient_path(alpha, t0, T, c0=c0, step=step)
    trace = base_point_trace(path, t, x0=x0, phase_per_cell=phase_per_cell)
    raw = trace.chi - trace.chi[0]
    rescaled = n * raw
    R = rotation_fit(rescaled, ref)
    aligned = rescaled @ R.T
    dev = np.linalg.norm(aligned - ref, axis=1)
    meta = {
        "t0": t0, "compare_from": start, "T": T, "samples": samples, "margin": margin, "band_K": alpha.K, "split_step": step,
        "phase_per_cell": phase_per_cell, "c0": c0, "N_riemann": N_riemann,
        "weight": angle_to_weight(math.pi - theta / n),
    }
    return CornerTrajectory(
        n, nu, theta, x0, t, trace.chi, rescaled, ref, R,
        float(dev.max()), float(np.sqrt(np.mean(dev ** 2))), meta,
    )


# --- Fourier diagnostics of T_x ---------------------------------------------------

def plateau_window(y: np.ndarray, flat: float = 0.5) -> np.ndarray:
    """C-infinity window equal to 1 on |y| <= flat and 0 for |y| >= 1."""
    y = np.abs(np.asarray(y, dtype=float))
    r = np.clip((y - flat) / (1.0 - flat), 0.0, 1.0)

    def psi(v):
        out = np.zeros_like(v)
        pos = v > 0
        out[pos] = np.exp(-1.0 / v[pos])
        return out

    a, b = psi(1.0 - r), psi(r)
    return a / (a + b)


def tangent_derivative_line(state: CoeffState, x: np.ndarray) -> np.ndarray:
    """T_x = Re(conj(u) N) along x, with an arbitrary frame at the first node.

    Everything downstream uses rotation-invariant norms, so the frame choice is
    immaterial.
    """
    x = np.asarray(x, dtype=float)
    dx = float(x[1] - x[0])
    u = _field_line(state, x)
    ug = tuple(_field_line(state, x[:-1] + off * dx) for off in GAUSS_OFFSETS)
    frames = parallel_frame_space(u, dx, Frame.standard(), 0, u_gauss=ug)
    return u.real[:, None] * frames[:, 1, :] + u.imag[:, None] * frames[:, 2, :]


def windowed_transform(x: np.ndarray, w: np.ndarray, xi: np.ndarray, L: float) -> np.ndarray:
    """|int e^{i x xi} w(x) W(x/L) dx| by the trapezoid rule (W vanishes at the ends)."""
    x = np.asarray(x, dtype=float)
    dx = float(x[1] - x[0])
    weighted = w * plateau_window(x / L)[:, None]
    out = np.empty(len(xi))
    for i, q in enumerate(xi):
        ph = np.exp(1j * q * x)
        out[i] = float(np.linalg.norm(dx * (ph @ weighted)))
    return out


def two_corner_spec(theta: float, gamma: float = 0.0) -> PolygonSpec:
    """Corners at -1 and 1 with the same angle theta."""
    return PolygonSpec((-1, 1), (theta, theta), (gamma, gamma))


@dataclass
class GrowthReport:
    theta: float
    times: np.ndarray
    sup_inside: np.ndarray
    sup_inside_alt: np.ndarray
    sup_outside: np.ndarray
    slope: float
    intercept: float
    r2: float
    outside_ratio: float
    window_sensitivity: float
    flagged: bool
    metadata: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "theta": self.theta, "t": self.times.tolist(), "sup_inside": self.sup_inside.tolist(),
            "sup_inside_alt": self.sup_inside_alt.tolist(), "sup_outside": self.sup_outside.tolist(),
            "slope": self.slope, "intercept": self.intercept, "r2": self.r2, "outside_ratio": self.outside_ratio,
            "window_sensitivity": self.window_sensitivity, "flagged": self.flagged, "metadata": self.metadata,
        }


def tangent_fourier_growth(
    theta: float,
    times: Sequence[float],
    *,
    L: float = 8.0,
    L_alt: float = 12.0,
    points_per_radian: float = 4.0,
    xi_samples: int = 33,
    margin: int = 8,
    step: float = 0.02,
    c0: float = HASIMOTO_COUPLING,
    t_anchor: Optional[float] = None,
) -> GrowthReport:
    """sup |w_hat(t, xi)| over xi in B(1/t, sqrt t) for w = T_x of the two-corner run.

    Each time uses the windowed transform with W(x/L) and, as a sensitivity
    check, W(x/L_alt). Outside values are the sup over |xi| <= 1/(4t) and
    7/(4t) <= |xi| <= 3/t. The grid resolves the largest local wavenumber
    (|x| + 1)/(2t) with ``points_per_radian`` samples.
    """
    times = np.sort(np.asarray(times, dtype=float))
    if L < 8:
        raise ValueError("window half-width L must be at least 8")
    t_anchor = t_anchor if t_anchor is not None else times[0] / 4.0
    spec = two_corner_spec(theta)
    alpha = polygon_band(spec, margin)
    path = coefficient_path(alpha, t_anchor, times[-1], c0=c0, step=step)
    half = max(L, L_alt)
    inside, inside_alt, outside = [], [], []
    for t in times:
        state = path.state_at(t)
        kmax = (half + 1.0) / (2.0 * t)
        dx = 1.0 / (points_per_radian * kmax)
        npts = 2 * int(math.ceil(half / dx)) + 1
        x = np.linspace(-half, half, npts)
        w = tangent_derivative_line(state, x)
        xi_in = 1.0 / t + math.sqrt(t) * np.linspace(-1.0, 1.0, xi_samples)
        inside.append(windowed_transform(x, w, xi_in, L).max())
        inside_alt.append(windowed_transform(x, w, xi_in, L_alt).max())
        xi_out = np.concatenate([np.linspace(-0.25 / t, 0.25 / t, xi_samples), np.linspace(1.75 / t, 3.0 / t, xi_samples)])
        outside.append(windowed_transform(x, w, xi_out, L).max())
    inside, inside_alt, outside = map(np.array, (inside, inside_alt, outside))
    X = np.log(1.0 / times)
    slope, icpt = np.polyfit(X, inside, 1)
    resid = inside - (slope * X + icpt)
    ss_tot = float(np.sum((inside - inside.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0
    sens = float(np.max(np.abs(inside_alt - inside) / inside))
    meta = {"L": L, "L_alt": L_alt, "t_anchor": t_anchor, "margin": margin, "split_step": step, "c0": c0,
            "points_per_radian": points_per_radian, "xi_samples": xi_samples, "convention": "int e^{i x xi} w dx"}
    return GrowthReport(theta, times, inside, inside_alt, outside, float(slope), float(icpt), r2,
                        float(outside.max() / np.median(outside)), sens, sens > 0.1, meta)


# --- energy density of T_x -----------------------------------------------------------

def energy_closed_form(weights: Sequence[float]) -> float:
    """4 sum (1 - exp(-pi a_k^2)), the band energy of the polygonal trace."""
    a = np.asarray(weights, dtype=float)
    return float(4.0 * np.sum(1.0 - np.exp(-math.pi * a * a)))


def energy_positive_time(weights: Sequence[float]) -> float:
    """4 pi sum a_k^2."""
    a = np.asarray(weights, dtype=float)
    return float(4.0 * math.pi * np.sum(a * a))


def band_energy_from_jumps(positions: Sequence[float], gram: np.ndarray, n: float, nodes: int = 64) -> float:
    """int_n^{n+1} |sum_k J_k e^{-2 pi i x_k xi}|^2 d xi from the Gram matrix J_k . J_l.

    Frequencies are in cycles per unit length, so integer-spaced jumps are
    orthogonal over each unit band. Gauss-Legendre on ``nodes`` points.
    """
    pos = np.asarray(positions, dtype=float)
    g, wts = np.polynomial.legendre.leggauss(nodes)
    xi = n + 0.5 * (g + 1.0)
    diff = pos[:, None] - pos[None, :]
    vals = np.real(np.einsum("kl,qkl->q", gram, np.exp(-2j * math.pi * xi[:, None, None] * diff[None])))
    return float(0.5 * np.dot(wts, vals))


@dataclass
class EnergyReport:
    closed_form: float
    positive_time: float
    band_values: Dict[float, float]
    extrapolated_gram: np.ndarray
    relative_error: float
    strict_gap: bool
    metadata: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "closed_form": self.closed_form, "positive_time": self.positive_time,
            "band_values": {str(k): v for k, v in self.band_values.items()},
            "relative_error": self.relative_error, "strict_gap": self.strict_gap, "metadata": self.metadata,
        }


def segment_tangents(state: CoeffState, segments: Sequence[Tuple[float, float]], dx: float) -> np.ndarray:
    """Mean tangent over each x-interval, all in one frame chain."""
    lo = min(a for a, _ in segments)
    hi = max(b for _, b in segments)
    npts = int(math.ceil((hi - lo) / dx)) + 1
    x = np.linspace(lo, hi, npts)
    step = float(x[1] - x[0])
    u = _field_line(state, x)
    ug = tuple(_field_line(state, x[:-1] + off * step) for off in GAUSS_OFFSETS)
    T = parallel_frame_space(u, step, Frame.standard(), 0, u_gauss=ug)[:, 0, :]
    return np.array([T[(x >= a) & (x <= b)].mean(axis=0) for a, b in segments])


def energy_density(
    spec: PolygonSpec,
    bands: Sequence[float] = (16.0,),
    *,
    t_fit: Sequence[float] = (1e-3, 2e-3, 4e-3, 8e-3),
    margin: int = 8,
    step: float = 0.02,
    c0: float = HASIMOTO_COUPLING,
    points_per_radian: float = 4.0,
) -> EnergyReport:
    """Band integrals of |w_hat(0, xi)|^2 from the extrapolated t = 0 trace.

    At each fit time the mean tangents on the segments between corners give a
    Gram matrix; its entries are extrapolated to t = 0 by a fit in 1, sqrt(t), t.
    The jumps' Gram matrix then gives the band integrals, which are compared
    with 4 sum (1 - exp(-pi a_k^2)).
    """
    idx = sorted(spec.indices)
    if not idx:
        raise ValueError("spec has no corners")
    edges = [idx[0] - 3.0] + [0.5 * (a + b) for a, b in zip(idx[:-1], idx[1:])] + [idx[-1] + 3.0]
    segments = []
    for i in range(len(edges)):
        centre = edges[i]
        if i == 0:
            segments.append((centre - 1.0, centre))
        elif i == len(edges) - 1:
            segments.append((centre, centre + 1.0))
        else:
            segments.append((centre - 0.25, centre + 0.25))
    t_fit = np.sort(np.asarray(t_fit, dtype=float))
    alpha = polygon_band(spec, margin)
    path = coefficient_path(alpha, t_fit[0], t_fit[-1], c0=c0, step=step)
    grams = []
    for t in t_fit:
        state = path.state_at(t) if t > t_fit[0] else path.state_at_node(0)
        span = max(abs(segments[0][0]), abs(segments[-1][1]))
        dx = 1.0 / (points_per_radian * (span + 1.0) / (2.0 * t))
        Tm = segment_tangents(state, segments, dx)
        grams.append(Tm @ Tm.T)
    grams = np.array(grams)
    root = np.sqrt(t_fit)
    design = np.column_stack([np.ones_like(root), root, t_fit])
    flat = grams.reshape(len(t_fit), -1)
    coef, *_ = np.linalg.lstsq(design, flat, rcond=None)
    gram0 = coef[0].reshape(grams.shape[1:])
    m = len(segments)
    D = np.zeros((m - 1, m))
    for k in range(m - 1):
        D[k, k], D[k, k + 1] = -1.0, 1.0
    jump_gram = D @ gram0 @ D.T
    positions = [float(k) for k in idx]
    values = {float(n): band_energy_from_jumps(positions, jump_gram, n) for n in bands}
    weights = spec.weights
    closed = energy_closed_form(weights)
    err = max(abs(v - closed) / closed for v in values.values()) if closed > 0 else max(abs(v) for v in values.values())
    meta = {"t_fit": t_fit.tolist(), "margin": margin, "split_step": step, "c0": c0, "segments": segments,
            "convention": "int e^{-2 pi i x xi} w dx, unit bands in cycles"}
    return EnergyReport(closed, energy_positive_time(weights), values, gram0, float(err),
                        closed < energy_positive_time(weights), meta)


# --- provenance -------------------------------------------------------------------

def manifest(config: Dict[str, object], extra: Optional[Dict[str, object]] = None) -> Dict[str, object]:
    """Config, library versions and platform for a run manifest."""
    import scipy

    out = {
        "package": "vortexlab",
        "config": config,
        "versions": {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__},
        "platform": platform.platform(),
    }
    if extra:
        out.update(extra)
    return out


def write_manifest(path, config: Dict[str, object], extra: Optional[Dict[str, object]] = None) -> Path:
    path = Path(path)
    path.write_text(json.dumps(manifest(config, extra), indent=2, default=str))
    return path
