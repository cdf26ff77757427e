"""Parallel frames, filament functions and curve reconstruction.

Conventions. A frame is stored as the rows (T, e1, e2) of a 3x3 array with
T = e1 x e2, and N = e1 + i e2. Along the curve

    T_x = Re(conj(u) N),  N_x = -u T,

and in time at a fixed arclength point

    T_t = Im(conj(u_x) N),  N_t = -i u_x T + i (|u|^2 - f)/2 N.

These two systems are compatible exactly when u solves
i u_t + u_xx + (|u|^2 - f) u / 2 = 0, and then chi_t = Im(conj(u) N) is the
binormal flow chi_t = chi_x ^ chi_xx. Both systems are linear with an
antisymmetric generator in the frame basis, so every step is an exact rotation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .seqcore import ComplexSeq

ORTHO_TOL = 1e-8
ORTHO_ABORT = 1e-6

Sampler = Callable[[float], Tuple[complex, complex, float]]
"""t -> (u, u_x, f) at the base point x0."""


class FrameDriftError(RuntimeError):
    """Orthonormality of a frame field drifted past the abort threshold."""


@dataclass(frozen=True)
class Frame:
    """Orthonormal right-handed frame (T, e1, e2)."""

    T: np.ndarray
    e1: np.ndarray
    e2: np.ndarray

    def __post_init__(self) -> None:
        for name in ("T", "e1", "e2"):
            vec = np.array(getattr(self, name), dtype=float).reshape(3)
            vec.setflags(write=False)
            object.__setattr__(self, name, vec)
        err = orthonormality_error(self.matrix)
        if err > ORTHO_TOL:
            raise ValueError(f"frame is not orthonormal (error {err:.3e})")
        if np.dot(np.cross(self.e1, self.e2), self.T) < 0:
            raise ValueError("frame must be right-handed: T = e1 x e2")

    @property
    def matrix(self) -> np.ndarray:
        return np.stack([self.T, self.e1, self.e2])

    @property
    def N(self) -> np.ndarray:
        return self.e1 + 1j * self.e2

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Frame":
        return cls(m[0], m[1], m[2])

    @classmethod
    def standard(cls) -> "Frame":
        """T = e_x, e1 = e_y, e2 = e_z."""
        return cls(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0]))


def orthonormality_error(frames: np.ndarray) -> float:
    """Max deviation of row-stacked frames (..., 3, 3) from orthonormality."""
    m = np.asarray(frames, dtype=float)
    gram = m @ np.swapaxes(m, -1, -2)
    return float(np.max(np.abs(gram - np.eye(3))))


def _check_drift(frames: np.ndarray, where: str) -> None:
    err = orthonormality_error(frames)
    if err > ORTHO_ABORT:
        raise FrameDriftError(f"{where}: orthonormality error {err:.3e} exceeds {ORTHO_ABORT:g}")


@dataclass
class CurveState:
    """Curve samples at one time: arclength grid, points, and frames (n, 3, 3)."""

    t: float
    x: np.ndarray
    chi: np.ndarray
    frames: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def T(self) -> np.ndarray:
        return self.frames[:, 0, :]

    def frame(self, i: int) -> Frame:
        return Frame.from_matrix(self.frames[i])

    def tangent_consistency(self) -> float:
        """max |D_x chi - T| with a central difference on interior samples."""
        dx = self.x[1] - self.x[0]
        d = (self.chi[2:] - self.chi[:-2]) / (2 * dx)
        return float(np.max(np.linalg.norm(d - self.T[1:-1], axis=1)))


@dataclass(frozen=True)
class PolygonSpec:
    """Corners at integer arclength positions with curvature and torsion angles.

    ``theta[i]`` is the angle at corner ``indices[i]`` (pi means no corner) and
    ``gamma[i]`` the torsion angle entering alpha_k = a_k exp(i gamma_k).
    """

    indices: Tuple[int, ...]
    theta: Tuple[float, ...]
    gamma: Tuple[float, ...]
    base_point: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    base_frame: Optional[Frame] = None

    def __post_init__(self) -> None:
        if not (len(self.indices) == len(self.theta) == len(self.gamma)):
            raise ValueError("indices, theta and gamma must have equal length")
        for th in self.theta:
            if not 0 < th <= math.pi:
                raise ValueError(f"corner angle {th!r} outside (0, pi]")
        for g in self.gamma:
            if not 0 <= g < 2 * math.pi:
                raise ValueError(f"torsion angle {g!r} outside [0, 2 pi)")

    @classmethod
    def uniform(cls, n: int, theta: float, gamma: float = 0.0) -> "PolygonSpec":
        """Corners k = -n..n, all with angle theta and torsion angle gamma."""
        idx = tuple(range(-n, n + 1))
        return cls(idx, (theta,) * len(idx), (gamma,) * len(idx))

    @property
    def weights(self) -> np.ndarray:
        return np.array([angle_to_weight(th) for th in self.theta])


def angle_to_weight(theta: float) -> float:
    """a = sqrt(-(2/pi) log sin(theta/2))."""
    if not 0 < theta <= math.pi:
        raise ValueError("theta must lie in (0, pi]")
    val = -(2.0 / math.pi) * math.log(math.sin(theta / 2.0))
    return math.sqrt(max(val, 0.0))


def weight_to_angle(a: float) -> float:
    """Inverse of angle_to_weight: sin(theta/2) = exp(-pi a^2 / 2)."""
    if a < 0:
        raise ValueError("weight must be nonnegative")
    return 2.0 * math.asin(math.exp(-math.pi * a * a / 2.0))


def polygon_filament(spec: PolygonSpec) -> ComplexSeq:
    """alpha_k = a_k exp(i gamma_k) on the symmetric support covering all corners."""
    entries = {}
    for k, th, g in zip(spec.indices, spec.theta, spec.gamma):
        a = angle_to_weight(th)
        if a > 0:
            entries[int(k)] = a * np.exp(1j * g)
    K = max((abs(int(k)) for k in spec.indices), default=0)
    return ComplexSeq.from_dict(entries, K)


# --- rotation kernels ---------------------------------------------------------

def space_generator(u) -> np.ndarray:
    """Antisymmetric generator of the space ODE, shape (..., 3, 3)."""
    u = np.asarray(u, dtype=complex)
    a, b = u.real, u.imag
    g = np.zeros(u.shape + (3, 3))
    g[..., 0, 1], g[..., 0, 2] = a, b
    g[..., 1, 0], g[..., 2, 0] = -a, -b
    return g


def time_generator(u, ux, f) -> np.ndarray:
    """Antisymmetric generator of the time ODE, shape (..., 3, 3)."""
    u = np.asarray(u, dtype=complex)
    ux = np.asarray(ux, dtype=complex)
    beta = 0.5 * (np.abs(u) ** 2 - np.asarray(f, dtype=float))
    p, q = ux.real, ux.imag
    g = np.zeros(np.broadcast(u, ux, beta).shape + (3, 3))
    g[..., 0, 1], g[..., 0, 2] = -q, p
    g[..., 1, 0], g[..., 1, 2] = q, -beta
    g[..., 2, 0], g[..., 2, 1] = -p, beta
    return g


def expm_antisym(omega: np.ndarray) -> np.ndarray:
    """Rodrigues formula for exp of antisymmetric (..., 3, 3) arrays."""
    omega = np.asarray(omega, dtype=float)
    w = np.stack([omega[..., 2, 1], omega[..., 0, 2], omega[..., 1, 0]], axis=-1)
    th = np.linalg.norm(w, axis=-1)[..., None, None]
    small = th < 1e-6
    th_safe = np.where(small, 1.0, th)
    c1 = np.where(small, 1.0 - th ** 2 / 6.0, np.sin(th_safe) / th_safe)
    c2 = np.where(small, 0.5 - th ** 2 / 24.0, (1.0 - np.cos(th_safe)) / th_safe ** 2)
    eye = np.broadcast_to(np.eye(3), omega.shape)
    return eye + c1 * omega + c2 * (omega @ omega)


def magnus4(g1: np.ndarray, g2: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order Magnus exponent from generator values at the two Gauss points."""
    comm = g2 @ g1 - g1 @ g2
    return 0.5 * h * (g1 + g2) + (math.sqrt(3.0) / 12.0) * h * h * comm


def prefix_products(steps: np.ndarray) -> np.ndarray:
    """P_n = E_n E_{n-1} ... E_1 for a stack of (n, 3, 3) matrices, by doubling."""
    out = np.array(steps, dtype=float, copy=True)
    shift = 1
    n = out.shape[0]
    while shift < n:
        out[shift:] = out[shift:] @ out[:-shift]
        shift *= 2
    return out


GAUSS_OFFSETS = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)


def _lagrange_gauss(u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Cubic interpolation of samples to the two Gauss points of each cell."""
    n = u.size
    if n < 4:
        mid = 0.5 * (u[:-1] + u[1:])
        return mid, mid
    g = np.array([0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6])
    res = np.empty((2, n - 1), dtype=complex)
    for c in range(n - 1):
        s = min(max(c - 1, 0), n - 4)
        nodes = np.arange(s, s + 4, dtype=float)
        vals = u[s:s + 4]
        for gi, off in enumerate(g):
            xq = c + off
            w = np.ones(4)
            for i in range(4):
                for j in range(4):
                    if i != j:
                        w[i] *= (xq - nodes[j]) / (nodes[i] - nodes[j])
            res[gi, c] = np.dot(w, vals)
    return res[0], res[1]


def _gauss_weights_matrix() -> np.ndarray:
    g = np.array([0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6])
    mats = []
    for off in g:
        xq = 1.0 + off
        nodes = np.arange(4.0)
        w = np.ones(4)
        for i in range(4):
            for j in range(4):
                if i != j:
                    w[i] *= (xq - nodes[j]) / (nodes[i] - nodes[j])
        mats.append(w)
    return np.array(mats)


def _gauss_interp(u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized cubic interpolation to Gauss points; one-sided at the ends."""
    n = u.size
    if n < 5:
        return _lagrange_gauss(u)
    w = _gauss_weights_matrix()
    g1 = np.empty(n - 1, dtype=complex)
    g2 = np.empty(n - 1, dtype=complex)
    stencil = np.stack([u[:-3], u[1:-2], u[2:-1], u[3:]], axis=1)  # cells 1..n-3
    g1[1:n - 2] = stencil @ w[0]
    g2[1:n - 2] = stencil @ w[1]
    e1, e2 = _lagrange_gauss(u[:4])
    g1[0], g2[0] = e1[0], e2[0]
    e1, e2 = _lagrange_gauss(u[-4:])
    g1[-1], g2[-1] = e1[-1], e2[-1]
    return g1, g2


def parallel_frame_space(
    u: np.ndarray,
    dx: float,
    frame0: Frame,
    index0: int = 0,
    u_gauss: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> np.ndarray:
    """Frames along a uniform grid from the frame at sample ``index0``.

    Returns an (n, 3, 3) array of row-stacked frames. Each cell is one
    fourth-order Magnus rotation. u at the two Gauss points of every cell is
    taken from ``u_gauss`` when given, otherwise interpolated from the samples.
    """
    u = np.asarray(u, dtype=complex)
    n = u.size
    if not 0 <= index0 < n:
        raise ValueError("index0 outside the grid")
    frames = np.empty((n, 3, 3))
    f0 = frame0.matrix
    frames[index0] = f0
    if n == 1:
        return frames
    ga, gb = _gauss_interp(u) if u_gauss is None else (np.asarray(u_gauss[0]), np.asarray(u_gauss[1]))
    G1, G2 = space_generator(ga), space_generator(gb)
    fwd = expm_antisym(magnus4(G1, G2, dx))
    if index0 < n - 1:
        pref = prefix_products(fwd[index0:])
        frames[index0 + 1:] = pref @ f0
    if index0 > 0:
        # Going left reverses the order of Gauss points and the step sign.
        back = expm_antisym(magnus4(G2[:index0][::-1], G1[:index0][::-1], -dx))
        pref = prefix_products(back)
        frames[:index0] = (pref @ f0)[::-1]
    _check_drift(frames, "parallel_frame_space")
    return frames


def frame_time_step(frame: np.ndarray, sampler: Sampler, t: float, dt: float) -> np.ndarray:
    """Advance a row-stacked frame over [t, t + dt] with fourth-order Magnus."""
    c = math.sqrt(3.0) / 6.0
    u1, ux1, f1 = sampler(t + (0.5 - c) * dt)
    u2, ux2, f2 = sampler(t + (0.5 + c) * dt)
    om = magnus4(time_generator(u1, ux1, f1), time_generator(u2, ux2, f2), dt)
    out = expm_antisym(om) @ frame
    _check_drift(out, "frame_time_step")
    return out


def chi_velocity(u, frames: np.ndarray) -> np.ndarray:
    """Im(conj(u) N) for row-stacked frames."""
    u = np.asarray(u, dtype=complex)
    return (u.real[..., None] * frames[..., 2, :] - u.imag[..., None] * frames[..., 1, :])


def integrate_tangent(frames: np.ndarray, u: np.ndarray, dx: float, index0: int, point0) -> np.ndarray:
    """chi along the grid from chi(x_index0) = point0 with a corrected trapezoid rule."""
    T = frames[:, 0, :]
    dT = (u.real[:, None] * frames[:, 1, :] + u.imag[:, None] * frames[:, 2, :])
    inc = 0.5 * dx * (T[:-1] + T[1:]) + dx * dx / 12.0 * (dT[:-1] - dT[1:])
    cum = np.vstack([np.zeros(3), np.cumsum(inc, axis=0)])
    return np.asarray(point0, dtype=float) + cum - cum[index0]


@dataclass
class TimeTrace:
    """Frame and position at the base point x0 at each time of ``t``."""

    t: np.ndarray
    frames: np.ndarray
    chi: np.ndarray


def time_trace(
    sampler: Sampler,
    frame0: Frame,
    point0,
    t0: float,
    t_save: Sequence[float],
    dt: float,
) -> TimeTrace:
    """Integrate the time ODE at x0 and chi_t = Im(conj(u) N) alongside.

    chi uses Simpson's rule per step with the midpoint frame from a half step.
    """
    t_save = np.asarray(t_save, dtype=float)
    if np.any(np.diff(t_save) < 0) or (t_save.size and t_save[0] < t0):
        raise ValueError("save times must be increasing and not before t0")
    frames = np.empty((t_save.size, 3, 3))
    chis = np.empty((t_save.size, 3))
    F = frame0.matrix
    X = np.asarray(point0, dtype=float).copy()
    t = t0

    def vel(tt, FF):
        u, _, _ = sampler(tt)
        return chi_velocity(u, FF)

    for i, goal in enumerate(t_save):
        while goal - t > 1e-14 * max(1.0, abs(goal)):
            h = min(dt, goal - t)
            Fh = frame_time_step(F, sampler, t, 0.5 * h)
            F1 = frame_time_step(Fh, sampler, t + 0.5 * h, 0.5 * h)
            X = X + h / 6.0 * (vel(t, F) + 4 * vel(t + 0.5 * h, Fh) + vel(t + h, F1))
            F, t = F1, t + h
        frames[i] = F
        chis[i] = X
    return TimeTrace(t_save, frames, chis)


def reconstruct_curve(
    u_field: Callable[[float, np.ndarray], np.ndarray],
    sampler: Sampler,
    x: np.ndarray,
    t_save: Sequence[float],
    *,
    base_point=(0.0, 0.0, 0.0),
    x0_index: int = 0,
    t0: float = 0.0,
    frame0: Optional[Frame] = None,
    dt: float = 1e-2,
) -> List[CurveState]:
    """Curves chi(t, .) at the save times.

    The base-point trace (frame and position at x[x0_index]) comes from the
    time ODE; each saved curve is then spread along x by the space ODE with
    u_field(t, x).
    """
    frame0 = frame0 or Frame.standard()
    x = np.asarray(x, dtype=float)
    dx = float(x[1] - x[0])
    trace = time_trace(sampler, frame0, base_point, t0, t_save, dt)
    out = []
    for t, F, P in zip(trace.t, trace.frames, trace.chi):
        u = np.asarray(u_field(float(t), x), dtype=complex)
        frames = parallel_frame_space(u, dx, Frame.from_matrix(F), x0_index)
        chi = integrate_tangent(frames, u, dx, x0_index, P)
        out.append(CurveState(float(t), x, chi, frames, {"x0_index": x0_index}))
    return out


def route_discrepancy(traj: Sequence[CurveState], u_field: Callable[[float, np.ndarray], np.ndarray]) -> float:
    """Compare chi from the space route with chi_t = Im(conj(u) N) integrated in time.

    The time integral at every x uses Simpson's rule over the saved times,
    which must be uniform and odd in number.
    """
    if len(traj) < 3 or len(traj) % 2 == 0:
        raise ValueError("need an odd number (>= 3) of saved times")
    ts = np.array([c.t for c in traj])
    dt = np.diff(ts)
    if not np.allclose(dt, dt[0], rtol=1e-9):
        raise ValueError("saved times must be uniform")
    vel = np.stack([chi_velocity(u_field(c.t, c.x), c.frames) for c in traj])
    w = np.ones(len(traj))
    w[1:-1:2], w[2:-1:2] = 4, 2
    integral = dt[0] / 3.0 * np.tensordot(w, vel, axes=1)
    return float(np.max(np.linalg.norm(traj[0].chi + integral - traj[-1].chi, axis=1)))


def binormal_residual(traj: Sequence[CurveState]) -> Tuple[np.ndarray, np.ndarray]:
    """Central-difference residuals of chi_t = chi_x ^ chi_xx and T_t = T ^ T_xx.

    Returns two arrays of shape (n_times - 2, n_x - 2).
    """
    if len(traj) < 3:
        raise ValueError("need at least three saved times")
    ts = np.array([c.t for c in traj])
    dt = np.diff(ts)
    if not np.allclose(dt, dt[0], rtol=1e-9):
        raise ValueError("saved times must be uniform")
    h = dt[0]
    dx = traj[0].x[1] - traj[0].x[0]
    chi = np.stack([c.chi for c in traj])
    T = np.stack([c.T for c in traj])
    chi_t = (chi[2:, 1:-1] - chi[:-2, 1:-1]) / (2 * h)
    chi_x = (chi[1:-1, 2:] - chi[1:-1, :-2]) / (2 * dx)
    chi_xx = (chi[1:-1, 2:] - 2 * chi[1:-1, 1:-1] + chi[1:-1, :-2]) / dx ** 2
    r_chi = np.linalg.norm(chi_t - np.cross(chi_x, chi_xx), axis=-1)
    T_t = (T[2:, 1:-1] - T[:-2, 1:-1]) / (2 * h)
    T_xx = (T[1:-1, 2:] - 2 * T[1:-1, 1:-1] + T[1:-1, :-2]) / dx ** 2
    r_T = np.linalg.norm(T_t - np.cross(T[1:-1, 1:-1], T_xx), axis=-1)
    return r_chi, r_T


def filament_function(T: np.ndarray, dx: float, e1_0: np.ndarray, index0: int = 0) -> np.ndarray:
    """u = <T_x, e1> + i <T_x, e2> of a sampled unit tangent field.

    e1 is carried along by discrete parallel transport (the minimal rotation
    taking T_i to T_{i+1}); T_x uses central differences (one-sided at ends).
    """
    T = np.asarray(T, dtype=float)
    n = T.shape[0]
    e1 = np.empty_like(T)
    e1[index0] = e1_0 - np.dot(e1_0, T[index0]) * T[index0]
    e1[index0] /= np.linalg.norm(e1[index0])
    for i in range(index0 + 1, n):
        e1[i] = _transport(e1[i - 1], T[i - 1], T[i])
    for i in range(index0 - 1, -1, -1):
        e1[i] = _transport(e1[i + 1], T[i + 1], T[i])
    e2 = np.cross(T, e1)
    Tx = np.gradient(T, dx, axis=0, edge_order=2)
    return np.einsum("ij,ij->i", Tx, e1) + 1j * np.einsum("ij,ij->i", Tx, e2)


def _transport(v: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rotate v by the minimal rotation sending unit a to unit b."""
    axis = np.cross(a, b)
    s = np.linalg.norm(axis)
    c = float(np.dot(a, b))
    if s < 1e-15:
        return v
    k = axis / s
    return v * c + np.cross(k, v) * s + k * np.dot(k, v) * (1 - c)


# --- explicit solutions --------------------------------------------------------

SMOKE_RING_GAUGE = 3.0
"""f making u = exp(-i t) a solution: |u|^2 - f = -2 turns N at unit rate."""


def smoke_ring_sampler(t: float) -> Tuple[complex, complex, float]:
    return complex(np.exp(-1j * t)), 0j, SMOKE_RING_GAUGE


def smoke_ring_field(t: float, x: np.ndarray) -> np.ndarray:
    return np.full(np.shape(x), np.exp(-1j * t))


def smoke_ring_curve(t: float, x: np.ndarray) -> np.ndarray:
    """Unit circle in the (1, 2) plane translating at unit speed along axis 3."""
    x = np.asarray(x, dtype=float)
    return np.stack([np.sin(x), 1 - np.cos(x), np.full_like(x, t)], axis=1)


def soliton_field(alpha: float) -> Callable[[float, np.ndarray], np.ndarray]:
    """u = 2 sech(x - 2 alpha t) exp(i alpha x + i (1 - alpha^2) t), with f = 0."""

    def field_(t: float, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return 2.0 / np.cosh(x - 2 * alpha * t) * np.exp(1j * (alpha * x + (1 - alpha ** 2) * t))

    return field_


def soliton_sampler(alpha: float, x0: float = 0.0) -> Sampler:
    field_ = soliton_field(alpha)

    def sampler(t: float) -> Tuple[complex, complex, float]:
        u = complex(field_(t, np.array(x0)))
        ux = u * (-math.tanh(x0 - 2 * alpha * t) + 1j * alpha)
        return u, ux, 0.0

    return sampler


def soliton_curve(alpha: float, t: float, x: np.ndarray) -> np.ndarray:
    """Closed-form binormal-flow curve with curvature 2 sech and torsion alpha."""
    x = np.asarray(x, dtype=float)
    eta = x - 2 * alpha * t
    phase = alpha * x + (1 - alpha ** 2) * t
    r = 2.0 / (1 + alpha ** 2)
    return np.stack([x - r * np.tanh(eta), r / np.cosh(eta) * np.cos(phase), r / np.cosh(eta) * np.sin(phase)], axis=1)


def rigid_align(source: np.ndarray, target: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Proper rotation R and shift b minimizing sum |R p + b - q|^2 (Kabsch)."""
    src = np.asarray(source, dtype=float)
    tgt = np.asarray(target, dtype=float)
    cs, ct = src.mean(axis=0), tgt.mean(axis=0)
    h = (src - cs).T @ (tgt - ct)
    U, _, Vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(Vt.T @ U.T))
    R = Vt.T @ np.diag([1.0, 1.0, d]) @ U.T
    return R, ct - R @ cs


def dump_curves(traj: Sequence[CurveState], path, binary: bool = False) -> Path:
    """Rows {t, x, chi1..3, T1..3} as CSV, or a raw float64 (n, 8) array."""
    path = Path(path)
    rows = np.concatenate(
        [np.column_stack([np.full(c.x.size, c.t), c.x, c.chi, c.T]) for c in traj]
    )
    if binary:
        rows.astype("<f8").tofile(path)
        return path
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "chi1", "chi2", "chi3", "T1", "T2", "T3"])
        for r in rows:
            w.writerow([f"{v:.17g}" for v in r])
    return path
