"""Self-similar binormal-flow solutions chi_a(t, x) = sqrt(t) G_a(x / sqrt(t)).

The profile G_a has filament function a exp(i s^2 / 4) (curvature a, torsion
s/2). Its tangent converges to two directions A+ and A- as s -> +-inf, so
chi_a(0, .) is a corner. The angle law -log sin(theta/2) = c* a^2 is measured
here rather than assumed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .hasimoto import GAUSS_OFFSETS, Frame, integrate_tangent, parallel_frame_space

SATURATION_TOL = 5e-2


@dataclass
class SelfSimilarProfile:
    """Profile curve G(s) on s in [-S, S] with fitted asymptotic directions."""

    a: float
    s: np.ndarray
    G: np.ndarray
    frames: np.ndarray
    A_plus: np.ndarray
    A_minus: np.ndarray
    theta: float
    oscillation: float
    saturated: bool
    meta: Dict[str, float] = field(default_factory=dict)

    @property
    def T(self) -> np.ndarray:
        return self.frames[:, 0, :]

    def curve(self, t: float, x: np.ndarray) -> np.ndarray:
        """chi_a(t, x) = sqrt(t) G(x / sqrt(t)), G linearly interpolated."""
        r = math.sqrt(t)
        y = np.asarray(x, dtype=float) / r
        if np.any(np.abs(y) > self.s[-1]):
            raise ValueError("x / sqrt(t) leaves the profile window")
        return r * np.stack([np.interp(y, self.s, self.G[:, c]) for c in range(3)], axis=1)


def selfsim_filament(a: float, t: float, x):
    """a exp(i x^2 / (4t)) / sqrt(t)."""
    if not t > 0:
        raise ValueError("t must be positive")
    x = np.asarray(x, dtype=float)
    return a * np.exp(1j * x * x / (4.0 * t)) / math.sqrt(t)


def selfsim_gauge(a: float, t: float) -> float:
    """f = a^2 / t, the gauge under which selfsim_filament solves the frame system."""
    return a * a / t


def cfm_integral(a: float, t0: float, t1: float) -> float:
    """int_{t0}^{t1} ||d_x T_a||_inf^2 dtau = a^2 log(t1/t0); diverges as t0 -> 0."""
    if not 0 < t0 <= t1:
        raise ValueError("need 0 < t0 <= t1")
    return a * a * math.log(t1 / t0)


def integrate_profile(a: float, S: float, dx: float = 2.0 ** -7, window: float = 0.1) -> SelfSimilarProfile:
    """Integrate the profile frame from s = 0 with the standard frame there.

    A+ and A- are averages of T over the outer ``window`` fraction of each side,
    and theta is the angle between A+ and -A-. ``oscillation`` is the largest
    deviation of T from its window mean; above SATURATION_TOL the profile is
    flagged as not saturated.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if S < 20.0 / a:
        raise ValueError(f"S={S} too short for tangent saturation; need S >= 20/a = {20.0 / a:.3g}")
    n_half = int(round(S / dx))
    s = dx * np.arange(-n_half, n_half + 1)
    u = a * np.exp(1j * s * s / 4.0)
    left = s[:-1]
    ug = tuple(a * np.exp(1j * (left + off * dx) ** 2 / 4.0) for off in GAUSS_OFFSETS)
    frames = parallel_frame_space(u, dx, Frame.standard(), n_half, u_gauss=ug)
    # G(0) = 2 T ^ T_s (0) = 2 a e2(0) from the profile equation (G - s G')/2 = G' ^ G''.
    G = integrate_tangent(frames, u, dx, n_half, 2.0 * a * frames[n_half, 2])
    T = frames[:, 0, :]
    w = max(2, int(round(window * n_half)))
    tail_p, tail_m = T[-w:], T[:w]
    A_plus = tail_p.mean(axis=0)
    A_minus = tail_m.mean(axis=0)
    osc = float(max(np.max(np.linalg.norm(tail_p - A_plus, axis=1)), np.max(np.linalg.norm(tail_m - A_minus, axis=1))))
    A_plus /= np.linalg.norm(A_plus)
    A_minus /= np.linalg.norm(A_minus)
    theta = math.acos(float(np.clip(np.dot(A_plus, -A_minus), -1.0, 1.0)))
    return SelfSimilarProfile(
        a=a, s=s, G=G, frames=frames, A_plus=A_plus, A_minus=A_minus, theta=theta,
        oscillation=osc, saturated=osc < SATURATION_TOL, meta={"S": S, "dx": dx, "window": window},
    )


@dataclass(frozen=True)
class AngleLawFit:
    a: np.ndarray
    theta: np.ndarray
    c_star: float
    r2: float

    def to_dict(self) -> dict:
        return {"a": self.a.tolist(), "theta": self.theta.tolist(), "c_star": self.c_star, "r2": self.r2}


def fit_angle_law(a_values: Sequence[float], thetas: Sequence[float]) -> AngleLawFit:
    """Least squares through the origin of -log sin(theta/2) against a^2."""
    a = np.asarray(a_values, dtype=float)
    th = np.asarray(thetas, dtype=float)
    x = a * a
    y = -np.log(np.sin(th / 2.0))
    c = float(np.dot(x, y) / np.dot(x, x))
    resid = y - c * x
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return AngleLawFit(a, th, c, r2)


def calibrate(a_values: Sequence[float], S_factor: float = 20.0, dx: Optional[float] = None) -> AngleLawFit:
    """Run integrate_profile over an a-grid with S = S_factor / min(a) and fit c*."""
    S = S_factor / min(a_values)
    step = dx if dx is not None else min(2.0 ** -7, 0.25 / S)
    thetas = [integrate_profile(a, S, step).theta for a in a_values]
    return fit_angle_law(a_values, thetas)


def dump_profile(profile: SelfSimilarProfile, path) -> Path:
    """Rows {s, G1..3, T1..3} as CSV."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "G1", "G2", "G3", "T1", "T2", "T3"])
        for s, g, t in zip(profile.s, profile.G, profile.T):
            w.writerow([f"{v:.17g}" for v in (s, *g, *t)])
    return path


def dump_calibration(fit: AngleLawFit, path, extra: Optional[dict] = None) -> Path:
    path = Path(path)
    payload = fit.to_dict()
    if extra:
        payload.update(extra)
    path.write_text(json.dumps(payload, indent=2))
    return path
