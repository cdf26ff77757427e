"""Riemann's complex function and its local and global regularity.

    R_{x0}(t) = sum_{j != 0} (e^{i t j^2} - 1) / j^2 * e^{i j x0}

The torsion-offset variant replaces j by j - omega0 in the weight and in the
frequency and sums over all integers j with j != omega0.

Rational times of R are 2 pi p / q; these are the images of the rational times
p / (2 pi q) of the coefficient system under tau = 4 pi^2 t, so a RationalTime
describes both.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .seqcore import ContinuedFractionExpansion, RationalTime, continued_fraction, gauss_sum

TWO_PI = 2.0 * math.pi
XI_CUT = 50.0
F_ZERO_MODULUS = 2.0 * math.sqrt(math.pi)


@dataclass(frozen=True)
class RiemannSeries:
    """R_{x0} (or its omega0 variant) truncated to |j| <= N."""

    x0: float = 0.0
    omega0: float = 0.0
    N: int = 10_000

    def __post_init__(self) -> None:
        if self.N < 8:
            raise ValueError("truncation N must be at least 8")
        if abs(self.omega0) >= self.N:
            raise ValueError("omega0 must be smaller than N")

    @property
    def tail_bound(self) -> float:
        """4 / (N - |omega0|), a bound on sum_{|j| > N} 2 / (j - omega0)^2."""
        return 4.0 / (self.N - abs(self.omega0))

    @property
    def plain(self) -> bool:
        return self.omega0 == 0

    def shifted_indices(self) -> Tuple[np.ndarray, np.ndarray]:
        """(frequency roots j - omega0, space phases e^{i j x0}) of kept terms.

        For omega0 = 0 the pair (j, -j) is merged into one term with phase
        2 cos(j x0), so only j >= 1 appears.
        """
        if self.plain:
            j = np.arange(1, self.N + 1, dtype=np.int64)
            return j.astype(float), 2.0 * np.cos(j * self.x0) + 0j
        j = np.arange(-self.N, self.N + 1, dtype=np.int64)
        w = j - self.omega0
        keep = w != 0
        return w[keep], np.exp(1j * j[keep] * self.x0)


@dataclass(frozen=True)
class RiemannValue:
    value: np.ndarray
    tail_bound: float


def _reduce(t) -> np.ndarray:
    return np.remainder(np.asarray(t, dtype=float), TWO_PI)


def eval_R(series: RiemannSeries, t) -> RiemannValue:
    """Truncated series at t (scalar or array) with its certified tail bound.

    For omega0 = 0 the time is reduced modulo 2 pi first, so the evaluation is
    exactly periodic with respect to the float 2 pi.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    roots, phase = series.shifted_indices()
    freq = roots * roots
    weight = 1.0 / freq
    tt = _reduce(t_arr) if series.plain else t_arr
    vals = np.empty(tt.size, dtype=complex)
    step = max(1, 2_000_000 // freq.size)
    for lo in range(0, tt.size, step):
        block = tt[lo:lo + step]
        ang = np.remainder(np.outer(block, freq), TWO_PI)
        vals[lo:lo + step] = (np.exp(1j * ang) - 1.0) @ (phase * weight)
    vals = vals.reshape(np.shape(t)) if np.ndim(t) else vals[0]
    return RiemannValue(np.asarray(vals), series.tail_bound)


# --- exact phases at a base time -------------------------------------------------

def _frac_turns_times_square(turns: float, j: np.ndarray) -> np.ndarray:
    """frac(turns * j^2) for a float ``turns`` and int64 j with |j| < 2^30.

    Both the float and j^2 are split into 20-bit integer limbs, so every limb
    product is below 2^40 and exact in int64 and in float before reduction.
    """
    if np.any(np.abs(j) >= 2 ** 30):
        raise ValueError("|j| must stay below 2^30 for exact phases")
    fr = Fraction(turns) % 1
    A, D = fr.numerator, fr.denominator
    e = D.bit_length() - 1
    j2 = (j.astype(np.int64)) ** 2
    mask = np.int64((1 << 20) - 1)
    j_limbs = [(j2 >> np.int64(20 * k)) & mask for k in range(3)]
    acc = np.zeros(j.shape, dtype=float)
    shift = 0
    while A:
        limb = A & ((1 << 20) - 1)
        A >>= 20
        for k, jl in enumerate(j_limbs):
            m = e - shift - 20 * k
            if limb == 0 or m <= 0 or m >= 1000:
                continue
            prod = np.int64(limb) * jl
            if m < 62:
                prod = np.remainder(prod, np.int64(1) << np.int64(m))
            acc += prod.astype(float) / float(2 ** m)
            acc = np.remainder(acc, 1.0)
        shift += 20
    return acc


def _base_phases(series: RiemannSeries, turns: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not series.plain:
        raise ValueError("exact base phases need omega0 = 0")
    j = np.arange(1, series.N + 1, dtype=np.int64)
    base = np.exp(2j * math.pi * _frac_turns_times_square(turns, j))
    jf = j.astype(float)
    return jf * jf, base * 2.0 * np.cos(jf * series.x0), 1.0 / (jf * jf)


def increments(series: RiemannSeries, turns: float, h, _base=None) -> np.ndarray:
    """R(2 pi turns + h) - R(2 pi turns), with the base phases reduced exactly."""
    h_arr = np.atleast_1d(np.asarray(h, dtype=float))
    freq, coeff, weight = _base if _base is not None else _base_phases(series, turns)
    cw = coeff * weight
    cr, ci = cw.real.copy(), cw.imag.copy()
    out = np.empty(h_arr.size, dtype=complex)
    for i, hh in enumerate(h_arr):
        ang = np.remainder(hh * freq, TWO_PI)
        cm1, sn = np.cos(ang) - 1.0, np.sin(ang)
        out[i] = complex(cm1 @ cr - sn @ ci, cm1 @ ci + sn @ cr)
    return out.reshape(np.shape(h)) if np.ndim(h) else out[0]


def increments_at_rational(series: RiemannSeries, rt: RationalTime, h, tail_correction: bool = True) -> np.ndarray:
    """R(2 pi p/q + h) - R(2 pi p/q) with the rational phases in integer arithmetic.

    Past |j| ~ 1/sqrt(h) the e^{i h j^2} terms of the dropped tail average out
    but the constant -1/j^2 terms do not; for x0 = 0 their mean
    -2 G(p, 0, q)/q sum_{j > N} 1/j^2 is added back when h N^2 > 100.
    """
    if not series.plain:
        raise ValueError("needs omega0 = 0")
    h_arr = np.atleast_1d(np.asarray(h, dtype=float))
    j = np.arange(1, series.N + 1, dtype=np.int64)
    base = np.exp(2j * math.pi * ((rt.p * (j * j % rt.q)) % rt.q) / rt.q)
    jf = j.astype(float)
    cw = base * 2.0 * np.cos(jf * series.x0) / (jf * jf)
    freq = jf * jf
    out = np.empty(h_arr.size, dtype=complex)
    step = max(1, 2_000_000 // freq.size)
    for lo in range(0, h_arr.size, step):
        hh = h_arr[lo:lo + step]
        out[lo:lo + step] = (np.exp(1j * np.remainder(np.outer(hh, freq), TWO_PI)) - 1.0) @ cw
    if tail_correction and series.x0 == 0:
        mean_phase = gauss_sum(rt.p, 0, rt.q) / rt.q
        tail = -2.0 * mean_phase * float(special.polygamma(1, series.N + 1))
        out = out + np.where(h_arr * series.N ** 2 > 100, tail, 0.0)
    return out.reshape(np.shape(h)) if np.ndim(h) else out[0]


# --- the kernel F -------------------------------------------------------------------

@dataclass(frozen=True)
class KernelValue:
    value: complex
    inner: complex
    tail: complex
    panels: int
    change: float


def _integrand(xi: np.ndarray, x: float) -> np.ndarray:
    """2 (e^{i xi^2} - 1)/xi^2 cos(x xi), with the removable singularity handled."""
    u = xi * xi
    small = u < 1e-4
    safe = np.where(small, 1.0, u)
    core = np.where(small, 1j - u / 2 - 1j * u * u / 6, (np.exp(1j * u) - 1.0) / safe)
    return 2.0 * core * np.cos(x * xi)


def _gauss_panels(func, a: float, b: float, panels: int, order: int = 24) -> complex:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    pts = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    vals = func(pts).reshape(panels, order)
    return complex(np.sum(vals @ weights * half))


def _contour_tail(cut: float, shift: float) -> complex:
    """int_cut^inf e^{i (xi^2 + shift xi)} / xi^2 dxi along xi = cut + i r."""
    rate = 2 * cut + shift
    if rate <= 0:
        raise ValueError("contour tail needs 2 cut + shift > 0")
    r_max = 60.0 / rate

    def f(r):
        z = cut + 1j * r
        return 1j * np.exp(1j * (z * z + shift * z)) / (z * z)

    return _gauss_panels(f, 0.0, r_max, 64)


def F_asymptotic(x: float, terms: int = 12) -> complex:
    """Stationary-phase series of F for large |x|.

    F(x) = e^{-i x^2/4} 2 sqrt(pi) e^{i pi/4} x sum_{n>=1} c_n (2/x)^{2n+1},
    c_0 = 1/(2i), c_n = -(2n - 1)/(2i) c_{n-1}; the leading term is
    4 sqrt(pi) e^{i pi/4} e^{-i x^2/4} / x^2.
    """
    x = abs(float(x))
    if x < 10:
        raise ValueError("asymptotic series used only for |x| >= 10")
    c = 1 / 2j
    total = 0j
    for n in range(1, terms + 1):
        c = -(2 * n - 1) / 2j * c
        term = c * (2.0 / x) ** (2 * n + 1)
        total += term
        if abs(term) < 1e-18 * abs(total):
            break
    return complex(np.exp(-1j * x * x / 4) * 2 * math.sqrt(math.pi) * np.exp(1j * math.pi / 4) * x * total)


def F_kernel(x: float, cut: float = XI_CUT, tol: float = 1e-12) -> KernelValue:
    """F(x) = int (e^{i xi^2} - 1)/xi^2 e^{i x xi} dxi.

    Composite Gauss-Legendre on [0, Xi] (Xi = max(cut, |x|)), doubling the
    panel count until successive values agree to ``tol``, plus two tails:
    the oscillatory e^{i xi^2} part along the steepest-descent direction
    xi = Xi + i r, and the -1/xi^2 part in closed form through Si.
    Beyond |x| = 2 cut the stationary-phase series takes over.
    """
    x = abs(float(x))
    if x >= 2 * cut:
        val = F_asymptotic(x)
        return KernelValue(val, 0j, val, 0, 0.0)
    Xi = max(cut, x)
    panels = max(64, int(Xi * (2 * Xi + x) / 4))
    prev = _gauss_panels(lambda s: _integrand(s, x), 0.0, Xi, panels)
    change = math.inf
    for _ in range(8):
        panels *= 2
        cur = _gauss_panels(lambda s: _integrand(s, x), 0.0, Xi, panels)
        change = abs(cur - prev)
        prev = cur
        if change < tol:
            break
    else:
        raise RuntimeError(f"F_kernel quadrature did not converge at x={x} (last change {change:.3e})")
    osc = _contour_tail(Xi, x) + _contour_tail(Xi, -x)
    if x == 0:
        plain = -2.0 / Xi
    else:
        si, _ = special.sici(x * Xi)
        plain = -2.0 * (math.cos(x * Xi) / Xi - x * (math.pi / 2 - si))
    tail = osc + plain
    return KernelValue(prev + tail, prev, tail, panels, change)


def F_value(x: float) -> complex:
    return F_kernel(x).value


# --- expansion near rationals ------------------------------------------------------

@dataclass(frozen=True)
class NearRationalExpansion:
    p: int
    q: int
    h: float
    leading: complex
    full: complex
    actual: complex
    discrepancy: float
    in_window: bool
    m_nearest: int


def near_rational_expansion(series: RiemannSeries, rt: RationalTime, h: float, m_range: int = 40) -> NearRationalExpansion:
    """Compare R(2 pi p/q + h) - R(2 pi p/q) with its expansion in F.

    Poisson summation over residues mod q gives the identity

        -i h + sqrt(h)/q sum_m G(p, m, q) F((x0 - 2 pi m / q) / sqrt(h)).

    ``leading`` keeps the m nearest to x0 q / (2 pi); ``full`` sums |m - m*| <=
    m_range. The window h <= 1/q^2 is where the remaining terms are smaller.
    """
    if not series.plain:
        raise ValueError("needs omega0 = 0")
    if not h > 0:
        raise ValueError("h must be positive")
    p, q = rt.p, rt.q
    sh = math.sqrt(h)
    m_star = int(round(series.x0 * q / TWO_PI))

    def term(m: int) -> complex:
        return gauss_sum(p, m, q) * F_value((series.x0 - TWO_PI * m / q) / sh)

    leading = -1j * h + sh / q * term(m_star)
    full = leading + sh / q * sum(term(m) for m in range(m_star - m_range, m_star + m_range + 1) if m != m_star)
    actual = complex(increments_at_rational(series, rt, h))
    return NearRationalExpansion(p, q, h, leading, full, actual, abs(actual - leading), h <= 1.0 / q ** 2, m_star)


# --- flatness and dyadic blocks --------------------------------------------------

@dataclass(frozen=True)
class FlatnessResult:
    N: int
    flatness: float
    l2_parseval: float
    l2_quadrature: float
    refinement_change: float
    grid: int
    J: int


def _periodic_samples(freqs: np.ndarray, coeffs: np.ndarray, grid: int) -> np.ndarray:
    spec = np.zeros(grid, dtype=complex)
    np.add.at(spec, freqs % grid, coeffs)
    return np.fft.ifft(spec) * grid


def flatness(series: RiemannSeries, N: int, J: Optional[int] = None, grid: Optional[int] = None) -> FlatnessResult:
    """||P_{>=N} R||_4^4 / ||P_{>=N} R||_2^4 over one period (normalized measure).

    The high-pass keeps j with j^2 >= N up to |j| <= J. The L^4 norm is the
    trapezoid rule on ``grid`` points, which is exact once grid > 2 J^2; the
    value on a doubled grid is reported as ``refinement_change``.
    """
    if not series.plain:
        raise ValueError("flatness needs omega0 = 0 (integer frequencies)")
    if N < 2:
        raise ValueError("N must be at least 2")
    J = J or max(256, 64 * math.ceil(math.sqrt(N)))
    j = np.arange(math.ceil(math.sqrt(N)), J + 1, dtype=np.int64)
    j = j[j * j >= N]
    if j.size == 0:
        raise ValueError("no frequencies survive the high-pass")
    coeff = 2.0 * np.cos(j * series.x0) / (j.astype(float) ** 2) + 0j
    freqs = j * j
    g = grid or 1 << int(math.ceil(math.log2(2 * J * J + 1)))

    def moments(n: int) -> Tuple[float, float]:
        f = _periodic_samples(freqs, coeff, n)
        a2 = np.abs(f) ** 2
        return float(np.mean(a2)), float(np.mean(a2 * a2))

    l2q, l4 = moments(g)
    _, l4_fine = moments(2 * g)
    l2p = float(np.sum(np.abs(coeff) ** 2))
    change = abs(l4_fine - l4) / l4
    if change > 1e-3:
        raise RuntimeError(f"L4 quadrature not converged (relative change {change:.3e})")
    return FlatnessResult(N, l4 / l2p ** 2, l2p, l2q, change, g, J)


@dataclass(frozen=True)
class BlockNorm:
    M: int
    p: float
    norm: float
    parseval: float
    refinement_change: float


def dyadic_block_lp(series: RiemannSeries, M: int, p: float, grid: Optional[int] = None) -> BlockNorm:
    """L^p norm over one period of the block 2^M <= |j| < 2^{M+1} of R'.

    Each term of R' is i e^{i t j^2 + i j x0}; the norm uses the normalized
    measure dt / (2 pi) and the trapezoid rule, checked against a doubled grid.
    """
    if not series.plain:
        raise ValueError("blocks need omega0 = 0")
    if not 1 <= p <= 8:
        raise ValueError("p must lie in [1, 8]")
    j = np.arange(2 ** M, 2 ** (M + 1), dtype=np.int64)
    if j.size == 0:
        raise ValueError("empty block")
    coeff = 1j * 2.0 * np.cos(j * series.x0) + 0j
    freqs = j * j
    top = int(freqs.max())
    g = grid or 1 << int(math.ceil(math.log2(4 * top + 1)))

    def norm(n: int) -> float:
        f = _periodic_samples(freqs, coeff, n)
        return float(np.mean(np.abs(f) ** p) ** (1.0 / p))

    val = norm(g)
    fine = norm(2 * g)
    change = abs(fine - val) / max(val, 1e-300)
    if change > 1e-3:
        raise RuntimeError(f"block L^p quadrature not converged (relative change {change:.3e})")
    return BlockNorm(M, p, val, float(math.sqrt(np.sum(np.abs(coeff) ** 2))), change)


def structure_exponent(series: RiemannSeries, p: float, blocks: Sequence[int] = range(4, 10)) -> Tuple[float, float]:
    """eta(p) from the slope beta of log2 ||block_M R'||_p against M.

    A block at |j| ~ 2^M has time frequency ~ 4^M; ||block||_p ~ 4^{M (1 - eta/p)}
    gives eta = p (1 - beta / 2). Returns (eta, beta).
    """
    Ms = np.array(list(blocks), dtype=float)
    logs = np.array([math.log2(dyadic_block_lp(series, int(M), p).norm) for M in Ms])
    beta = float(np.polyfit(Ms, logs, 1)[0])
    return p * (1 - beta / 2), beta


# --- local Hoelder exponents -----------------------------------------------------

@dataclass
class HolderEstimate:
    t: float
    delta_min: float
    delta_max: float
    alpha_hat: float
    r2: float
    mu_hat: float
    good_fit: bool
    deltas: np.ndarray = field(repr=False)
    oscillations: np.ndarray = field(repr=False)
    expansion: Optional[ContinuedFractionExpansion] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "t": self.t, "delta_min": self.delta_min, "delta_max": self.delta_max,
            "alpha_hat": self.alpha_hat, "r2": self.r2, "mu_hat": self.mu_hat, "good_fit": self.good_fit,
        }


def oscillation(series: RiemannSeries, turns: float, deltas: Sequence[float], samples: int = 64, seed: int = 0) -> np.ndarray:
    """max over |h| <= delta of |R(t + h) - R(t)|, t = 2 pi turns.

    The max runs over ``samples`` seeded uniform draws plus the endpoints.
    """
    rng = np.random.default_rng(seed)
    base = _base_phases(series, turns)
    out = []
    for d in deltas:
        h = np.concatenate([[-d, d], rng.uniform(-d, d, samples)])
        out.append(float(np.max(np.abs(increments(series, turns, h, base)))))
    return np.array(out)


def _window_convergents(cf: ContinuedFractionExpansion, lo: float, hi: float) -> List[Tuple[float, int, float]]:
    """(2 pi err, q, mu_n) for convergents inside [lo, hi] with q > 1 and q != 2 mod 4.

    At q = 2 mod 4 the Gauss sum G(p, 0, q) vanishes, so such convergents do not
    lower the regularity of R_0.
    """
    return [(TWO_PI * e, q, m) for m, e, (_, q) in zip(cf.mu, cf.errors, cf.convergents)
            if q > 1 and q % 4 != 2 and math.isfinite(m) and e > 0 and lo <= TWO_PI * e <= hi]


def mu_in_window(cf: ContinuedFractionExpansion, lo: float, hi: float) -> float:
    """Mean mu_n over the convergents of _window_convergents."""
    sel = [m for _, _, m in _window_convergents(cf, lo, hi)]
    if not sel:
        return cf.irrationality_estimate()
    return float(np.mean(sel))


@dataclass(frozen=True)
class ConstructedTime:
    """A number in (0, 1) built from its continued fraction with a target exponent mu."""

    turns: float
    mu: float
    quotients: Tuple[int, ...]
    denominators: Tuple[int, ...]

    @property
    def t(self) -> float:
        """The matching time of R, 2 pi turns."""
        return TWO_PI * self.turns


def constructed_time(mu: float, q1: int = 3, q_max: int = 10 ** 7) -> ConstructedTime:
    """Odd convergent denominators with q_{n+1} ~ q_n^{mu - 1}, so the irrationality exponent is mu.

    Quotients after the first are even so that every denominator stays odd.
    The float's own expansion continues past the designed quotients, so only
    ``denominators`` are meaningful.
    """
    if mu < 2:
        raise ValueError("mu must be at least 2")
    if q1 < 3 or q1 % 2 == 0:
        raise ValueError("q1 must be odd and at least 3")
    quotients = [q1]
    dens = [1, q1]
    while True:
        step = max(2, 2 * int(round(dens[-1] ** (mu - 2) / 2)))
        nxt = step * dens[-1] + dens[-2]
        if nxt > q_max:
            break
        quotients.append(step)
        dens.append(nxt)
    value = Fraction(0)
    for quot in reversed(quotients):
        value = 1 / (quot + value)
    return ConstructedTime(float(value), float(mu), tuple(quotients), tuple(dens[1:]))


def holder_estimate(
    series: RiemannSeries,
    t: float,
    scales: Sequence[float],
    samples: int = 64,
    seed: int = 0,
    depth: int = 40,
) -> HolderEstimate:
    """Slope of log osc(delta) against log delta at time t of R.

    The base phases use the exact binary value of t / (2 pi), which is also the
    number whose continued fraction supplies mu_hat.
    """
    deltas = np.sort(np.asarray(scales, dtype=float))
    if deltas[0] <= 0 or deltas[-1] / deltas[0] < 8:
        raise ValueError("scales must be positive and span at least three octaves")
    turns = float(np.remainder(t / TWO_PI, 1.0))
    osc = oscillation(series, turns, deltas, samples, seed)
    X, Y = np.log(deltas), np.log(osc)
    slope, icpt = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + icpt)
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0
    cf = continued_fraction(turns, depth)
    mu = mu_in_window(cf, deltas[0], deltas[-1])
    return HolderEstimate(float(t), float(deltas[0]), float(deltas[-1]), float(slope), r2, mu, r2 >= 0.9, deltas, osc, cf)


def holder_at_convergents(
    series: RiemannSeries,
    t: float,
    lo: float = 1e-8,
    hi: float = 3e-2,
    samples: int = 64,
    seed: int = 0,
    depth: int = 40,
    denominators: Optional[Sequence[int]] = None,
) -> HolderEstimate:
    """Hoelder slope sampled at the convergent distances delta_n = 2 pi |t/2pi - p_n/q_n|.

    Between two convergents log osc is piecewise linear with slopes 1/2 and 1,
    so a dense-scale fit over a partial cycle is biased; the convergent scales
    lie on the lower envelope that defines the exponent. mu_hat is the slope of
    -log err_n against log q_n over the same convergents. ``denominators``
    restricts the convergents, e.g. to the designed ones of a ConstructedTime.
    """
    turns = float(np.remainder(t / TWO_PI, 1.0))
    cf = continued_fraction(turns, depth)
    win = _window_convergents(cf, lo, hi)
    if denominators is not None:
        keep = set(int(q) for q in denominators)
        win = [w for w in win if w[1] in keep]
    if len(win) < 2:
        raise ValueError("fewer than two usable convergents inside the scale window")
    deltas = np.array([d for d, _, _ in win])
    qs = np.array([q for _, q, _ in win], dtype=float)
    order = np.argsort(deltas)
    deltas, qs = deltas[order], qs[order]
    osc = oscillation(series, turns, deltas, samples, seed)
    X, Y = np.log(deltas), np.log(osc)
    slope, icpt = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + icpt)
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    mu = float(np.polyfit(np.log(qs), -np.log(deltas / TWO_PI), 1)[0])
    return HolderEstimate(float(t), float(deltas[0]), float(deltas[-1]), float(slope), r2, mu, r2 >= 0.9, deltas, osc, cf)


def report_json(obj) -> str:
    """JSON text for the analysis dataclasses above (arrays dropped)."""
    if hasattr(obj, "to_dict"):
        payload = obj.to_dict()
    else:
        payload = {k: v for k, v in asdict(obj).items() if not isinstance(v, np.ndarray)}
    return json.dumps(payload, default=lambda v: [v.real, v.imag] if isinstance(v, complex) else str(v), indent=2)
