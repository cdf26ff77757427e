"""Shared numerics: finitely supported sequences, Gauss sums, rational times
and continued fractions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

GAUSS_SUM_MAX_Q = 10_000


@dataclass(frozen=True)
class ComplexSeq:
    """Complex sequence alpha_k supported on the index range [-K, K].

    ``values[i]`` holds alpha_{i - K}; the array is copied and made read-only.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=complex).ravel()
        if arr.size % 2 != 1:
            raise ValueError("a symmetric support [-K, K] needs an odd number of values")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def K(self) -> int:
        return (self.values.size - 1) // 2

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def __getitem__(self, k: int) -> complex:
        if abs(k) > self.K:
            return 0j
        return complex(self.values[k + self.K])

    def __len__(self) -> int:
        return self.values.size

    @classmethod
    def zeros(cls, K: int) -> "ComplexSeq":
        return cls(np.zeros(2 * K + 1, dtype=complex))

    @classmethod
    def from_dict(cls, entries: Mapping[int, complex], K: Optional[int] = None) -> "ComplexSeq":
        """Build from {k: alpha_k}; K defaults to the largest |k| present."""
        if K is None:
            K = max((abs(int(k)) for k in entries), default=0)
        vals = np.zeros(2 * K + 1, dtype=complex)
        for k, v in entries.items():
            if abs(k) > K:
                raise ValueError(f"index {k} outside [-{K}, {K}]")
            vals[int(k) + K] = v
        return cls(vals)

    def padded(self, K: int) -> "ComplexSeq":
        """Same sequence viewed on the wider support [-K, K]."""
        if K < self.K:
            raise ValueError("padding cannot shrink the support")
        vals = np.zeros(2 * K + 1, dtype=complex)
        vals[K - self.K: K + self.K + 1] = self.values
        return ComplexSeq(vals)

    def to_dict(self) -> Dict[int, complex]:
        return {int(k): complex(v) for k, v in zip(self.indices, self.values) if v != 0}

    def mass(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))


def japanese_bracket(k) -> np.ndarray:
    return np.sqrt(1.0 + np.asarray(k, dtype=float) ** 2)


def weighted_norm(seq: ComplexSeq, s: float) -> float:
    """(sum_k <k>^{2s} |alpha_k|^2)^{1/2} with <k> = (1 + k^2)^{1/2}."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    w = (1.0 + seq.indices.astype(float) ** 2) ** s
    return float(math.sqrt(np.sum(w * np.abs(seq.values) ** 2)))


def gauss_sum(p: int, m: int, q: int) -> complex:
    """sum_{l=0}^{q-1} exp(2 pi i (p l^2 + m l) / q), summed directly.

    The exponent is reduced mod q in integer arithmetic before the float
    conversion, so every term is exact to rounding.
    """
    if q < 1:
        raise ValueError("q must be positive")
    if q > GAUSS_SUM_MAX_Q:
        raise ValueError(f"q capped at {GAUSS_SUM_MAX_Q} for direct summation")
    l = np.arange(q, dtype=np.int64)
    phase = (p * l * l + m * l) % q
    return complex(np.sum(np.exp(2j * np.pi * phase / q)))


def gauss_sum_table(q: int, p_values: Iterable[int]) -> np.ndarray:
    """G(p, m, q) for every p in ``p_values`` and m = 0..q-1, shape (len(p_values), q).

    Same integer reduction as gauss_sum, with the l-sum done as one matrix product.
    """
    if q < 1:
        raise ValueError("q must be positive")
    if q > GAUSS_SUM_MAX_Q:
        raise ValueError(f"q capped at {GAUSS_SUM_MAX_Q} for direct summation")
    l = np.arange(q, dtype=np.int64)
    p = np.asarray(list(p_values), dtype=np.int64)
    quad = np.exp(2j * np.pi * ((p[:, None] * l * l) % q) / q)
    lin = np.exp(2j * np.pi * ((l[:, None] * l[None, :]) % q) / q)
    return quad @ lin


@dataclass(frozen=True)
class RationalTime:
    """Rational time t = p / (2 pi q) with p >= 0, q >= 1 and gcd(p, q) = 1."""

    p: int
    q: int

    def __post_init__(self) -> None:
        if self.q < 1 or self.p < 0:
            raise ValueError("need p >= 0 and q >= 1")
        if math.gcd(self.p, self.q) != 1:
            raise ValueError(f"p={self.p} and q={self.q} are not coprime")

    @property
    def t(self) -> float:
        return self.p / (2.0 * math.pi * self.q)


@dataclass(frozen=True)
class ContinuedFractionExpansion:
    """Partial quotients, convergents p_n/q_n and exponents mu_n of a real t.

    ``mu[n]`` solves |t - p_n/q_n| = q_n^{-mu_n}; it is nan for q_n = 1 and inf
    when the convergent is exact. ``terminated`` is True when the expansion of
    the rational surrogate ran out before the requested depth.
    """

    value: float
    quotients: Tuple[int, ...]
    convergents: Tuple[Tuple[int, int], ...]
    errors: Tuple[float, ...]
    mu: Tuple[float, ...]
    terminated: bool
    metadata: Dict[str, str] = field(default_factory=dict)

    def irrationality_estimate(self, tail: int = 4) -> float:
        """Mean of the last finite mu_n with q_n > 1, a proxy for mu(t)."""
        finite = [m for m, (_, q) in zip(self.mu, self.convergents) if q > 1 and math.isfinite(m)]
        if not finite:
            return float("nan")
        return float(np.mean(finite[-tail:]))


def continued_fraction(t: float, depth: int) -> ContinuedFractionExpansion:
    """Continued-fraction expansion of t with exact integer recurrences.

    The float t is replaced by the exact binary rational it stores
    (``Fraction(t)``); that surrogate is recorded in the metadata.
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    exact = Fraction(t)
    x = exact
    quotients: List[int] = []
    convergents: List[Tuple[int, int]] = []
    errors: List[float] = []
    mus: List[float] = []
    p_prev, q_prev = 1, 0
    p_prev2, q_prev2 = 0, 1
    terminated = False
    for _ in range(depth):
        a = math.floor(x)
        quotients.append(a)
        p, q = a * p_prev + p_prev2, a * q_prev + q_prev2
        convergents.append((p, q))
        err = abs(exact - Fraction(p, q))
        errors.append(float(err))
        if err == 0:
            mus.append(float("inf"))
        elif q == 1:
            mus.append(float("nan"))
        else:
            mus.append(-math.log(float(err)) / math.log(q))
        p_prev2, q_prev2, p_prev, q_prev = p_prev, q_prev, p, q
        frac = x - a
        if frac == 0:
            terminated = True
            break
        x = 1 / frac
    meta = {
        "surrogate": f"{exact.numerator}/{exact.denominator}",
        "note": "input float replaced by the exact binary rational it stores",
    }
    return ContinuedFractionExpansion(
        value=float(t),
        quotients=tuple(quotients),
        convergents=tuple(convergents),
        errors=tuple(errors),
        mu=tuple(mus),
        terminated=terminated,
        metadata=meta,
    )


def from_quotients(quotients: Iterable[int]) -> Fraction:
    """Exact value of the finite continued fraction [a0; a1, ..., an]."""
    qs = list(quotients)
    if not qs:
        raise ValueError("need at least one quotient")
    val = Fraction(qs[-1])
    for a in reversed(qs[:-1]):
        val = a + 1 / val
    return val
