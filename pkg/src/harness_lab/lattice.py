"""Validated step laws on the integer lattice and exact transition arithmetic.

A weight vector is a finite-support probability vector w on the integers.
It plays two roles at once: the averaging stencil of the surface dynamics
and the step law of the embedded random walk. This module validates raw
weight maps, computes convolution powers p^k exactly (up to float64
rounding), builds the symmetrized two-walk difference kernel q, and
evaluates characteristic functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np
from scipy.signal import fftconvolve

from .errors import (
    DegenerateSupport,
    HarnessLabError,
    MassNotOne,
    NegativeWeight,
    SpanNotOne,
    WindowTooLarge,
)

MASS_TOL = 1e-12
# direct convolution below this support width, FFT above
_DIRECT_WIDTH = 512
# entries below this are treated as exact zeros when trimming
_TRIM_EPS = 1e-300
# convolution powers must keep total mass within this of 1
_MASS_DRIFT_TOL = 1e-10
# hard cap on representable support width
_MAX_WIDTH = 1 << 26


@dataclass(frozen=True)
class WeightVector:
    """Validated finite-support probability vector on the integers.

    weights holds (offset, probability) pairs sorted by offset, all
    probabilities in (0, 1). mean, variance and span are derived at
    validation time and trusted afterwards.
    """

    weights: tuple[tuple[int, float], ...]
    mean: float
    variance: float
    span: int

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.array([k for k, _ in self.weights], dtype=np.int64)

    @cached_property
    def masses(self) -> np.ndarray:
        return np.array([p for _, p in self.weights], dtype=np.float64)

    @property
    def min_offset(self) -> int:
        return self.weights[0][0]

    @property
    def max_offset(self) -> int:
        return self.weights[-1][0]

    @property
    def reach(self) -> int:
        """One-step exactness loss at each window edge."""
        return max(abs(self.min_offset), abs(self.max_offset))

    def as_map(self) -> dict[int, float]:
        return dict(self.weights)

    def probability(self, k: int) -> float:
        return self.as_map().get(k, 0.0)


@dataclass(frozen=True)
class LatticeDistribution:
    """Finite-support pmf on the integers in trimmed dense form.

    offset is the location of the first support point; masses[i] is the
    probability of offset + i. First and last mass are strictly positive.
    total below 1 is allowed only for explicitly truncated laws.
    """

    offset: int
    masses: np.ndarray
    total: float = 1.0

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=np.float64)
        object.__setattr__(self, "masses", m)
        if m.size == 0:
            raise HarnessLabError("empty distribution")
        if m[0] <= 0.0 or m[-1] <= 0.0:
            raise HarnessLabError("distribution not trimmed")
        if abs(float(m.sum()) - self.total) > _MASS_DRIFT_TOL:
            raise MassNotOne(
                f"masses sum to {float(m.sum()):.17g}, expected {self.total}"
            )

    @property
    def last(self) -> int:
        return self.offset + len(self.masses) - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + len(self.masses))

    def pmf(self, x: int) -> float:
        i = x - self.offset
        if 0 <= i < len(self.masses):
            return float(self.masses[i])
        return 0.0

    def mean(self) -> float:
        return float(np.dot(self.support.astype(np.float64), self.masses))

    def variance(self) -> float:
        mu = self.mean()
        d = self.support.astype(np.float64) - mu
        return float(np.dot(d * d, self.masses))


def parse_weights(text: str) -> dict[int, float]:
    """Parse 'offset:prob,offset:prob,...' into a raw weight map."""
    raw: dict[int, float] = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            key, val = item.split(":")
            k = int(key.strip())
            p = float(val.strip())
        except ValueError as exc:
            raise HarnessLabError(f"cannot parse weight entry {item!r}") from exc
        if k in raw:
            raise HarnessLabError(f"duplicate offset {k} in weight map")
        raw[k] = p
    if not raw:
        raise HarnessLabError("empty weight map")
    return raw


def validate_weights(raw: Mapping[int, float]) -> WeightVector:
    """Check the step-law assumptions and derive mean, variance, span.

    Rejections name the violated assumption: NegativeWeight, MassNotOne,
    DegenerateSupport (zero variance or a unit mass), SpanNotOne.
    """
    if not raw:
        raise HarnessLabError("empty weight map")
    for k, p in raw.items():
        if p < 0.0:
            raise NegativeWeight(f"w({k}) = {p} is negative")
    total = math.fsum(raw.values())
    if abs(total - 1.0) > MASS_TOL:
        raise MassNotOne(f"weights sum to {total:.17g}")
    support = sorted(k for k, p in raw.items() if p > 0.0)
    if len(support) < 2:
        raise DegenerateSupport("support is a single point, variance is zero")
    for k in support:
        if raw[k] >= 1.0:
            raise DegenerateSupport(f"w({k}) = {raw[k]} leaves no randomness")
    anchor = support[0]
    span = 0
    for k in support[1:]:
        span = math.gcd(span, k - anchor)
    if span != 1:
        raise SpanNotOne(f"support differences generate {span}Z, not Z")
    mean = math.fsum(k * raw[k] for k in support)
    variance = math.fsum((k - mean) ** 2 * raw[k] for k in support)
    if variance <= 0.0:
        raise DegenerateSupport("step variance is zero")
    weights = tuple((k, float(raw[k])) for k in support)
    return WeightVector(weights=weights, mean=mean, variance=variance, span=span)


def as_distribution(w: WeightVector) -> LatticeDistribution:
    """Dense one-step law p(0, .) of a weight vector."""
    lo, hi = w.min_offset, w.max_offset
    masses = np.zeros(hi - lo + 1)
    masses[w.offsets - lo] = w.masses
    return LatticeDistribution(offset=lo, masses=masses)


def _trim(offset: int, masses: np.ndarray) -> tuple[int, np.ndarray]:
    nz = np.nonzero(masses > _TRIM_EPS)[0]
    if nz.size == 0:
        # keep the largest entry so the law stays representable
        i = int(np.argmax(masses))
        return offset + i, masses[i : i + 1].copy()
    return offset + int(nz[0]), masses[nz[0] : nz[-1] + 1].copy()


def convolve(a: LatticeDistribution, b: LatticeDistribution) -> LatticeDistribution:
    """Distribution of the sum of independent draws from a and b.

    Direct convolution for narrow supports, FFT for wide ones, with
    tiny-entry trimming and a total-mass drift guard.
    """
    width = len(a.masses) + len(b.masses) - 1
    if width > _MAX_WIDTH:
        raise WindowTooLarge(f"convolution support width {width} exceeds budget")
    if min(len(a.masses), len(b.masses)) < _DIRECT_WIDTH:
        masses = np.convolve(a.masses, b.masses)
    else:
        masses = fftconvolve(a.masses, b.masses)
        np.clip(masses, 0.0, None, out=masses)
    offset, masses = _trim(a.offset + b.offset, masses)
    expected = a.total * b.total
    s = float(masses.sum())
    if abs(s - expected) > _MASS_DRIFT_TOL:
        raise HarnessLabError(f"convolution mass drifted to {s:.17g}")
    return LatticeDistribution(offset=offset, masses=masses, total=expected)


def transition_power(w: WeightVector, k: int) -> LatticeDistribution:
    """k-step transition row p^k(0, .) by exact repeated convolution."""
    if k < 0:
        raise HarnessLabError(f"power {k} is negative")
    width = k * (w.max_offset - w.min_offset) + 1
    if width > _MAX_WIDTH:
        raise WindowTooLarge(f"p^{k} support width {width} exceeds budget")
    result = LatticeDistribution(offset=0, masses=np.array([1.0]))
    if k == 0:
        return result
    base = as_distribution(w)
    # binary exponentiation; fewer convolutions keeps rounding low
    while True:
        if k & 1:
            result = convolve(result, base) if len(result.masses) > 1 else base
        k >>= 1
        if k == 0:
            return result
        base = convolve(base, base)


def iter_powers(step: LatticeDistribution, k_max: int) -> Iterable[LatticeDistribution]:
    """Yield step^0, step^1, ..., step^k_max successively."""
    current = LatticeDistribution(offset=0, masses=np.array([1.0]))
    yield current
    for _ in range(k_max):
        current = convolve(current, step)
        yield current


def q_kernel(w: WeightVector) -> WeightVector:
    """Step law of the difference of two independent w-walks.

    q(x) = sum_z w(z) w(x+z). Symmetric by construction (the positive
    lags are computed once and mirrored, so symmetry is exact), mean 0,
    variance 2 * w.variance, span 1.
    """
    lo, hi = w.min_offset, w.max_offset
    dense = np.zeros(hi - lo + 1)
    dense[w.offsets - lo] = w.masses
    width = len(dense)
    # positive lags only: q(x) = <dense, dense shifted by x>
    half = np.array([np.dot(dense[: width - x], dense[x:]) for x in range(width)])
    raw: dict[int, float] = {}
    for x in range(width):
        if half[x] > 0.0:
            raw[x] = float(half[x])
            if x > 0:
                raw[-x] = float(half[x])
    return validate_weights(raw)


def char_function(d: LatticeDistribution, theta: float, centered: bool = False) -> complex:
    """Characteristic function sum_x d(x) e^{i theta x} as an exact finite sum.

    With centered=True the mean is rotated out, giving e^{-i theta mean}
    times the plain value.
    """
    x = d.support.astype(np.float64)
    value = complex(np.sum(d.masses * np.exp(1j * theta * x)))
    if centered:
        value *= complex(np.exp(-1j * theta * d.mean()))
    return value


def q_decay_supremum(w: WeightVector, k_max: int = 4096) -> tuple[float, int]:
    """Empirical sup of sqrt(k) q^k(0,0) over 1 <= k <= k_max.

    The supremum is reported, not assumed; it doubles as the constant in
    the partial-sum tail bound of the potential kernel series.
    """
    q = as_distribution(q_kernel(w))
    best, arg = 0.0, 1
    for k, power in enumerate(iter_powers(q, k_max)):
        if k == 0:
            continue
        val = math.sqrt(k) * power.pmf(0)
        if val > best:
            best, arg = val, k
    return best, arg
