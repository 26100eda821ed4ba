"""Closed forms for the covariance of the limiting Gaussian field.

The limit field's covariance splits into a dynamical-noise part and an
initial-randomness part, both built from one scalar function psi. Each
part also has an integral representation; those are implemented
separately, by quadrature, as cross-check oracles rather than fallbacks,
and the closed forms are what everything downstream consumes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr

from .errors import HarnessLabError, SpecMismatch

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-12, limit=300)


@dataclass(frozen=True)
class SpaceTimePoint:
    """Macroscopic (time, space) coordinates of a field probe."""

    t: float
    r: float

    def __post_init__(self):
        if self.t < 0:
            raise HarnessLabError(f"negative time {self.t}")


@dataclass(frozen=True)
class LimitSpec:
    """Scalar inputs of the limit covariance.

    walk_variance: variance of the averaging weights (must be positive).
    noise_variance: variance of the dynamical noise.
    increment_cov_sum: summed covariances of the initial increments.
    mean_increment: mean of the initial increments.
    """

    walk_variance: float
    noise_variance: float
    increment_cov_sum: float
    mean_increment: float = 0.0

    def __post_init__(self):
        if self.walk_variance <= 0:
            raise HarnessLabError("walk variance must be positive")
        if self.noise_variance < 0 or self.increment_cov_sum < 0:
            raise HarnessLabError("variances must be nonnegative")


def psi(nu_sq: float, x: float) -> float:
    """nu^2 phi_{nu^2}(x) - x (1 - Phi_{nu^2}(x)).

    phi and Phi are the density and cdf of a centered Gaussian with
    variance nu^2. The degenerate value at nu^2 = 0 is the continuity
    limit max(-x, 0). Equals sqrt(nu^2) * (phi(z) - z (1 - Phi(z))) with
    z the standardized argument, which is the form evaluated here.
    """
    if nu_sq < 0:
        raise HarnessLabError("negative variance in psi")
    if nu_sq == 0.0:
        return max(-x, 0.0)
    s = math.sqrt(nu_sq)
    z = x / s
    return s * (math.exp(-0.5 * z * z) / _SQRT_2PI - z * float(ndtr(-z)))


def gamma1(p1: SpaceTimePoint, p2: SpaceTimePoint, walk_variance: float) -> float:
    """Dynamical-noise covariance block, closed form."""
    d = p2.r - p1.r
    return psi(walk_variance * (p1.t + p2.t), d) - psi(
        walk_variance * abs(p2.t - p1.t), d
    )


def gamma1_integral(p1: SpaceTimePoint, p2: SpaceTimePoint, walk_variance: float) -> float:
    """Quadrature oracle: half-integral of the heat kernel at the space
    gap over variances between |t-s| and t+s, taken along the standard
    deviation axis where the integrand is smooth."""
    d = p2.r - p1.r
    u_lo = math.sqrt(walk_variance * abs(p2.t - p1.t))
    u_hi = math.sqrt(walk_variance * (p1.t + p2.t))
    if u_hi <= u_lo:
        return 0.0

    def integrand(u: float) -> float:
        if u == 0.0:
            return 1.0 if d == 0.0 else 0.0
        return math.exp(-0.5 * (d / u) ** 2)

    val, err = quad(integrand, u_lo, u_hi, **_QUAD_OPTS)
    if err > 1e-10:
        raise HarnessLabError(f"gamma1 quadrature stalled at error {err:.2e}")
    return val / _SQRT_2PI


def gamma2(p1: SpaceTimePoint, p2: SpaceTimePoint, walk_variance: float) -> float:
    """Initial-randomness covariance block, closed form."""
    s, q = p1.t, p1.r
    t, r = p2.t, p2.r
    return (
        psi(walk_variance * s, -q)
        + psi(walk_variance * t, r)
        - psi(walk_variance * (t + s), r - q)
    )


def _brownian_above(v: float, y: float) -> float:
    # P(B_v > y) with B_v centered Gaussian of variance v (indicator at v=0)
    if v == 0.0:
        return 1.0 if y < 0.0 else 0.0
    return float(ndtr(-y / math.sqrt(v)))


def gamma2_integral(p1: SpaceTimePoint, p2: SpaceTimePoint, walk_variance: float) -> float:
    """Quadrature oracle: two-sided integral of products of Brownian
    tail probabilities, truncated where the Gaussian tail certifies the
    remainder is negligible."""
    vs = walk_variance * p1.t
    vt = walk_variance * p2.t
    q, r = p1.r, p2.r
    reach = 9.5 * math.sqrt(max(vs, vt))

    def left(x: float) -> float:
        return _brownian_above(vs, q - x) * _brownian_above(vt, r - x)

    def right(x: float) -> float:
        return (1.0 - _brownian_above(vs, q - x)) * (1.0 - _brownian_above(vt, r - x))

    lo = min(q, r, 0.0) - reach
    hi = max(q, r, 0.0) + reach
    # indicator kinks when a time is zero
    kinks = [p for p, v in ((q, vs), (r, vt)) if v == 0.0]
    left_pts = sorted(p for p in kinks if lo < p < 0.0) or None
    right_pts = sorted(p for p in kinks if 0.0 < p < hi) or None
    total = 0.0
    if lo < 0.0:
        val, err = quad(left, lo, 0.0, points=left_pts, **_QUAD_OPTS)
        if err > 1e-10:
            raise HarnessLabError(f"gamma2 left quadrature error {err:.2e}")
        total += val
    if hi > 0.0:
        val, err = quad(right, 0.0, hi, points=right_pts, **_QUAD_OPTS)
        if err > 1e-10:
            raise HarnessLabError(f"gamma2 right quadrature error {err:.2e}")
        total += val
    return total


def z_covariance(spec: LimitSpec, p1: SpaceTimePoint, p2: SpaceTimePoint) -> float:
    """Covariance of the limit field between two space-time probes."""
    g1 = gamma1(p1, p2, spec.walk_variance)
    g2 = gamma2(p1, p2, spec.walk_variance)
    return (spec.noise_variance / spec.walk_variance) * g1 + spec.increment_cov_sum * g2


def covariance_matrix(spec: LimitSpec, points) -> np.ndarray:
    pts = list(points)
    n = len(pts)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            out[i, j] = out[j, i] = z_covariance(spec, pts[i], pts[j])
    return out


def fbm_covariance(spec: LimitSpec, s: float, t: float) -> float:
    """Time-marginal covariance when the initial increments carry exactly
    the stationary covariance mass: a fractional Brownian motion with
    Hurst exponent 1/4, up to the stated scale factor."""
    if s < 0 or t < 0:
        raise HarnessLabError("negative time")
    stationary = spec.noise_variance / spec.walk_variance
    if abs(spec.increment_cov_sum - stationary) > 1e-12:
        raise SpecMismatch(
            f"increment covariance sum {spec.increment_cov_sum!r} does not match "
            f"the stationary value {stationary!r}"
        )
    scale = spec.noise_variance / math.sqrt(2.0 * math.pi * spec.walk_variance)
    return scale * (math.sqrt(s) + math.sqrt(t) - math.sqrt(abs(t - s)))
