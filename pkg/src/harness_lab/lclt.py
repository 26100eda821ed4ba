"""Gaussian-approximation quality of convolution powers.

Exact t-step transition rows are compared against the matching-moment
Gaussian density: sup error (decays like 1/t), gradient error (decays
like t^{-3/2}), the normalized occupation ("Green") sum against its
integral limit, and two supporting inequalities used by those bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import BudgetExceeded, HarnessLabError, MeanNotZero, SpanNotOne
from .lattice import LatticeDistribution, WeightVector, char_function, convolve, transition_power

_T_CAP = 1 << 13
_QUAD_OPTS = dict(epsabs=1e-10, epsrel=1e-10, limit=200)


@dataclass(frozen=True)
class ErrorProfile:
    """Sup and gradient approximation errors along a time grid."""

    t_grid: tuple[int, ...]
    sup_errors: tuple[float, ...]
    scaled: tuple[float, ...]  # t * sup_err(t)
    fitted_slope: float
    grad_errors: tuple[float, ...]
    grad_scaled: tuple[float, ...]  # t^{3/2} * grad_err(t)
    grad_slope: float

    def __post_init__(self):
        if list(self.t_grid) != sorted(set(self.t_grid)):
            raise HarnessLabError("time grid must be strictly increasing")
        if min(self.sup_errors) < 0 or min(self.grad_errors) < 0:
            raise HarnessLabError("negative error")


def gaussian_transition(w: WeightVector, t: int, x: int) -> float:
    """Density of a Gaussian with the walk's t-step mean and variance."""
    if t < 1:
        raise HarnessLabError("t must be at least 1")
    v = w.variance * t
    d = x - t * w.mean
    return math.exp(-0.5 * d * d / v) / math.sqrt(2.0 * math.pi * v)


def _profile_row(w: WeightVector, t: int) -> tuple[float, float]:
    """(sup error, sup gradient error) of the Gaussian approximation at
    time t, over the exact support widened by a 3 sigma sqrt(t) margin
    (outside it both terms are below the Gaussian tail at 3 sigma)."""
    pt = transition_power(w, t)
    margin = math.ceil(3.0 * math.sqrt(w.variance * t))
    lo, hi = pt.offset - margin, pt.last + margin
    xs = np.arange(lo, hi + 1)
    exact = np.zeros(len(xs))
    exact[pt.offset - lo : pt.last + 1 - lo] = pt.masses
    v = w.variance * t
    gauss = np.exp(-0.5 * (xs - t * w.mean) ** 2 / v) / math.sqrt(2.0 * math.pi * v)
    sup = float(np.max(np.abs(exact - gauss)))
    grad = float(np.max(np.abs(np.diff(exact) - np.diff(gauss))))
    return sup, grad


def lclt_error_profile(w: WeightVector, t_grid) -> ErrorProfile:
    """Error profile of the Gaussian approximation along t_grid, with
    log-log fitted decay slopes for the sup and gradient errors (nan
    when the grid has a single entry; one point fits no slope)."""
    grid = tuple(int(t) for t in t_grid)
    if not grid:
        raise HarnessLabError("empty time grid")
    if max(grid) > _T_CAP:
        raise BudgetExceeded(f"t beyond {_T_CAP} exceeds the convolution budget")
    sups, grads = [], []
    for t in grid:
        s, g = _profile_row(w, t)
        sups.append(s)
        grads.append(g)
    if len(grid) == 1:
        slope = grad_slope = float("nan")
    else:
        logs = np.log(grid)
        slope = float(np.polyfit(logs, np.log(sups), 1)[0])
        grad_slope = float(np.polyfit(logs, np.log(grads), 1)[0])
    return ErrorProfile(
        t_grid=grid,
        sup_errors=tuple(sups),
        scaled=tuple(t * s for t, s in zip(grid, sups)),
        fitted_slope=slope,
        grad_errors=tuple(grads),
        grad_scaled=tuple(t ** 1.5 * g for t, g in zip(grid, grads)),
        grad_slope=grad_slope,
    )


def profile_to_csv(profile: ErrorProfile, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t", "sup_err", "t_sup_err", "grad_err", "t15_grad_err"])
        for i, t in enumerate(profile.t_grid):
            out.writerow(
                [
                    t,
                    repr(profile.sup_errors[i]),
                    repr(profile.scaled[i]),
                    repr(profile.grad_errors[i]),
                    repr(profile.grad_scaled[i]),
                ]
            )


def green_limit(variance: float, t: float, a: float) -> float:
    """(1/sigma^2) integral_0^{sigma^2 t} (2 pi v)^{-1/2} e^{-a^2/2v} dv,
    evaluated along the standard-deviation axis where it is smooth."""
    if variance <= 0 or t < 0:
        raise HarnessLabError("variance must be positive and t nonnegative")
    u_hi = math.sqrt(variance * t)
    if u_hi == 0.0:
        return 0.0

    def integrand(u: float) -> float:
        if u == 0.0:
            return 1.0 if a == 0.0 else 0.0
        return math.exp(-0.5 * (a / u) ** 2)

    val, err = quad(integrand, 0.0, u_hi, **_QUAD_OPTS)
    if err > 1e-9:
        raise HarnessLabError(f"green limit quadrature stalled at {err:.2e}")
    return math.sqrt(2.0 / math.pi) * val / variance


def green_sum_convergence(
    d: LatticeDistribution, t: float, a: float, n_grid
) -> list[tuple[int, float, float]]:
    """Rows (n, n^{-1/2} sum_{k < floor(nt)} P(S_k = floor(a sqrt n)), limit).

    The step law must have mean 0 (within 1e-12) and span 1; the limit
    column repeats the closed integral for convenience.
    """
    if abs(d.mean()) > 1e-12:
        raise MeanNotZero(f"step law mean {d.mean()!r}")
    live = d.support[d.masses > 1e-300]
    if len(live) < 2 or math.gcd(*(int(x - live[0]) for x in live[1:])) != 1:
        raise SpanNotOne("step-law support differences must have gcd 1")
    limit = green_limit(d.variance(), t, a)
    rows = []
    for n in sorted(int(n) for n in n_grid):
        if n < 1:
            raise HarnessLabError("n must be positive")
        T = math.floor(n * t)
        x = math.floor(a * math.sqrt(n))
        total = 0.0
        walk = LatticeDistribution(0, np.array([1.0]))
        for _ in range(T):
            total += walk.pmf(x)
            walk = convolve(walk, d)
        rows.append((n, total / math.sqrt(n), limit))
    return rows


def char_bound_coefficient(d: LatticeDistribution, grid_size: int = 10_000) -> float:
    """Largest b with |phi(theta)| <= 1 - b theta^2 on a uniform grid of
    [-pi, pi]; positive for every mean-adjusted span-1 law. The returned
    b satisfies the inequality pointwise on the grid by construction,
    which is re-verified before returning."""
    thetas = np.linspace(-math.pi, math.pi, grid_size)
    thetas = thetas[thetas != 0.0]
    mods = np.array([abs(char_function(d, th)) for th in thetas])
    b = float(np.min((1.0 - mods) / thetas**2))
    if b <= 0:
        raise HarnessLabError("no positive quadratic bound on this grid")
    if np.any(mods > 1.0 - b * thetas**2 + 1e-15):
        raise HarnessLabError("quadratic bound failed its own re-check")
    return b


def erfc_sandwich(r: float) -> tuple[float, float, float]:
    """(lower, e^{r^2} int_r^inf e^{-s^2} ds, upper) with the middle by
    quadrature of the combined exponent (never overflows); the truncated
    tail beyond r + 12 is below e^{-144} relative."""
    if r < 0:
        raise HarnessLabError("r must be nonnegative")
    lower = 1.0 / (r + math.sqrt(r * r + 2.0))
    upper = 1.0 / (r + math.sqrt(r * r + 4.0 / math.pi))
    val, err = quad(lambda s: math.exp(r * r - s * s), r, r + 12.0, **_QUAD_OPTS)
    if err > 1e-9:
        raise HarnessLabError(f"erfc quadrature stalled at {err:.2e}")
    return lower, val, upper
