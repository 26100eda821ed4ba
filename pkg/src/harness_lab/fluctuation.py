"""Monte Carlo lab for the quarter-power-scaled height fluctuations.

The scaled observable is H(t, r) = n^{-1/4} (h_T(y) - mu0 r sqrt(n)) with
T = floor(n t) and y = floor(n t b) + floor(r sqrt(n)), read along the
characteristic drift b = -mean(w). Everything here either samples that
observable (replica-parallel, deterministically seeded), decomposes it
exactly into its drift / initial-increment / dynamical-noise parts, or
compares its empirical covariance to the closed-form limit.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import BudgetExceeded, HarnessLabError, IncompleteParams, UnknownKind
from .lattice import WeightVector, transition_power
from .limit_law import LimitSpec, SpaceTimePoint, z_covariance
from .noise import NoiseRealization, NoiseSpec, batch_rows, derive_seed
from .potential import Pi0Sampler, cov0
from .simulate import FieldWindow, evolve, evolve_block_reads, read_plan

_CHUNK = 256
_MAX_WINDOW_SITES = 1 << 22  # per-chunk block cap, keeps blocks cache-friendly


# ---------------------------------------------------------------------------
# scenarios


@dataclass(frozen=True)
class Scenario:
    """Initial-increment ensemble with its analytic scalars.

    mean_increment is the common mean mu0, increment_variance the
    marginal variance, increment_cov_sum the Cesaro limit of
    Var(window sum)/window length (the scalar the limit covariance
    needs). params is a frozen copy of the construction inputs.
    """

    kind: str
    params: tuple[tuple[str, object], ...]
    mean_increment: float
    increment_variance: float
    increment_cov_sum: float

    def param(self, key: str):
        for k, v in self.params:
            if k == key:
                return v
        raise KeyError(key)


_SCENARIO_KEYS = {
    "iid": ({"family", "variance"}, {"mean"}),
    "pi0": ({"walk", "noise"}, {"truncation"}),
    "m_dependent": ({"m", "base_family", "base_variance"}, {"mean"}),
}


def scenario_init(kind: str, params: Mapping[str, object]) -> Scenario:
    """Build a Scenario, computing mu0 / sigma0^2 / the covariance sum
    analytically for the given kind.

    iid: increments drawn fresh per site from the named family.
    pi0: increments from the stationary law of the dynamics itself.
    m_dependent: moving sums over m+1 fresh variables, so correlations
    vanish beyond lag m by construction.
    """
    if kind not in _SCENARIO_KEYS:
        raise UnknownKind(f"unknown scenario kind {kind!r}")
    required, optional = _SCENARIO_KEYS[kind]
    missing = required - set(params)
    if missing:
        raise IncompleteParams(f"{kind} scenario missing {sorted(missing)}")
    extra = set(params) - required - optional
    if extra:
        raise IncompleteParams(f"{kind} scenario got unexpected {sorted(extra)}")

    if kind == "iid":
        variance = float(params["variance"])
        mean = float(params.get("mean", 0.0))
        NoiseSpec(str(params["family"]), variance)  # validates family and sign
        frozen = (
            ("family", str(params["family"])),
            ("variance", variance),
            ("mean", mean),
        )
        return Scenario(kind, frozen, mean, variance, variance)

    if kind == "m_dependent":
        m = int(params["m"])
        if m < 1:
            raise IncompleteParams("m_dependent needs m >= 1 (use iid for m = 0)")
        base_var = float(params["base_variance"])
        mean = float(params.get("mean", 0.0))
        NoiseSpec(str(params["base_family"]), base_var)
        frozen = (
            ("m", m),
            ("base_family", str(params["base_family"])),
            ("base_variance", base_var),
            ("mean", mean),
        )
        # cov(k) = (m+1-|k|)^+ base_var, summing to (m+1)^2 base_var
        return Scenario(kind, frozen, mean, (m + 1) * base_var, (m + 1) ** 2 * base_var)

    walk = params["walk"]
    noise = params["noise"]
    if not isinstance(walk, WeightVector) or not isinstance(noise, NoiseSpec):
        raise IncompleteParams("pi0 scenario needs walk: WeightVector, noise: NoiseSpec")
    truncation = params.get("truncation")
    frozen = (
        ("walk", walk),
        ("noise", noise),
        ("truncation", None if truncation is None else int(truncation)),
    )
    marginal = cov0(walk, noise.sigma_xi_sq, 0)
    return Scenario(kind, frozen, 0.0, marginal, noise.sigma_xi_sq / walk.variance)


def increment_sampler(
    scenario: Scenario, lo: int, hi: int
) -> Callable[[Sequence[int]], np.ndarray]:
    """Per-window block sampler: fn(seeds) -> (len(seeds), hi-lo) draws
    of the initial increments on [lo, hi), one independent row per seed.
    Window-level setup (the pi0 factorization) happens once here."""
    if hi <= lo:
        raise HarnessLabError("empty increment window")
    p = dict(scenario.params)
    if scenario.kind == "iid":
        spec = NoiseSpec(p["family"], p["variance"])
        mean = p["mean"]

        def draw(seeds: Sequence[int]) -> np.ndarray:
            reals = [spec.realize(s, stream="init") for s in seeds]
            block = batch_rows(reals, 0, lo, hi)
            if mean:
                block += mean
            return block

        return draw

    if scenario.kind == "m_dependent":
        m = p["m"]
        spec = NoiseSpec(p["base_family"], p["base_variance"])
        mean = p["mean"]
        width = hi - lo

        def draw(seeds: Sequence[int]) -> np.ndarray:
            reals = [spec.realize(s, stream="init") for s in seeds]
            rows = batch_rows(reals, 0, lo - m, hi)
            block = rows[:, m:].copy()
            for j in range(1, m + 1):
                block += rows[:, m - j : m - j + width]
            if mean:
                block += mean
            return block

        return draw

    sampler = Pi0Sampler(p["walk"], p["noise"], lo, hi, truncation_K=p["truncation"])
    return sampler.sample_block


def increment_cov_sum_estimate(
    scenario: Scenario, length: int, replicas: int, seed: int
) -> float:
    """Direct Monte Carlo estimate of Var(sum over a length-L window)/L,
    the quantity increment_cov_sum abbreviates analytically."""
    draw = increment_sampler(scenario, 1, length + 1)
    sums = []
    for start in range(0, replicas, _CHUNK):
        seeds = [derive_seed(seed, start + i) for i in range(min(_CHUNK, replicas - start))]
        sums.append(draw(seeds).sum(axis=1))
    return float(np.var(np.concatenate(sums), ddof=1) / length)


# ---------------------------------------------------------------------------
# sampling the scaled field


@dataclass(frozen=True)
class FluctuationSample:
    """One replica's scaled-field values at the requested probes."""

    n: int
    points: tuple[SpaceTimePoint, ...]
    values: tuple[float, ...]
    seed: int

    def __post_init__(self):
        if len(self.values) != len(self.points):
            raise HarnessLabError("one value per point required")
        if not all(math.isfinite(v) for v in self.values):
            raise HarnessLabError("non-finite fluctuation value")


def _prepare(w: WeightVector, n: int, points: Sequence[SpaceTimePoint]):
    """Lattice coordinates of each probe plus the grouped read request.

    Time 0 always reads site 0 so the prefix-sum anchor h(0) = 0 is
    inside every window the planner produces.
    """
    if n < 16:
        raise HarnessLabError(f"n = {n} below the minimum of 16")
    if not points:
        raise HarnessLabError("no probe points")
    b = -w.mean
    root = math.sqrt(n)
    meta = []
    site_sets: dict[int, set[int]] = {0: {0}}
    for pt in points:
        T = math.floor(n * pt.t)
        y = math.floor(n * pt.t * b) + math.floor(pt.r * root)
        meta.append((T, y, pt.r))
        site_sets.setdefault(T, set()).add(y)
    reads = {t: tuple(sorted(s)) for t, s in site_sets.items()}
    index = {(t, y): j for t, ys in reads.items() for j, y in enumerate(ys)}
    cols = tuple((T, y, index[(T, y)], r) for (T, y, r) in meta)
    return reads, max(reads), cols


class _RunContext:
    """Everything one worker needs to turn replica seeds into H rows."""

    def __init__(self, w, scenario, noise_spec, n, points, master_seed):
        self.w = w
        self.noise_spec = noise_spec
        self.reads, self.T_max, self.cols = _prepare(w, n, points)
        lo0, hi0 = read_plan(self.reads, w, self.T_max)[0]
        if (hi0 - lo0) * _CHUNK > _MAX_WINDOW_SITES:
            raise BudgetExceeded(
                f"initial window of {hi0 - lo0} sites exceeds the block budget"
            )
        self.plan0 = (lo0, hi0)
        # a one-site window is just the anchor; there is no increment to draw
        self.sample = (
            increment_sampler(scenario, lo0 + 1, hi0) if hi0 - lo0 > 1 else None
        )
        self.scale = n ** -0.25
        self.root = math.sqrt(n)
        self.mu0 = scenario.mean_increment
        self.master = master_seed

    def chunk(self, start: int, count: int) -> np.ndarray:
        seeds = [derive_seed(self.master, start + i) for i in range(count)]
        dyn = [
            self.noise_spec.realize(derive_seed(s, 2), stream="xi") for s in seeds
        ]
        init_seeds = [derive_seed(s, 1) for s in seeds]

        def h0_fn(lo: int, hi: int) -> np.ndarray:
            if (lo, hi) != self.plan0:
                raise HarnessLabError("planner window drifted")
            if self.sample is None:
                return np.zeros((count, hi - lo))
            eta = self.sample(init_seeds)
            h = np.concatenate(
                [np.zeros((count, 1)), np.cumsum(eta, axis=1)], axis=1
            )
            h -= h[:, [-lo]]
            return h

        got = evolve_block_reads(h0_fn, self.w, dyn, self.reads, self.T_max)
        out = np.empty((count, len(self.cols)))
        for j, (T, y, idx, r) in enumerate(self.cols):
            out[:, j] = self.scale * (got[T][:, idx] - self.mu0 * r * self.root)
        return out


_POOL_CTX: _RunContext | None = None


def _pool_init(args) -> None:
    global _POOL_CTX
    _POOL_CTX = _RunContext(*args)


def _pool_chunk(task: tuple[int, int]) -> np.ndarray:
    return _POOL_CTX.chunk(*task)


def fluctuation_matrix(
    w: WeightVector,
    scenario: Scenario,
    noise_spec: NoiseSpec,
    n: int,
    points: Sequence[SpaceTimePoint],
    replicas: int,
    seed: int,
    workers: int = 1,
) -> np.ndarray:
    """(replicas, len(points)) matrix of H values.

    Replica r uses seeds derived from (seed, r) only, and chunks are
    concatenated in index order, so the result is identical for every
    worker count.
    """
    if replicas < 1:
        raise HarnessLabError("replicas must be positive")
    pts = tuple(points)
    tasks = [(s, min(_CHUNK, replicas - s)) for s in range(0, replicas, _CHUNK)]
    args = (w, scenario, noise_spec, n, pts, seed)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(
            max_workers=min(workers, len(tasks)),
            initializer=_pool_init,
            initargs=(args,),
        ) as pool:
            parts = list(pool.map(_pool_chunk, tasks))
    else:
        ctx = _RunContext(*args)
        parts = [ctx.chunk(*t) for t in tasks]
    return np.vstack(parts)


def fluctuation_samples(
    w: WeightVector,
    scenario: Scenario,
    noise_spec: NoiseSpec,
    n: int,
    points: Sequence[SpaceTimePoint],
    replicas: int,
    seed: int,
    workers: int = 1,
) -> list[FluctuationSample]:
    """One FluctuationSample per replica; see fluctuation_matrix."""
    pts = tuple(points)
    matrix = fluctuation_matrix(w, scenario, noise_spec, n, pts, replicas, seed, workers)
    return [
        FluctuationSample(n, pts, tuple(float(v) for v in row), derive_seed(seed, i))
        for i, row in enumerate(matrix)
    ]


# ---------------------------------------------------------------------------
# exact decomposition


def decompose_fluctuation(
    w: WeightVector,
    eta0: FieldWindow,
    noise: NoiseRealization,
    n: int,
    point: SpaceTimePoint,
    mu0: float = 0.0,
) -> tuple[float, float, float, float]:
    """Split H into (drift, initial-increment, dynamical-noise) parts.

    Returns (Hbar, Sbar, Fbar, H_direct) where
      Hbar = n^{-1/4} (mean(w) T + y - r sqrt(n)),
      Sbar weighs centered increments by walk tail probabilities,
      Fbar weighs every noise variable by its hitting probability,
    and mu0 Hbar + Sbar + Fbar = H_direct exactly (the identity holds
    for any choice of mu0; rounding is the only slack). H_direct comes
    from running the dynamics outright on eta0's prefix sums.
    """
    if n > 512:
        raise BudgetExceeded("decomposition needs all transition powers; n > 512")
    T = math.floor(n * point.t)
    y = math.floor(n * point.t * -w.mean) + math.floor(point.r * math.sqrt(n))
    scale = n ** -0.25
    hbar = scale * (w.mean * T + y - point.r * math.sqrt(n))

    pT = transition_power(w, T)
    x_lo, x_hi = y + pT.offset, y + pT.last  # support of the T-step walk from y
    i_lo = min(1, x_lo + 1)
    i_hi = max(0, x_hi)
    grid = np.arange(i_lo, i_hi + 1)
    eta = eta0.block(i_lo, i_hi + 1) - mu0
    # P(walk >= i): 1 left of the support, reverse-cumulative inside it
    above = np.zeros(len(grid))
    above[grid <= x_lo] = 1.0
    inside = (grid > x_lo) & (grid <= x_hi)
    suffix = np.cumsum(pT.masses[::-1])[::-1]
    above[inside] = suffix[grid[inside] - x_lo]
    pos = grid > 0
    sbar = scale * (
        float(np.dot(eta[pos], above[pos]))
        - float(np.dot(eta[~pos], 1.0 - above[~pos]))
    )

    fbar = 0.0
    for k in range(1, T + 1):
        pk = transition_power(w, T - k)
        row = noise.row(k, y + pk.offset, y + pk.last + 1)
        fbar += float(np.dot(pk.masses, row))
    fbar *= scale

    h_vals = np.concatenate([[0.0], np.cumsum(eta0.values)])
    h0 = FieldWindow(eta0.offset - 1, h_vals - h_vals[1 - eta0.offset])
    h_final = evolve(h0, w, noise, T)
    direct = scale * (h_final.value(y) - mu0 * point.r * math.sqrt(n))
    return hbar, sbar, fbar, direct


# ---------------------------------------------------------------------------
# covariance report and scaling fits


@dataclass(frozen=True)
class CovariancePair:
    """One (probe i, probe j) row of the covariance comparison."""

    i: int
    j: int
    first: SpaceTimePoint
    second: SpaceTimePoint
    mc_cov: float
    mc_stderr: float
    z_cov: float
    passed: bool


def limit_spec_for(
    w: WeightVector, scenario: Scenario, noise_spec: NoiseSpec
) -> LimitSpec:
    return LimitSpec(
        walk_variance=w.variance,
        noise_variance=noise_spec.sigma_xi_sq,
        increment_cov_sum=scenario.increment_cov_sum,
        mean_increment=scenario.mean_increment,
    )


def limit_covariance_report(
    w: WeightVector,
    scenario: Scenario,
    noise_spec: NoiseSpec,
    n: int,
    points: Sequence[SpaceTimePoint],
    replicas: int,
    seed: int,
    workers: int = 1,
) -> list[CovariancePair]:
    """Estimated covariance of every probe pair against the closed form.

    A pair passes when |mc - z| <= max(3 SE, 0.1 |z| + 0.02); the band
    absorbs Monte Carlo error plus finite-n bias, which the limit
    statement itself does not quantify.
    """
    if replicas < 1000:
        raise HarnessLabError("covariance report needs at least 1000 replicas")
    pts = tuple(points)
    matrix = fluctuation_matrix(w, scenario, noise_spec, n, pts, replicas, seed, workers)
    cov = np.atleast_2d(np.cov(matrix, rowvar=False, ddof=1))
    spec = limit_spec_for(w, scenario, noise_spec)
    rows = []
    for i in range(len(pts)):
        for j in range(i, len(pts)):
            z = z_covariance(spec, pts[i], pts[j])
            # Gaussian-asymptotic standard error of a sample covariance
            se = math.sqrt((cov[i, i] * cov[j, j] + cov[i, j] ** 2) / replicas)
            band = max(3.0 * se, 0.1 * abs(z) + 0.02)
            rows.append(
                CovariancePair(
                    i, j, pts[i], pts[j],
                    float(cov[i, j]), se, z,
                    abs(cov[i, j] - z) <= band,
                )
            )
    return rows


class ScalingExponents(NamedTuple):
    space_scaling_slope: float
    hurst_estimate: float
    space_variances: tuple[tuple[int, float], ...]
    hurst_variances: tuple[tuple[float, float], ...]


def scaling_exponents(
    w: WeightVector,
    scenario: Scenario,
    noise_spec: NoiseSpec,
    n_list: Sequence[int],
    t_list: Sequence[float],
    replicas: int,
    seed: int,
    workers: int = 1,
    hurst_n: int | None = None,
) -> ScalingExponents:
    """Least-squares growth exponents of the raw fluctuation.

    Space leg: slope of log Var[n^{1/4} H(1, 0)] against log n over
    n_list (a half-power when the quarter-power scaling is right).
    Time leg: slope of log Var[H(t, 0)] against log t at hurst_n
    (largest n in n_list when unset); half of it estimates the Hurst
    exponent.
    """
    if len(n_list) < 4 or len(t_list) < 4:
        raise HarnessLabError("scaling fits need grids of length >= 4")
    probe = (SpaceTimePoint(1.0, 0.0),)
    space = []
    for k, n in enumerate(sorted(n_list)):
        m = fluctuation_matrix(
            w, scenario, noise_spec, int(n), probe, replicas,
            derive_seed(seed, 1, k), workers,
        )
        space.append((int(n), math.sqrt(n) * float(np.var(m[:, 0], ddof=1))))
    space_slope = float(
        np.polyfit(np.log([n for n, _ in space]), np.log([v for _, v in space]), 1)[0]
    )

    n_big = int(max(n_list)) if hurst_n is None else int(hurst_n)
    pts = tuple(SpaceTimePoint(float(t), 0.0) for t in sorted(t_list))
    m = fluctuation_matrix(
        w, scenario, noise_spec, n_big, pts, replicas, derive_seed(seed, 2), workers
    )
    hurst_var = [(p.t, float(np.var(m[:, j], ddof=1))) for j, p in enumerate(pts)]
    hurst = 0.5 * float(
        np.polyfit(np.log([t for t, _ in hurst_var]), np.log([v for _, v in hurst_var]), 1)[0]
    )
    return ScalingExponents(space_slope, hurst, tuple(space), tuple(hurst_var))
