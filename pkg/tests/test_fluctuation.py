"""Scenario scalars, the exact H decomposition, and the Monte Carlo lab."""
import math

import numpy as np
import pytest

from harness_lab import (
    FieldWindow,
    FluctuationSample,
    BudgetExceeded,
    HarnessLabError,
    IncompleteParams,
    NoiseSpec,
    SpaceTimePoint,
    UnknownKind,
    WindowTooLarge,
    cov0,
    decompose_fluctuation,
    fbm_covariance,
    fluctuation_matrix,
    fluctuation_samples,
    gamma2,
    increment_cov_sum_estimate,
    increment_sampler,
    limit_covariance_report,
    limit_spec_for,
    potential_kernel,
    scaling_exponents,
    scenario_init,
    z_covariance,
)
from harness_lab.noise import derive_seed

from conftest import ASYM, LAZY, SYM3, random_walk, wv


def test_scenario_scalars():
    s = scenario_init("iid", {"family": "centered-uniform", "variance": 1.0})
    assert (s.mean_increment, s.increment_variance, s.increment_cov_sum) == (0, 1, 1)
    s = scenario_init("iid", {"family": "gaussian", "variance": 2.0, "mean": 0.3})
    assert (s.mean_increment, s.increment_variance, s.increment_cov_sum) == (0.3, 2, 2)
    assert s.param("family") == "gaussian"
    with pytest.raises(KeyError):
        s.param("m")

    # moving sum of m+1 fresh variables: variance (m+1)v, summed covs (m+1)^2 v
    s = scenario_init(
        "m_dependent", {"m": 1, "base_family": "centered-two-point", "base_variance": 1.0}
    )
    assert (s.increment_variance, s.increment_cov_sum) == (2.0, 4.0)
    s = scenario_init(
        "m_dependent", {"m": 2, "base_family": "gaussian", "base_variance": 0.5}
    )
    assert (s.increment_variance, s.increment_cov_sum) == (1.5, 4.5)

    lazy = wv(LAZY)
    s = scenario_init("pi0", {"walk": lazy, "noise": NoiseSpec("gaussian", 1.0)})
    assert s.mean_increment == 0.0
    assert s.increment_variance == pytest.approx(cov0(lazy, 1.0, 0), abs=1e-12)
    assert s.increment_cov_sum == pytest.approx(1.0 / lazy.variance, abs=1e-12)


def test_scenario_validation():
    with pytest.raises(UnknownKind):
        scenario_init("markov", {})
    with pytest.raises(IncompleteParams):
        scenario_init("iid", {"family": "gaussian"})
    with pytest.raises(IncompleteParams):
        scenario_init("iid", {"family": "gaussian", "variance": 1.0, "m": 3})
    with pytest.raises(IncompleteParams):
        scenario_init(
            "m_dependent",
            {"m": 0, "base_family": "gaussian", "base_variance": 1.0},
        )
    with pytest.raises(IncompleteParams):
        scenario_init("pi0", {"walk": "lazy", "noise": NoiseSpec("gaussian", 1.0)})


def test_m_dependent_lag_structure():
    # cov(k) = (m+1-|k|)^+ base_var, checked against empirical block draws
    scn = scenario_init(
        "m_dependent", {"m": 1, "base_family": "gaussian", "base_variance": 1.0}
    )
    draw = increment_sampler(scn, 0, 6)
    block = draw([derive_seed(314, i) for i in range(20000)])
    emp = np.cov(block, rowvar=False, ddof=1)
    for i in range(6):
        for j in range(6):
            target = max(2 - abs(i - j), 0)
            assert emp[i, j] == pytest.approx(target, abs=0.08)


def test_increment_cov_sum_direct_estimates():
    # the analytic scalar is the long-window Cesaro variance limit
    iid = scenario_init("iid", {"family": "centered-uniform", "variance": 1.0})
    est = increment_cov_sum_estimate(iid, 10000, 2000, seed=51)
    assert est == pytest.approx(iid.increment_cov_sum, rel=0.05)

    mdep = scenario_init(
        "m_dependent", {"m": 1, "base_family": "centered-two-point", "base_variance": 1.0}
    )
    est = increment_cov_sum_estimate(mdep, 10000, 2000, seed=52)
    assert est == pytest.approx(mdep.increment_cov_sum, rel=0.05)

    # the stationary scenario cannot open a 10^4-site exact window; its
    # scalar is certified through the covariance table instead
    sym = wv(SYM3)
    pi0 = scenario_init("pi0", {"walk": sym, "noise": NoiseSpec("gaussian", 1.0)})
    with pytest.raises(WindowTooLarge):
        increment_cov_sum_estimate(pi0, 10000, 8, seed=53)
    L = 10000
    table = potential_kernel(sym, 96, method="fourier")
    # lags past the table are below 1e-12; the Cesaro weights only shave
    # an O(sum |k| cov(k) / L) sliver off the full sum
    cesaro = sum(
        (1.0 - abs(k) / L) * cov0(sym, 1.0, k, table=table) for k in range(-94, 95)
    )
    assert cesaro == pytest.approx(pi0.increment_cov_sum, rel=0.05)
    assert cesaro == pytest.approx(pi0.increment_cov_sum, rel=1e-4)


def test_fluctuation_matrix_degenerate_examples():
    w = wv(LAZY)
    silent = NoiseSpec("gaussian", 0.0)
    # the anchor normalization makes the (0, 0) probe exactly zero
    mat = fluctuation_matrix(
        w,
        scenario_init("iid", {"family": "gaussian", "variance": 1.0}),
        NoiseSpec("gaussian", 1.0),
        64,
        (SpaceTimePoint(0.0, 0.0), SpaceTimePoint(1.0, 0.0)),
        200,
        seed=7,
    )
    assert np.all(mat[:, 0] == 0.0)
    assert np.any(mat[:, 1] != 0.0)

    # deterministic increments, no noise: only the drift part survives
    mu0 = 0.4
    frozen = scenario_init("iid", {"family": "gaussian", "variance": 0.0, "mean": mu0})
    pts = tuple(SpaceTimePoint(t, r) for t in (0.5, 1.0) for r in (-1.0, 0.0, 1.5))
    for n in (16, 64, 256):
        mat = fluctuation_matrix(w, frozen, silent, n, pts, 3, seed=1)
        assert np.ptp(mat, axis=0).max() == 0.0  # replicas identical
        assert np.max(np.abs(mat)) <= 2.0 * mu0 * n**-0.25 + 1e-12


def test_fluctuation_samples_deterministic_and_worker_invariant():
    w = wv(ASYM)
    scn = scenario_init("iid", {"family": "centered-uniform", "variance": 1.0})
    noise = NoiseSpec("centered-two-point", 1.0)
    pts = (SpaceTimePoint(0.5, 0.0), SpaceTimePoint(1.0, 1.0))
    kw = dict(n=16, points=pts, replicas=300, seed=99)
    a = fluctuation_matrix(w, scn, noise, workers=1, **kw)
    b = fluctuation_matrix(w, scn, noise, workers=2, **kw)
    np.testing.assert_array_equal(a, b)

    samples = fluctuation_samples(w, scn, noise, workers=1, **kw)
    assert len(samples) == 300
    assert samples[5].seed == derive_seed(99, 5)
    assert samples[5].values == tuple(a[5])
    with pytest.raises(HarnessLabError):
        fluctuation_matrix(w, scn, noise, 16, pts, 0, seed=1)


def test_fluctuation_sample_validation():
    pts = (SpaceTimePoint(1.0, 0.0),)
    with pytest.raises(HarnessLabError):
        FluctuationSample(64, pts, (1.0, 2.0), seed=0)
    with pytest.raises(HarnessLabError):
        FluctuationSample(64, pts, (float("nan"),), seed=0)


def _decomposition_window(w, n, point):
    T = math.floor(n * point.t)
    y = math.floor(n * point.t * -w.mean) + math.floor(point.r * math.sqrt(n))
    lo = min(y + T * w.min_offset, 0)
    hi = max(y + T * w.max_offset, 1) + 1
    return lo, hi


def test_decomposition_identity_sweep():
    rng = np.random.default_rng(606)
    spec = NoiseSpec("gaussian", 1.0)
    checked = 0
    while checked < 20:
        w = random_walk(rng, max_abs=2)
        n = int(rng.choice([16, 32, 64, 128]))
        point = SpaceTimePoint(float(rng.choice([0.5, 1.0])), float(rng.choice([-1.5, 0.0, 1.0])))
        mu0 = float(rng.choice([0.0, 0.3]))
        lo, hi = _decomposition_window(w, n, point)
        eta0 = FieldWindow(lo, rng.standard_normal(hi - lo) + mu0)
        noise = spec.realize(int(rng.integers(1 << 30)), stream="xi")
        hbar, sbar, fbar, direct = decompose_fluctuation(w, eta0, noise, n, point, mu0=mu0)
        resid = abs(mu0 * hbar + sbar + fbar - direct)
        assert resid <= 1e-7 * max(1.0, abs(direct))
        assert abs(hbar) <= 2.0 * n**-0.25
        checked += 1


def test_decomposition_degenerate_parts():
    w = wv(LAZY)
    n, point = 64, SpaceTimePoint(1.0, 0.0)
    lo, hi = _decomposition_window(w, n, point)
    rng = np.random.default_rng(3)

    # no dynamical noise: F part vanishes identically
    eta0 = FieldWindow(lo, rng.standard_normal(hi - lo))
    silent = NoiseSpec("gaussian", 0.0).realize(1, stream="xi")
    hbar, sbar, fbar, direct = decompose_fluctuation(w, eta0, silent, n, point)
    assert fbar == 0.0
    assert sbar + fbar == pytest.approx(direct, abs=1e-12)

    # n cap guards the all-transition-powers cost
    with pytest.raises(BudgetExceeded):
        decompose_fluctuation(w, eta0, silent, 1024, point)


def test_limit_covariance_report_zero_noise():
    w = wv(LAZY)
    scn = scenario_init("iid", {"family": "centered-uniform", "variance": 1.0})
    silent = NoiseSpec("gaussian", 0.0)
    pts = (
        SpaceTimePoint(0.0, -1.0),
        SpaceTimePoint(0.0, 0.5),
        SpaceTimePoint(1.0, 0.0),
        SpaceTimePoint(1.0, 1.0),
    )
    rows = limit_covariance_report(w, scn, silent, 256, pts, 2000, seed=404)
    assert len(rows) == 10
    spec = limit_spec_for(w, scn, silent)
    for row in rows:
        # with silent dynamics the target reduces to the initial-randomness block
        only_init = scn.increment_cov_sum * gamma2(row.first, row.second, w.variance)
        assert row.z_cov == pytest.approx(only_init, abs=1e-12)
        assert row.z_cov == pytest.approx(
            z_covariance(spec, row.first, row.second), abs=1e-15
        )
        assert row.passed, (row.first, row.second, row.mc_cov, row.z_cov)
    with pytest.raises(HarnessLabError):
        limit_covariance_report(w, scn, silent, 256, pts, 500, seed=404)


def test_pi0_time_axis_is_fbm():
    w = wv(LAZY)
    scn = scenario_init("pi0", {"walk": w, "noise": NoiseSpec("gaussian", 1.0)})
    spec = limit_spec_for(w, scn, NoiseSpec("gaussian", 1.0))
    assert z_covariance(
        spec, SpaceTimePoint(1.0, 0.0), SpaceTimePoint(4.0, 0.0)
    ) == pytest.approx(fbm_covariance(spec, 1.0, 4.0), abs=1e-14)


def test_straddle_pair_finite_n_bias():
    """Correlated initial increments shift covariances at negative-site
    probes by about -(sum_k k cov(k))/sqrt(n); pairs kept right of the
    anchor are unbiased. Regression for the probe-placement choice in the
    covariance experiments."""
    w = wv(LAZY)
    scn = scenario_init(
        "m_dependent", {"m": 1, "base_family": "centered-two-point", "base_variance": 1.0}
    )
    noise = NoiseSpec("gaussian", 1.0)
    pts = (SpaceTimePoint(1.0, -1.0), SpaceTimePoint(1.0, 1.0), SpaceTimePoint(1.0, 2.0))
    n, R = 64, 10000
    mat = fluctuation_matrix(w, scn, noise, n, pts, R, seed=909)
    cov = np.cov(mat, rowvar=False, ddof=1)
    spec = limit_spec_for(w, scn, noise)

    def diff_and_se(i, j):
        z = z_covariance(spec, pts[i], pts[j])
        se = math.sqrt((cov[i, i] * cov[j, j] + cov[i, j] ** 2) / R)
        return cov[i, j] - z, se

    shift = -1.0 / math.sqrt(n)  # sum_{k>=1} k cov(k) = 1 for this scenario
    d, se = diff_and_se(0, 1)
    assert abs(d - shift) <= 3 * se
    assert d < -2.5 * se  # the bias is real, not noise
    d, se = diff_and_se(1, 2)
    assert abs(d) <= 3 * se  # off-anchor pair is clean


def test_scaling_exponents_zero_noise_degenerate():
    # with silent dynamics Var H(t, 0) tracks the initial-randomness
    # block alone, still growing diffusively like sqrt(t)
    w = wv(LAZY)
    scn = scenario_init("iid", {"family": "centered-uniform", "variance": 1.0})
    silent = NoiseSpec("gaussian", 0.0)
    out = scaling_exponents(
        w, scn, silent,
        n_list=(32, 64, 128, 256),
        t_list=(0.25, 0.5, 1.0, 2.0, 4.0),
        replicas=2500,
        seed=31,
    )
    assert 0.4 <= out.space_scaling_slope <= 0.6
    assert abs(out.hurst_estimate - 0.25) <= 0.05
    assert len(out.space_variances) == 4
    assert len(out.hurst_variances) == 5
    with pytest.raises(HarnessLabError):
        scaling_exponents(w, scn, silent, (64,), (1.0,), 100, seed=1)
