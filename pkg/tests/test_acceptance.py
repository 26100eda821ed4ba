"""Acceptance suite: twelve pinned criteria, one pass/fail line each.

Every test prints exactly one line
    ACCEPTANCE <nn> <name>: PASS|FAIL (<detail>)
before asserting, so the full scorecard is readable even on a red run.
Statistical criteria use frozen seeds; the bands and runtime ceilings
are part of the criteria themselves.
"""
import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from harness_lab import (
    FieldWindow,
    NoiseSpec,
    Pi0Sampler,
    SpaceTimePoint,
    cov0,
    cov0_series_total,
    coupling_decay,
    decompose_fluctuation,
    dual_representation,
    evolve,
    evolve_block_reads,
    fbm_covariance,
    fit_covariance_decay,
    gamma1,
    gamma1_integral,
    gamma2,
    gamma2_integral,
    green_limit,
    green_sum_convergence,
    hydrodynamic_profile_error,
    lclt_error_profile,
    limit_covariance_report,
    limit_spec_for,
    potential_kernel,
    q_kernel,
    read_plan,
    scaling_exponents,
    scenario_init,
    spectral_density,
    transition_power,
    z_covariance,
)
from harness_lab.noise import derive_seed

from conftest import ASYM, LAZY, SYM3, random_walk, wv

_WALKS = (LAZY, ASYM, SYM3)


def _report(num: int, name: str, passed: bool, detail: str) -> bool:
    tag = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {num:02d} {name}: {tag} ({detail})")
    return passed


def test_c01_dual_representation_identity():
    start = time.perf_counter()
    rng = np.random.default_rng(1001)
    worst = 0.0
    for _ in range(50):
        w = random_walk(rng, max_abs=2)
        T = int(rng.integers(1, 65))
        lo = T * w.min_offset - 2
        hi = T * w.max_offset + 3
        h0 = FieldWindow(lo, rng.standard_normal(hi - lo))
        noise = NoiseSpec("gaussian", 1.0).realize(int(rng.integers(1 << 30)), stream="xi")
        direct = evolve(h0, w, noise, T).value(0)
        dual = dual_representation(h0, w, noise, T, 0)
        worst = max(worst, abs(direct - dual) / max(1.0, abs(direct)))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-9 and elapsed < 30
    assert _report(
        1, "dual-representation", ok,
        f"50 configs, worst relative gap {worst:.2e} < 1e-9, {elapsed:.1f}s",
    )


def test_c02_q_kernel_structure():
    start = time.perf_counter()
    rng = np.random.default_rng(1002)
    ok = True
    worst_mean, worst_var = 0.0, 0.0
    for _ in range(20):
        w = random_walk(rng)
        q = q_kernel(w)
        table = dict(q.weights)
        ok = ok and all(table[x] == table[-x] for x in table)
        worst_mean = max(worst_mean, abs(q.mean))
        worst_var = max(worst_var, abs(q.variance - 2.0 * w.variance))
        ok = ok and q.span == 1
    elapsed = time.perf_counter() - start
    ok = ok and worst_mean <= 1e-12 and worst_var <= 1e-12 and elapsed < 1
    assert _report(
        2, "q-kernel-structure", ok,
        f"20 walks: symmetry exact, |mean| <= {worst_mean:.1e}, "
        f"|var - 2*var1| <= {worst_var:.1e}, span 1, {elapsed:.2f}s",
    )


def test_c03_potential_kernel_identities():
    start = time.perf_counter()
    harm_worst = 0.0
    sum_worst = 0.0
    routes_ok = True
    for text in _WALKS:
        w = wv(text)
        fourier = potential_kernel(w, 96, method="fourier")
        series = potential_kernel(w, 96, method="series")
        for x in range(31):
            harm_worst = max(harm_worst, abs(fourier.harmonicity_residual(x)))
        d_sum = fourier.second_difference(0) + 2.0 * sum(
            fourier.second_difference(x) for x in range(1, 96)
        )
        sum_worst = max(sum_worst, abs(d_sum - 1.0 / w.variance))
        for x in range(97):
            gap = abs(fourier.a(x) - series.a(x))
            routes_ok = routes_ok and gap <= max(1e-6, series.tail_bound(x))
    lazy = potential_kernel(wv(LAZY), 32, method="fourier")
    closed_worst = max(abs(lazy.a(x) - 2.0 * x) for x in range(33))
    elapsed = time.perf_counter() - start
    ok = (
        harm_worst <= 1e-8
        and sum_worst <= 1e-6
        and routes_ok
        and closed_worst <= 1e-9
        and elapsed < 60
    )
    assert _report(
        3, "potential-kernel-identities", ok,
        f"harmonicity {harm_worst:.1e} <= 1e-8, sum gap {sum_worst:.1e} <= 1e-6, "
        f"routes within certified tails, lazy |a(x)-2x| {closed_worst:.1e}, {elapsed:.1f}s",
    )


def test_c04_invariant_covariance():
    start = time.perf_counter()
    sum_worst = 0.0
    inv_worst = 0.0
    fits_ok = True
    for text, sig in ((LAZY, 1.0), (SYM3, 1.3), (ASYM, 1.0)):
        w = wv(text)
        table = potential_kernel(w, 96, method="fourier")
        total = cov0_series_total(w, sig, tol=1e-6, table=table)
        sum_worst = max(sum_worst, abs(total - sig / w.variance))
        for k in range(-8, 9):
            inv, err = quad(
                lambda th: spectral_density(w, sig, th) * math.cos(k * th),
                -math.pi, math.pi, limit=200,
            )
            inv_worst = max(inv_worst, abs(inv - cov0(w, sig, k, table=table)))
        fits_ok = fits_ok and fit_covariance_decay(w, sig, table=table).holdout_ok
    elapsed = time.perf_counter() - start
    ok = sum_worst <= 1e-6 and inv_worst <= 1e-6 and fits_ok and elapsed < 30
    assert _report(
        4, "invariant-covariance", ok,
        f"sum gap {sum_worst:.1e} <= 1e-6, inversion gap {inv_worst:.1e} <= 1e-6 "
        f"on |k|<=8, decay fits hold out, {elapsed:.1f}s",
    )


def test_c05_pi0_sampler_invariance():
    start = time.perf_counter()
    w = wv(LAZY)
    spec = NoiseSpec("gaussian", 1.0)
    R = 100_000
    v_target = cov0(w, 1.0, 0)
    c_target = cov0(w, 1.0, 1)

    sampler0 = Pi0Sampler(w, spec, -16, 16)
    reads = {1: tuple(range(-9, 11))}
    lo0, hi0 = read_plan(reads, w, 1)[0]
    sampler1 = Pi0Sampler(w, spec, lo0 + 1, hi0)

    raw = np.empty((R, 2))
    stepped = np.empty((R, 2))
    chunk = 1000
    for startr in range(0, R, chunk):
        count = min(chunk, R - startr)
        seeds = [derive_seed(770, startr + i) for i in range(count)]
        eta = sampler0.sample_block([derive_seed(s, 1) for s in seeds])
        raw[startr : startr + count, 0] = eta[:, 16]  # site 0
        raw[startr : startr + count, 1] = eta[:, 17]  # site 1

        noises = [spec.realize(derive_seed(s, 2), stream="xi") for s in seeds]
        eta1 = sampler1.sample_block([derive_seed(s, 3) for s in seeds])

        def h0_fn(lo, hi):
            h = np.concatenate(
                [np.zeros((count, 1)), np.cumsum(eta1, axis=1)], axis=1
            )
            return h

        got = evolve_block_reads(h0_fn, w, noises, reads, 1)
        inc = np.diff(got[1], axis=1)  # increments on -8..10
        stepped[startr : startr + count, 0] = inc[:, 8]
        stepped[startr : startr + count, 1] = inc[:, 9]

    se_var = v_target * math.sqrt(2.0 / R)
    se_cov = math.sqrt((v_target**2 + c_target**2) / R)
    gaps = []
    for mat in (raw, stepped):
        gaps.append(abs(np.var(mat[:, 0], ddof=1) - v_target) / se_var)
        c = float(np.cov(mat[:, 0], mat[:, 1], ddof=1)[0, 1])
        gaps.append(abs(c - c_target) / se_cov)
    elapsed = time.perf_counter() - start
    ok = max(gaps) <= 3.0 and elapsed < 120
    assert _report(
        5, "pi0-sampler", ok,
        f"10^5 samples: var/lag-1 gaps {gaps[0]:.2f}/{gaps[1]:.2f} SE raw, "
        f"{gaps[2]:.2f}/{gaps[3]:.2f} SE after one step (<= 3), {elapsed:.1f}s",
    )


def test_c06_decomposition_identity():
    start = time.perf_counter()
    rng = np.random.default_rng(1006)
    spec = NoiseSpec("gaussian", 1.0)
    worst = 0.0
    for _ in range(20):
        w = random_walk(rng, max_abs=2)
        n = int(rng.choice([16, 32, 64, 128]))
        point = SpaceTimePoint(
            float(rng.choice([0.5, 1.0])), float(rng.choice([-1.5, 0.0, 1.0]))
        )
        mu0 = float(rng.choice([0.0, 0.3]))
        T = math.floor(n * point.t)
        y = math.floor(n * point.t * -w.mean) + math.floor(point.r * math.sqrt(n))
        lo = min(y + T * w.min_offset, 0)
        hi = max(y + T * w.max_offset, 1) + 1
        eta0 = FieldWindow(lo, rng.standard_normal(hi - lo) + mu0)
        noise = spec.realize(int(rng.integers(1 << 30)), stream="xi")
        hbar, sbar, fbar, direct = decompose_fluctuation(w, eta0, noise, n, point, mu0=mu0)
        worst = max(worst, abs(mu0 * hbar + sbar + fbar - direct) / max(1.0, abs(direct)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-7 and elapsed < 120
    assert _report(
        6, "decomposition-identity", ok,
        f"20 configs n <= 128, worst relative residual {worst:.2e} <= 1e-7, {elapsed:.1f}s",
    )


def _scenario_grid(kind):
    if kind == "m_dependent":
        # keep every probe site on one side of the prefix anchor: correlated
        # increments pick up an O(n^{-1/2}) covariance shift across it
        return tuple(
            SpaceTimePoint(t, r) for t in (0.5, 1.0, 2.0) for r in (1.0, 1.5, 2.0)
        )
    return tuple(
        SpaceTimePoint(t, r) for t in (0.5, 1.0, 2.0) for r in (-1.0, 0.0, 1.0)
    )


def test_c07_limit_covariance_three_scenarios():
    start = time.perf_counter()
    w = wv(LAZY)
    n, replicas, seed = 256, 20_000, 2024
    runs = (
        (
            "iid",
            scenario_init("iid", {"family": "centered-uniform", "variance": 1.0}),
            NoiseSpec("centered-two-point", 1.0),
        ),
        (
            "pi0",
            scenario_init("pi0", {"walk": w, "noise": NoiseSpec("gaussian", 1.0)}),
            NoiseSpec("gaussian", 1.0),
        ),
        (
            "m_dependent",
            scenario_init(
                "m_dependent",
                {"m": 1, "base_family": "centered-two-point", "base_variance": 1.0},
            ),
            NoiseSpec("centered-two-point", 1.0),
        ),
    )
    ok = True
    details = []
    for name, scn, noise in runs:
        rows = limit_covariance_report(
            w, scn, noise, n, _scenario_grid(scn.kind), replicas, seed
        )
        worst = 0.0
        for row in rows:
            band = max(3.0 * row.mc_stderr, 0.1 * abs(row.z_cov) + 0.02)
            worst = max(worst, abs(row.mc_cov - row.z_cov) / band)
            ok = ok and row.passed
        details.append(f"{name} worst {worst:.2f}x band")
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 1200
    assert _report(
        7, "limit-covariance", ok,
        f"n=256, 2e4 replicas, 3x3 grid: {'; '.join(details)}, {elapsed:.0f}s",
    )


def test_c08_scaling_exponents():
    start = time.perf_counter()
    w = wv(LAZY)
    scn = scenario_init("pi0", {"walk": w, "noise": NoiseSpec("gaussian", 1.0)})
    out = scaling_exponents(
        w, scn, NoiseSpec("gaussian", 1.0),
        n_list=(64, 128, 256, 512),
        t_list=(0.25, 0.5, 1.0, 2.0, 4.0),
        replicas=20_000,
        seed=611,
        hurst_n=256,
    )
    elapsed = time.perf_counter() - start
    ok = (
        0.4 <= out.space_scaling_slope <= 0.6
        and 0.20 <= out.hurst_estimate <= 0.30
        and elapsed < 1200
    )
    assert _report(
        8, "scaling-exponents", ok,
        f"space slope {out.space_scaling_slope:.4f} in [0.4, 0.6], "
        f"Hurst {out.hurst_estimate:.4f} in [0.20, 0.30], {elapsed:.0f}s",
    )


def test_c09_gamma_identities():
    start = time.perf_counter()
    rng = np.random.default_rng(1009)
    worst = 0.0
    for _ in range(100):
        p1 = SpaceTimePoint(float(rng.uniform(0.05, 3.0)), float(rng.uniform(-3, 3)))
        p2 = SpaceTimePoint(float(rng.uniform(0.05, 3.0)), float(rng.uniform(-3, 3)))
        v = float(rng.uniform(0.25, 4.0))
        worst = max(worst, abs(gamma1(p1, p2, v) - gamma1_integral(p1, p2, v)))
        worst = max(worst, abs(gamma2(p1, p2, v) - gamma2_integral(p1, p2, v)))
    w = wv(LAZY)
    scn = scenario_init("pi0", {"walk": w, "noise": NoiseSpec("gaussian", 1.0)})
    spec = limit_spec_for(w, scn, NoiseSpec("gaussian", 1.0))
    fbm_worst = 0.0
    for s in (0.25, 0.5, 1.0, 2.0, 4.0):
        for t in (0.25, 0.5, 1.0, 2.0, 4.0):
            z = z_covariance(spec, SpaceTimePoint(s, 0.0), SpaceTimePoint(t, 0.0))
            fbm_worst = max(fbm_worst, abs(z - fbm_covariance(spec, s, t)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and fbm_worst <= 1e-10 and elapsed < 5
    assert _report(
        9, "gamma-identities", ok,
        f"100 pairs closed-vs-integral, worst {worst:.1e} <= 1e-8; "
        f"fBM vs covariance {fbm_worst:.1e} <= 1e-10, {elapsed:.1f}s",
    )


def test_c10_lclt_and_green_sum():
    start = time.perf_counter()
    grid = (16, 32, 64, 128, 256, 512, 1024, 2048, 4096)
    lazy = lclt_error_profile(wv(LAZY), grid)
    asym = lclt_error_profile(wv(ASYM), grid)
    bounded = all(max(p.scaled) <= 1.5 * p.scaled[0] for p in (lazy, asym))
    slope_ok = asym.fitted_slope <= -0.8
    grad_ok = asym.grad_slope <= asym.fitted_slope - 0.3

    d = transition_power(wv(SYM3), 1)
    rows = green_sum_convergence(d, 1.0, 0.0, (4096,))
    _, finite, limit = rows[0]
    green_gap = abs(finite - limit)
    exact = abs(limit - math.sqrt(4.0 / math.pi))
    elapsed = time.perf_counter() - start
    ok = bounded and slope_ok and grad_ok and green_gap <= 0.03 and exact <= 1e-9 and elapsed < 300
    assert _report(
        10, "lclt-and-green-sum", ok,
        f"t*sup bounded (1.5x), asym slope {asym.fitted_slope:.2f} <= -0.8, "
        f"grad slope {asym.grad_slope:.2f} <= slope-0.3, green gap {green_gap:.4f} <= 0.03, "
        f"limit = sqrt(4/pi) within {exact:.1e}, {elapsed:.0f}s",
    )


def test_c11_hydrodynamic_limit():
    start = time.perf_counter()
    w = wv(LAZY)
    silent = NoiseSpec("gaussian", 0.0)
    linear_ok = True
    for n in (32, 256):
        err = hydrodynamic_profile_error(lambda x: x, w, silent, n, 1.0, 1.0, 1)
        linear_ok = linear_ok and err <= 2.0 / n
    noisy = NoiseSpec("gaussian", 1.0)
    errs = {
        n: hydrodynamic_profile_error(math.sin, w, noisy, n, 1.0, 1.0, derive_seed(4242, n))
        for n in (32, 256)
    }
    elapsed = time.perf_counter() - start
    ok = linear_ok and errs[256] < errs[32] and elapsed < 120
    assert _report(
        11, "hydrodynamic-limit", ok,
        f"noiseless linear <= 2/n at n=32,256; sin error {errs[256]:.4f} (n=256) "
        f"< {errs[32]:.4f} (n=32), {elapsed:.1f}s",
    )


def test_c12_coupling_decay():
    start = time.perf_counter()
    w = wv(LAZY)
    spec = NoiseSpec("gaussian", 1.0)
    root3, root2 = math.sqrt(3.0), math.sqrt(2.0)

    def uniform(seed, lo, hi):
        return np.random.default_rng(seed).uniform(-root3, root3, hi - lo)

    def two_point(seed, lo, hi):
        return np.random.default_rng(seed).choice([-root2, root2], size=hi - lo)

    out = dict(
        coupling_decay(uniform, two_point, w, spec, (16, 64, 256, 1024), seed=12, replicas=1000)
    )
    elapsed = time.perf_counter() - start
    ok = out[1024] < 0.5 * out[16] and elapsed < 300
    assert _report(
        12, "coupling-decay", ok,
        f"mean |difference| {out[1024]:.4f} at T=1024 < 0.5 x {out[16]:.4f} at T=16, "
        f"{elapsed:.0f}s",
    )
