"""Command line front end.

Each named experiment reads one JSON config document, runs a seeded and
fully deterministic computation, and writes three files into the output
directory: summary.json (headline numbers plus pass/fail checks),
detail.csv (plot-ready rows), and config.resolved.json (the config with
every default filled in, for provenance).  Flags override file values,
file values override defaults.  Exit codes: 0 ok, 1 config error,
2 budget error, 3 check failure under --check.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    BudgetExceeded,
    ConfigParseError,
    HarnessLabError,
    SeriesBudgetExceeded,
    ValidationError,
    WindowTooLarge,
)
from .fluctuation import (
    Scenario,
    increment_sampler,
    limit_covariance_report,
    scaling_exponents,
    scenario_init,
)
from .lattice import WeightVector, as_distribution, parse_weights, validate_weights
from .lclt import green_sum_convergence, lclt_error_profile
from .limit_law import SpaceTimePoint
from .noise import NoiseSpec, derive_seed
from .potential import (
    Pi0Sampler,
    cov0,
    cov0_series_total,
    fit_covariance_decay,
    potential_kernel,
    spectral_density,
)
from .simulate import coupling_decay, hydrodynamic_profile_error

EXPERIMENTS = (
    "potential",
    "covariance",
    "pi0-sample",
    "hydro",
    "coupling",
    "fluctuation",
    "scaling",
    "lclt",
    "green-sum",
)

# Fields shared by every experiment, with their defaults.  seed has no
# default on purpose: runs must be reproducible from the config alone.
_COMMON = {
    "weights": "0:0.5,1:0.5",
    "noise": {"family": "gaussian", "sigma_xi_sq": 1.0},
    "scenario": {"kind": "iid", "params": {"family": "centered-uniform", "variance": 1.0}},
    "n": [64, 128, 256],
    "t": [0.5, 1.0, 2.0],
    "r": [-1.0, 0.0, 1.0],
    "replicas": 1000,
    "seed": None,
    "out": "harness-lab-out",
    "workers": 1,
}

_PER_EXPERIMENT = {
    "potential": {"x_max": 32},
    "covariance": {"x_max": 32},
    "pi0-sample": {"window": [-16, 16], "truncation": None},
    "hydro": {"profile": "sin", "n": [32, 256], "t": [1.0], "radius": 1.0},
    "coupling": {
        "T": [16, 64, 256, 1024],
        "init_a": {"kind": "iid", "params": {"family": "centered-uniform", "variance": 1.0}},
        "init_b": {"kind": "iid", "params": {"family": "centered-two-point", "variance": 2.0}},
    },
    "fluctuation": {"n": [256]},
    "scaling": {
        "n": [64, 128, 256, 512],
        "t": [0.25, 0.5, 1.0, 2.0, 4.0],
        "hurst_n": 256,
    },
    # integer time grid; reused from the common "t" slot
    "lclt": {"t": [16, 32, 64, 128, 256, 512, 1024]},
    # symmetric variance-1/2 law: at t=1, a=0 the limit is sqrt(4/pi)
    "green-sum": {
        "weights": "-1:0.25,0:0.5,1:0.25",
        "t": [1.0],
        "a": 0.0,
        "n": [64, 256, 1024, 4096],
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved run description; `resolved` is the JSON-ready echo
    of every field (defaults filled) that gets hashed and re-emitted."""

    experiment: str
    weights: str
    noise: NoiseSpec
    scenario: dict
    n: tuple
    t: tuple
    r: tuple
    replicas: int
    seed: int
    out: str
    workers: int
    options: dict
    resolved: dict
    check: bool = False

    def walk(self) -> WeightVector:
        return validate_weights(parse_weights(self.weights))


# ---------------------------------------------------------------------------
# config ingestion


def _reject_unknown(experiment: str, data: dict, allowed: set) -> None:
    for key in data:
        if key == "experiment":
            continue
        if key not in allowed:
            raise ValidationError(f"{key}: unknown config field for experiment {experiment!r}")


def _require_int(field: str, value, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{field}: must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValidationError(f"{field}: must be >= {minimum}, got {value}")
    return int(value)


def _require_number(field: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{field}: must be a number, got {value!r}")
    return float(value)


def _require_grid(field: str, value, *, integers: bool = False, minimum=None) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) == 0:
        raise ValidationError(f"{field}: must be a nonempty list")
    out = []
    for item in value:
        v = _require_int(field, item, minimum) if integers else _require_number(field, item)
        if not integers and minimum is not None and v < minimum:
            raise ValidationError(f"{field}: entries must be >= {minimum}, got {v}")
        out.append(v)
    return tuple(out)


def _require_scenario(field: str, value) -> dict:
    if not isinstance(value, dict):
        raise ValidationError(f"{field}: must be an object with 'kind' and 'params'")
    kind = value.get("kind")
    if not isinstance(kind, str):
        raise ValidationError(f"{field}.kind: must be a string")
    params = value.get("params", {})
    if not isinstance(params, dict):
        raise ValidationError(f"{field}.params: must be an object")
    extra = set(value) - {"kind", "params"}
    if extra:
        raise ValidationError(f"{field}.{sorted(extra)[0]}: unknown scenario key")
    return {"kind": kind, "params": dict(params)}


def resolve_config(
    experiment: str, file_data: dict, flags: dict, check: bool = False
) -> ExperimentConfig:
    if experiment not in EXPERIMENTS:
        raise ValidationError(f"experiment: unknown experiment {experiment!r}")
    merged = dict(_COMMON)
    merged.update(_PER_EXPERIMENT[experiment])
    _reject_unknown(experiment, file_data, set(merged))
    merged.update((k, v) for k, v in file_data.items() if k != "experiment")
    merged.update((k, v) for k, v in flags.items() if v is not None)

    if merged.get("seed") is None:
        raise ValidationError("seed: required (there is no wall-clock default)")
    seed = _require_int("seed", merged["seed"])
    replicas = _require_int("replicas", merged["replicas"], minimum=1)
    workers = _require_int("workers", merged["workers"], minimum=1)
    if not isinstance(merged["out"], str) or not merged["out"]:
        raise ValidationError("out: must be a nonempty path string")

    if not isinstance(merged["weights"], str):
        raise ValidationError("weights: must be a text map like '0:0.5,1:0.5'")
    try:
        validate_weights(parse_weights(merged["weights"]))
    except HarnessLabError as exc:
        raise type(exc)(f"weights: {exc}") from exc

    noise_raw = merged["noise"]
    if not isinstance(noise_raw, dict) or set(noise_raw) - {"family", "sigma_xi_sq"}:
        raise ValidationError("noise: must be {family, sigma_xi_sq}")
    try:
        noise = NoiseSpec(
            str(noise_raw.get("family", "gaussian")),
            _require_number("noise.sigma_xi_sq", noise_raw.get("sigma_xi_sq", 1.0)),
        )
    except HarnessLabError as exc:
        raise type(exc)(f"noise: {exc}") from exc

    scenario = _require_scenario("scenario", merged["scenario"])

    n = _require_grid("n", merged["n"], integers=True, minimum=1)
    t_int = experiment == "lclt"
    t = _require_grid("t", merged["t"], integers=t_int, minimum=1 if t_int else 0.0)
    r = _require_grid("r", merged["r"])

    options: dict = {}
    if experiment in ("potential", "covariance"):
        options["x_max"] = _require_int("x_max", merged["x_max"], minimum=2)
    if experiment == "pi0-sample":
        win = merged["window"]
        if not (isinstance(win, (list, tuple)) and len(win) == 2):
            raise ValidationError("window: must be [lo, hi]")
        lo = _require_int("window", win[0])
        hi = _require_int("window", win[1])
        if hi - lo < 2:
            raise ValidationError("window: needs at least two sites")
        options["window"] = (lo, hi)
        trunc = merged["truncation"]
        options["truncation"] = None if trunc is None else _require_int("truncation", trunc, minimum=1)
    if experiment == "hydro":
        profile = merged["profile"]
        if profile not in ("linear", "sin"):
            raise ValidationError(f"profile: must be 'linear' or 'sin', got {profile!r}")
        options["profile"] = profile
        radius = _require_number("radius", merged["radius"])
        if radius <= 0:
            raise ValidationError("radius: must be positive")
        options["radius"] = radius
    if experiment == "coupling":
        options["T"] = _require_grid("T", merged["T"], integers=True, minimum=1)
        options["init_a"] = _require_scenario("init_a", merged["init_a"])
        options["init_b"] = _require_scenario("init_b", merged["init_b"])
    if experiment == "scaling":
        options["hurst_n"] = _require_int("hurst_n", merged["hurst_n"], minimum=16)
    if experiment == "green-sum":
        options["a"] = _require_number("a", merged["a"])

    resolved = {"experiment": experiment}
    for key in sorted(merged):
        if key == "seed":
            resolved[key] = seed
        elif key in ("replicas", "workers"):
            resolved[key] = {"replicas": replicas, "workers": workers}[key]
        else:
            resolved[key] = merged[key]

    return ExperimentConfig(
        experiment=experiment,
        weights=merged["weights"],
        noise=noise,
        scenario=scenario,
        n=n,
        t=t,
        r=r,
        replicas=replicas,
        seed=seed,
        out=str(merged["out"]),
        workers=workers,
        options=options,
        resolved=resolved,
        check=check,
    )


def _build_scenario(spec: dict, w: WeightVector, noise: NoiseSpec) -> Scenario:
    """Scenario from its config form; pi0 borrows the run's walk and
    noise objects unless the params name their own."""
    params = dict(spec["params"])
    if spec["kind"] == "pi0":
        params.setdefault("walk", w)
        params.setdefault("noise", noise)
    return scenario_init(spec["kind"], params)


# ---------------------------------------------------------------------------
# experiment runners: each returns (summary, csv header, csv rows, checks)


def _check(name: str, passed: bool, detail: str) -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def _run_potential(cfg: ExperimentConfig):
    w = cfg.walk()
    x_max = cfg.options["x_max"]
    fourier = potential_kernel(w, x_max, method="fourier")
    series = potential_kernel(w, x_max, method="series")
    rows = []
    agree_gap = 0.0
    agree_ok = True
    harm_max = 0.0
    for x in range(x_max + 1):
        gap = abs(fourier.a(x) - series.a(x))
        tail = series.tail_bound(x)
        agree_gap = max(agree_gap, gap)
        agree_ok = agree_ok and gap <= max(1e-6, tail)
        resid = ""
        if x <= fourier.interior_max:
            resid = fourier.harmonicity_residual(x)
            harm_max = max(harm_max, abs(resid))
        second = fourier.second_difference(x) if x <= x_max - 1 else ""
        rows.append((x, fourier.a(x), series.a(x), second, tail, resid))
    d_sum = fourier.second_difference(0) + 2.0 * sum(
        fourier.second_difference(x) for x in range(1, x_max)
    )
    d_target = 1.0 / w.variance
    summary = {
        "walk_variance": w.variance,
        "walk_mean": w.mean,
        "x_max": x_max,
        "harmonicity_max": harm_max,
        "route_agreement_max": agree_gap,
        "second_difference_sum": d_sum,
        "second_difference_target": d_target,
    }
    checks = [
        _check("harmonicity", harm_max <= 1e-8, f"max residual {harm_max:.3e} <= 1e-8"),
        _check(
            "route-agreement",
            agree_ok,
            f"every fourier-series gap within its certified tail bound (max gap {agree_gap:.3e})",
        ),
        _check(
            "second-difference-sum",
            abs(d_sum - d_target) <= 1e-6,
            f"sum {d_sum:.9f} vs 1/variance {d_target:.9f}",
        ),
    ]
    header = ["x", "a_fourier", "a_series", "second_difference", "series_tail_bound", "harmonicity_residual"]
    return summary, header, rows, checks


def _run_covariance(cfg: ExperimentConfig):
    from scipy.integrate import quad

    w = cfg.walk()
    x_max = cfg.options["x_max"]
    table = potential_kernel(w, x_max + 2, method="fourier")
    sigma_xi_sq = cfg.noise.sigma_xi_sq
    rows = []
    inv_gap = 0.0
    for k in range(x_max + 1):
        c = cov0(w, sigma_xi_sq, k, table)
        if k <= min(8, x_max):
            val, err = quad(
                lambda th: spectral_density(w, sigma_xi_sq, th) * math.cos(k * th),
                -math.pi,
                math.pi,
                epsabs=1e-10,
                epsrel=1e-10,
                limit=400,
            )
            inv_gap = max(inv_gap, abs(val - c))
            rows.append((k, c, val, abs(val - c)))
        else:
            rows.append((k, c, "", ""))
    # the certified total and the envelope fit both need a long lag range:
    # wide-support walks oscillate with long beats and can decay slowly
    cert_table = potential_kernel(w, 96, method="fourier")
    total = cov0_series_total(w, sigma_xi_sq, tol=1e-7, table=cert_table)
    target = sigma_xi_sq / w.variance
    fit = fit_covariance_decay(w, sigma_xi_sq, cert_table)
    summary = {
        "cov0_sum": total,
        "cov0_sum_target": target,
        "spectral_inversion_max_gap": inv_gap,
        "decay_amplitude": fit.amplitude,
        "decay_rate": fit.rate,
        "decay_fit_up_to": fit.fit_up_to,
        "decay_holdout_ok": fit.holdout_ok,
    }
    checks = [
        _check("cov0-sum", abs(total - target) <= 1e-6, f"{total:.9f} vs {target:.9f}"),
        _check("spectral-inversion", inv_gap <= 1e-6, f"max gap {inv_gap:.3e} over lags 0..{min(8, x_max)}"),
        _check("decay-holdout", fit.holdout_ok, f"envelope {fit.amplitude:.3e} exp(-{fit.rate:.3f} x)"),
    ]
    return summary, ["lag", "cov0", "spectral_quadrature", "abs_gap"], rows, checks


def _run_pi0_sample(cfg: ExperimentConfig):
    w = cfg.walk()
    lo, hi = cfg.options["window"]
    sampler = Pi0Sampler(w, cfg.noise, lo, hi, truncation_K=cfg.options["truncation"])
    seeds = [derive_seed(cfg.seed, i) for i in range(cfg.replicas)]
    block = sampler.sample_block(seeds)
    sites = np.arange(lo, hi)
    width = hi - lo

    var_rep = np.mean(block**2, axis=1)
    lag_rep = np.mean(block[:, 1:] * block[:, :-1], axis=1)
    emp_var = float(var_rep.mean())
    emp_lag = float(lag_rep.mean())
    se_var = float(var_rep.std(ddof=1) / math.sqrt(cfg.replicas))
    se_lag = float(lag_rep.std(ddof=1) / math.sqrt(cfg.replicas))
    target_var = cov0(w, cfg.noise.sigma_xi_sq, 0)
    target_lag = cov0(w, cfg.noise.sigma_xi_sq, 1)

    rows = [
        (int(s), float(block[:, j].mean()), float(block[:, j].var(ddof=1)))
        for j, s in enumerate(sites)
    ]
    summary = {
        "window": [lo, hi],
        "sites": width,
        "replicas": cfg.replicas,
        "variance": {"empirical": emp_var, "target": target_var, "se": se_var},
        "lag1": {"empirical": emp_lag, "target": target_lag, "se": se_lag},
    }
    checks = [
        _check(
            "variance",
            abs(emp_var - target_var) <= 3.0 * se_var,
            f"|{emp_var:.5f} - {target_var:.5f}| vs 3se {3 * se_var:.5f}",
        ),
        _check(
            "lag1-covariance",
            abs(emp_lag - target_lag) <= 3.0 * se_lag,
            f"|{emp_lag:.5f} - {target_lag:.5f}| vs 3se {3 * se_lag:.5f}",
        ),
    ]
    return summary, ["site", "mean", "variance"], rows, checks


def _run_hydro(cfg: ExperimentConfig):
    w = cfg.walk()
    profile = cfg.options["profile"]
    u = (lambda x: x) if profile == "linear" else math.sin
    t = cfg.t[0]
    radius = cfg.options["radius"]
    rows = []
    for n in cfg.n:
        err = hydrodynamic_profile_error(u, w, cfg.noise, n, t, radius, derive_seed(cfg.seed, n))
        rows.append((n, err, 2.0 / n))
    summary = {
        "profile": profile,
        "t": t,
        "radius": radius,
        "errors": {str(n): e for n, e, _ in rows},
    }
    noiseless = cfg.noise.sigma_xi_sq == 0.0
    if noiseless and profile == "linear":
        ok = all(e <= 2.0 / n for n, e, _ in rows)
        checks = [_check("linear-exact", ok, "sup error <= 2/n at every n")]
    else:
        ok = rows[-1][1] < rows[0][1]
        checks = [
            _check(
                "error-shrinks",
                ok,
                f"error {rows[-1][1]:.5f} at n={rows[-1][0]} vs {rows[0][1]:.5f} at n={rows[0][0]}",
            )
        ]
    return summary, ["n", "sup_error", "two_over_n"], rows, checks


def _init_generator(scn: Scenario):
    """InitGenerator over arbitrary windows; samplers are cached per
    window shape so pi0 factorizations are built once."""
    cache: dict = {}

    def gen(seed: int, lo: int, hi: int) -> np.ndarray:
        key = (lo, hi)
        if key not in cache:
            cache[key] = increment_sampler(scn, lo, hi)
        return cache[key]([seed])[0]

    return gen


def _run_coupling(cfg: ExperimentConfig):
    w = cfg.walk()
    scn_a = _build_scenario(cfg.options["init_a"], w, cfg.noise)
    scn_b = _build_scenario(cfg.options["init_b"], w, cfg.noise)
    if abs(scn_a.mean_increment - scn_b.mean_increment) > 1e-12:
        raise ValidationError("init_b: initial increment laws must be mean-matched")
    decay = coupling_decay(
        _init_generator(scn_a),
        _init_generator(scn_b),
        w,
        cfg.noise,
        cfg.options["T"],
        cfg.seed,
        replicas=cfg.replicas,
    )
    rows = [(T, v) for T, v in decay]
    first, last = rows[0][1], rows[-1][1]
    summary = {
        "T_first": rows[0][0],
        "T_last": rows[-1][0],
        "mean_abs_first": first,
        "mean_abs_last": last,
        "ratio": last / first if first else math.inf,
    }
    checks = [
        _check(
            "factor-two-decay",
            last < 0.5 * first,
            f"{last:.5f} at T={rows[-1][0]} vs half of {first:.5f} at T={rows[0][0]}",
        )
    ]
    return summary, ["T", "mean_abs_difference"], rows, checks


def _run_fluctuation(cfg: ExperimentConfig):
    w = cfg.walk()
    scn = _build_scenario(cfg.scenario, w, cfg.noise)
    points = tuple(SpaceTimePoint(float(t), float(r)) for t in cfg.t for r in cfg.r)
    report = limit_covariance_report(
        w, scn, cfg.noise, cfg.n[0], points, cfg.replicas, cfg.seed, cfg.workers
    )
    rows = []
    failed = 0
    worst = 0.0
    for pair in report:
        band = max(3.0 * pair.mc_stderr, 0.1 * abs(pair.z_cov) + 0.02)
        worst = max(worst, abs(pair.mc_cov - pair.z_cov) / band)
        failed += 0 if pair.passed else 1
        rows.append(
            (
                pair.i,
                pair.j,
                pair.first.t,
                pair.first.r,
                pair.second.t,
                pair.second.r,
                pair.mc_cov,
                pair.mc_stderr,
                pair.z_cov,
                band,
                pair.passed,
            )
        )
    summary = {
        "n": cfg.n[0],
        "scenario": cfg.scenario["kind"],
        "points": len(points),
        "pairs": len(report),
        "failed_pairs": failed,
        "worst_band_ratio": worst,
    }
    checks = [
        _check("covariance-bands", failed == 0, f"{failed} of {len(report)} pairs outside band")
    ]
    header = ["i", "j", "t_i", "r_i", "t_j", "r_j", "mc_cov", "mc_stderr", "z_cov", "band", "passed"]
    return summary, header, rows, checks


def _run_scaling(cfg: ExperimentConfig):
    w = cfg.walk()
    scn = _build_scenario(cfg.scenario, w, cfg.noise)
    res = scaling_exponents(
        w,
        scn,
        cfg.noise,
        cfg.n,
        cfg.t,
        cfg.replicas,
        cfg.seed,
        cfg.workers,
        hurst_n=cfg.options["hurst_n"],
    )
    rows = [("space", n, v) for n, v in res.space_variances]
    rows += [("time", t, v) for t, v in res.hurst_variances]
    summary = {
        "space_scaling_slope": res.space_scaling_slope,
        "hurst_estimate": res.hurst_estimate,
        "hurst_n": cfg.options["hurst_n"],
    }
    checks = [
        _check(
            "space-slope",
            0.4 <= res.space_scaling_slope <= 0.6,
            f"slope {res.space_scaling_slope:.4f} in [0.4, 0.6]",
        ),
        _check(
            "hurst",
            0.20 <= res.hurst_estimate <= 0.30,
            f"estimate {res.hurst_estimate:.4f} in [0.20, 0.30]",
        ),
    ]
    return summary, ["leg", "grid_value", "variance"], rows, checks


def _run_lclt(cfg: ExperimentConfig):
    w = cfg.walk()
    profile = lclt_error_profile(w, cfg.t)
    rows = list(
        zip(
            profile.t_grid,
            profile.sup_errors,
            profile.scaled,
            profile.grad_errors,
            profile.grad_scaled,
        )
    )
    ratio = max(profile.scaled) / profile.scaled[0]
    monotone = all(a >= b for a, b in zip(profile.sup_errors, profile.sup_errors[1:]))
    summary = {
        "fitted_slope": profile.fitted_slope,
        "grad_slope": profile.grad_slope,
        "scaled_max_over_first": ratio,
    }
    checks = [
        _check("scaled-bounded", ratio <= 1.5, f"max t*err / first = {ratio:.4f} <= 1.5"),
        _check("sup-monotone", monotone, "sup errors nonincreasing along the grid"),
    ]
    header = ["t", "sup_error", "t_times_sup", "grad_error", "t32_times_grad"]
    return summary, header, rows, checks


def _run_green_sum(cfg: ExperimentConfig):
    w = cfg.walk()
    d = as_distribution(w)
    rows_raw = green_sum_convergence(d, cfg.t[0], cfg.options["a"], cfg.n)
    rows = [(n, v, lim, abs(v - lim)) for n, v, lim in rows_raw]
    gap = rows[-1][3]
    summary = {
        "t": cfg.t[0],
        "a": cfg.options["a"],
        "limit": rows[0][2],
        "final_gap": gap,
        "final_n": rows[-1][0],
    }
    checks = [_check("green-limit", gap <= 0.03, f"gap {gap:.5f} at n={rows[-1][0]}")]
    return summary, ["n", "scaled_sum", "limit", "abs_gap"], rows, checks


_RUNNERS = {
    "potential": _run_potential,
    "covariance": _run_covariance,
    "pi0-sample": _run_pi0_sample,
    "hydro": _run_hydro,
    "coupling": _run_coupling,
    "fluctuation": _run_fluctuation,
    "scaling": _run_scaling,
    "lclt": _run_lclt,
    "green-sum": _run_green_sum,
}


# ---------------------------------------------------------------------------
# emission


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    return value


def _csv_cell(value) -> str:
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_experiment(config: ExperimentConfig) -> int:
    """Run the named experiment and write summary.json, detail.csv and
    config.resolved.json into the output directory.

    All three files embed the tool version, the sha256 of the resolved
    config, and the seed.  Wall-clock elapsed time goes into
    summary.json only, so detail.csv and config.resolved.json are
    byte-identical across reruns and summary.json differs in that one
    field at most.
    """
    resolved = _jsonable(config.resolved)
    # out and workers cannot change any computed number, so they stay out
    # of the provenance hash (they are still echoed in the resolved config)
    hashed = {k: v for k, v in resolved.items() if k not in ("out", "workers")}
    blob = json.dumps(hashed, sort_keys=True, separators=(",", ":")).encode()
    cfg_hash = hashlib.sha256(blob).hexdigest()
    meta = {
        "tool": "harness-lab",
        "version": __version__,
        "config_sha256": cfg_hash,
        "seed": config.seed,
    }

    start = time.perf_counter()
    summary, header, rows, checks = _RUNNERS[config.experiment](config)
    elapsed = time.perf_counter() - start

    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved.json").write_text(
        json.dumps({"meta": meta, "config": resolved}, indent=2, sort_keys=True) + "\n"
    )
    with (out / "detail.csv").open("w", newline="") as fh:
        fh.write(f"# harness-lab {__version__} config={cfg_hash} seed={config.seed}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])
    doc = {
        "meta": {**meta, "elapsed_seconds": round(elapsed, 6)},
        "experiment": config.experiment,
        "summary": _jsonable(summary),
        "checks": checks,
    }
    (out / "summary.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    for c in checks:
        status = "ok" if c["passed"] else "FAIL"
        print(f"[{status}] {config.experiment}/{c['name']}: {c['detail']}")
    if config.check and any(not c["passed"] for c in checks):
        return 3
    return 0


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; 2 is reserved for
    # budget errors here, so usage problems become config errors instead
    def error(self, message):
        raise ConfigParseError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="harness-lab",
        description="Seeded numerical experiments for an averaging surface-growth model.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", metavar="FILE", default=None, help="JSON config document")
    parser.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    parser.add_argument("--workers", type=int, default=None, help="worker process count")
    parser.add_argument("--out", metavar="DIR", default=None, help="output directory")
    parser.add_argument(
        "--check",
        action="store_true",
        help="exit 3 if any acceptance band fails",
    )
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if args.config is not None:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigParseError(f"cannot read config file: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigParseError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigParseError("config root must be a JSON object")
    flags = {"seed": args.seed, "workers": args.workers, "out": args.out}
    return resolve_config(args.experiment, data, flags, check=args.check)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        config = load_config(args)
    except HarnessLabError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        return run_experiment(config)
    except (BudgetExceeded, SeriesBudgetExceeded, WindowTooLarge) as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return 2
    except HarnessLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
