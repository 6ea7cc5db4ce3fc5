"""Seeded Monte Carlo experiments, inequality accounting and report files.

Every experiment takes an :class:`ExperimentConfig`, derives one child
stream per (grid point, replicate) from ``base_seed`` and returns an
:class:`ExperimentReport`. Reports are plain data and serialize to CSV or
JSON byte-identically for identical configs.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds as bnd
from .decomposition import (
    SIDES,
    VARIANTS,
    decompose,
    make_instance,
    reconstruction_error,
    spectral_pair,
)
from .linalg import ArgumentError, matrix_norm, sym_eig, two_to_inf_norm
from .models import (
    balanced_sbm,
    gen_gaussian_noise,
    gen_low_rank,
    gen_rho_sbm_pair,
    gen_spiked_covariance,
    gen_symmetric_noise,
    omnibus_instance,
    sample_empirical_covariance,
)
from .procrustes import align
from .stream import SeededStream
from .subspace import orthonormalize, random_orthonormal, sin_theta_norms

__all__ = [
    "EXPERIMENTS",
    "DEFAULTS",
    "ConfigError",
    "ExperimentConfig",
    "ExperimentReport",
    "REPORT_SCHEMA",
    "load_config",
    "run_experiment",
    "write_report",
    "read_report",
    "report_to_csv",
    "report_to_json",
    "fit_loglog_slope",
]

SLACK_TOL = bnd.SLACK_TOL
IDENTITY_TOL = 1e-10

COMMON_KEYS = {"experiment", "replicates", "base_seed", "output_path", "output_format"}

DEFAULTS = {
    "covariance": {
        "replicates": 4,
        "d_grid": [100, 400, 1600],
        "r": 3,
        "n_factor": 20,
        "spike_weights": [1.5, 1.25, 1.0],
        "spike_scale": 1.0,
        "c": 1.0,
    },
    "lowrank_recovery": {
        "replicates": 20,
        "dims": [[100, 2000]],
        "r": 3,
        "sigma_scale": 1.0,
        "sigma_weights": [1.5, 1.25, 1.0],
        "noise_scale": 1.0,
    },
    "omnibus": {
        "replicates": 3,
        "n_grid": [250, 500, 1000, 2000],
        "rho_grid": [0.0, 0.5],
        "lambda_block": [[0.5, 0.2], [0.2, 0.5]],
    },
    "entrywise": {
        "replicates": 500,
        "p": 50,
        "eigenvalues": [10.0, -8.0],
        "noise_ratio": 0.25,
        "noise_ratio_min": None,
    },
    "decomposition_suite": {
        "replicates": 100,
        "max_dim": 200,
        "max_rank": 8,
        "noise_fraction": 0.1,
    },
    "norm_suite": {
        "replicates": 1000,
        "max_dim": 30,
    },
    "bounds_suite": {
        "replicates": 200,
        "bounds": ["baseline", "uniform_rect_rank_r", "uniform_rect", "low_rank", "entrywise_symmetric", "davis_kahan"],
    },
}
EXPERIMENTS = tuple(DEFAULTS)


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 1)."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: dict
    replicates: int = 1
    base_seed: int = 0
    output_path: str | None = None
    output_format: str = "csv"

    def to_dict(self):
        d = {
            "experiment": self.experiment,
            "replicates": self.replicates,
            "base_seed": self.base_seed,
            "output_format": self.output_format,
        }
        d.update(self.params)
        return d


def load_config(source=None, experiment=None, **overrides):
    """Build a validated config from a JSON file path, a dict, or defaults.

    ``overrides`` (e.g. ``replicates=5``) are applied last; keys set to None
    are ignored. Unknown keys raise :class:`ConfigError`.
    """
    if source is None:
        raw = {}
    elif isinstance(source, dict):
        raw = dict(source)
    else:
        try:
            raw = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    if experiment is not None:
        if raw.get("experiment", experiment) != experiment:
            raise ConfigError(f"config is for {raw['experiment']!r}, not {experiment!r}")
        raw["experiment"] = experiment
    raw.update({k: v for k, v in overrides.items() if v is not None})
    name = raw.get("experiment")
    if name not in DEFAULTS:
        raise ConfigError(f"unknown experiment {name!r}; expected one of {EXPERIMENTS}")
    defaults = DEFAULTS[name]
    unknown = set(raw) - COMMON_KEYS - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config keys for {name}: {sorted(unknown)}")
    params = {k: raw.get(k, v) for k, v in defaults.items() if k != "replicates"}
    replicates = raw.get("replicates", defaults["replicates"])
    if not isinstance(replicates, int) or isinstance(replicates, bool) or replicates < 1:
        raise ConfigError("replicates must be a positive integer")
    seed = raw.get("base_seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError("base_seed must be an integer in [0, 2**64)")
    fmt = raw.get("output_format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("output_format must be 'csv' or 'json'")
    for key, value in params.items():
        if isinstance(value, list) and not value:
            raise ConfigError(f"grid {key!r} must be non-empty")
    _check_params(name, params)
    return ExperimentConfig(name, params, replicates, seed, raw.get("output_path"), fmt)


def _check_params(name, p):
    def positive_int(key, minimum=1):
        v = p[key]
        if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
            raise ConfigError(f"{key} must be an integer >= {minimum}")

    if name == "covariance":
        positive_int("r")
        positive_int("n_factor")
        if len(p["spike_weights"]) != p["r"]:
            raise ConfigError("spike_weights must have r entries")
        if any(d <= p["r"] for d in p["d_grid"]):
            raise ConfigError("every d must exceed r")
    elif name == "lowrank_recovery":
        positive_int("r")
        if len(p["sigma_weights"]) != p["r"]:
            raise ConfigError("sigma_weights must have r entries")
        for dims in p["dims"]:
            if len(dims) != 2 or min(dims) <= p["r"]:
                raise ConfigError("dims entries must be [p1, p2] with both > r")
    elif name == "omnibus":
        if any(not 0 <= rho <= 1 for rho in p["rho_grid"]):
            raise ConfigError("rho values must lie in [0, 1]")
    elif name == "entrywise":
        positive_int("p", 2)
        if len(p["eigenvalues"]) >= p["p"]:
            raise ConfigError("need fewer eigenvalues than p")
        if not 0 <= p["noise_ratio"] <= 1:
            raise ConfigError("noise_ratio must lie in [0, 1]")
    elif name == "decomposition_suite":
        positive_int("max_rank")
        positive_int("max_dim", p["max_rank"] + 2)
    elif name == "norm_suite":
        positive_int("max_dim")
    elif name == "bounds_suite":
        unknown = set(p["bounds"]) - set(BOUND_CASES)
        if unknown:
            raise ConfigError(f"unknown bounds: {sorted(unknown)}")


@dataclass
class ExperimentReport:
    """Per-replicate rows plus aggregate statistics.

    ``status`` of a row is "checked" or "precondition_failed"; slack
    statistics and ``violations`` only count checked rows.
    """

    experiment: str
    config: dict
    columns: list
    rows: list = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)

    @property
    def violations(self):
        return int(self.aggregate.get("violation_count", 0))


def _seed_stream(config, *path):
    s = SeededStream(config.base_seed)
    for i in path:
        s = s.child(i)
    return s


def fit_loglog_slope(xs, ys):
    """Least-squares slope of log(y) against log(x)."""
    lx = np.log(np.asarray(xs, dtype=np.float64))
    ly = np.log(np.asarray(ys, dtype=np.float64))
    if lx.size < 2:
        return math.nan
    a = np.vstack([lx, np.ones_like(lx)]).T
    slope, _ = np.linalg.lstsq(a, ly, rcond=None)[0]
    return float(slope)


def _quantiles(values):
    if not values:
        return {"slack_min": math.nan, "slack_q05": math.nan, "slack_median": math.nan}
    v = np.asarray(values)
    return {
        "slack_min": float(np.min(v)),
        "slack_q05": float(np.quantile(v, 0.05)),
        "slack_median": float(np.median(v)),
    }


def _status(report):
    return "checked" if report.preconditions_met else "precondition_failed"


# ---------------------------------------------------------------- covariance


def run_covariance(config):
    p = config.params
    r = p["r"]
    weights = np.asarray(p["spike_weights"], dtype=np.float64)
    cols = ["d", "n", "replicate", "lhs_two_to_inf", "lhs_spectral", "ratio",
            "sin_theta", "rhs_general", "rhs_spiked", "reconstruction_error"]
    report = ExperimentReport(config.experiment, config.to_dict(), cols)
    identity_fail = 0
    medians = []
    for gi, d in enumerate(p["d_grid"]):
        n = p["n_factor"] * d
        ratios = []
        for rep in range(config.replicates):
            stream = _seed_stream(config, gi, rep)
            lam = p["spike_scale"] * weights * d / r
            model = gen_spiked_covariance(d, r, lam, p["c"], stream)
            inst = sample_empirical_covariance(model, n, stream)
            pair = spectral_pair(inst, "svd")
            res = align(pair.u, pair.uhat)
            recon = reconstruction_error(decompose(inst, "rect4", "left", pair=pair))
            identity_fail += recon > IDENTITY_TOL
            sin2, _ = sin_theta_norms(pair.u, pair.uhat, verify=False)
            ratio = res.residual_two_to_inf / res.residual_spectral if res.residual_spectral > 0 else math.nan
            ratios.append(ratio)
            report.rows.append({
                "d": d, "n": n, "replicate": rep,
                "lhs_two_to_inf": res.residual_two_to_inf,
                "lhs_spectral": res.residual_spectral,
                "ratio": ratio,
                "sin_theta": sin2,
                "rhs_general": bnd.covariance_rhs(model, n, 1.0, "general"),
                "rhs_spiked": bnd.covariance_rhs(model, n, 1.0, "spiked"),
                "reconstruction_error": recon,
            })
        medians.append(float(np.median(ratios)))
    agg = {f"median_ratio_d{d}": m for d, m in zip(p["d_grid"], medians)}
    agg["ratio_slope"] = fit_loglog_slope(p["d_grid"], medians)
    agg["ratio_monotone_decreasing"] = int(all(b < a for a, b in zip(medians, medians[1:])))
    agg["identity_failures"] = int(identity_fail)
    agg["violation_count"] = int(identity_fail)
    report.aggregate = agg
    return report


# ---------------------------------------------------------- low-rank recovery


def run_lowrank_recovery(config):
    p = config.params
    r = p["r"]
    weights = np.asarray(p["sigma_weights"], dtype=np.float64)
    cols = ["p1", "p2", "replicate", "sigma_r", "v_two_to_inf", "v_spectral",
            "lower_bound", "ratio", "reconstruction_error"]
    report = ExperimentReport(config.experiment, config.to_dict(), cols)
    violations = identity_fail = 0
    agg = {}
    for gi, (p1, p2) in enumerate(p["dims"]):
        sigma_r = p["sigma_scale"] * p2 / math.sqrt(p1)
        ratios = []
        for rep in range(config.replicates):
            stream = _seed_stream(config, gi, rep)
            x, _, _ = gen_low_rank(p1, p2, r, sigma_r * weights, stream)
            e = p["noise_scale"] * gen_gaussian_noise(p1, p2, stream)
            inst = make_instance(x, e, r)
            pair = spectral_pair(inst, "svd")
            res = align(pair.v, pair.vhat)
            sin_v, _ = sin_theta_norms(pair.v, pair.vhat, verify=False)
            lower = sin_v / math.sqrt(p2)
            violations += lower > res.residual_two_to_inf + SLACK_TOL
            recon = reconstruction_error(decompose(inst, "rewritten3", "right", pair=pair))
            identity_fail += recon > IDENTITY_TOL
            ratio = res.residual_two_to_inf / res.residual_spectral if res.residual_spectral > 0 else 0.0
            ratios.append(ratio)
            report.rows.append({
                "p1": p1, "p2": p2, "replicate": rep, "sigma_r": sigma_r,
                "v_two_to_inf": res.residual_two_to_inf,
                "v_spectral": res.residual_spectral,
                "lower_bound": lower, "ratio": ratio,
                "reconstruction_error": recon,
            })
        agg[f"median_ratio_{p1}x{p2}"] = float(np.median(ratios))
        agg[f"frac_ratio_le_0.25_{p1}x{p2}"] = float(np.mean(np.asarray(ratios) <= 0.25))
    agg["lower_bound_violations"] = int(violations)
    agg["identity_failures"] = int(identity_fail)
    agg["violation_count"] = int(violations + identity_fail)
    report.aggregate = agg
    return report


# ------------------------------------------------------------------ omnibus


def run_omnibus(config):
    p = config.params
    lam = np.asarray(p["lambda_block"], dtype=np.float64)
    r = int(np.linalg.matrix_rank(lam))
    cols = ["rho", "n", "replicate", "max_expected_degree", "lhs_two_to_inf",
            "lhs_spectral", "reconstruction_error"]
    report = ExperimentReport(config.experiment, config.to_dict(), cols)
    identity_fail = dominance_fail = 0
    agg = {}
    for ri, rho in enumerate(p["rho_grid"]):
        deltas, meds = [], []
        for gi, n in enumerate(p["n_grid"]):
            model = balanced_sbm(n, lam, rho)
            delta = model.max_expected_degree
            vals = []
            for rep in range(config.replicates):
                stream = _seed_stream(config, ri, gi, rep)
                inst = omnibus_instance(gen_rho_sbm_pair(model, stream), r)
                pair = spectral_pair(inst, "eig", eig_order="desc", partial=True)
                res = align(pair.u, pair.uhat)
                recon = reconstruction_error(decompose(inst, "symmetric4", pair=pair))
                identity_fail += recon > IDENTITY_TOL
                dominance_fail += res.residual_two_to_inf > res.residual_spectral + SLACK_TOL
                vals.append(res.residual_two_to_inf)
                report.rows.append({
                    "rho": rho, "n": n, "replicate": rep, "max_expected_degree": delta,
                    "lhs_two_to_inf": res.residual_two_to_inf,
                    "lhs_spectral": res.residual_spectral,
                    "reconstruction_error": recon,
                })
            deltas.append(delta)
            meds.append(float(np.median(vals)))
        agg[f"slope_rho{rho:g}"] = fit_loglog_slope(deltas, meds)
    agg["identity_failures"] = int(identity_fail)
    agg["norm_domination_failures"] = int(dominance_fail)
    agg["violation_count"] = int(identity_fail + dominance_fail)
    report.aggregate = agg
    return report


# ---------------------------------------------------------------- entrywise


def scale_to_inf_norm(e, target):
    """Scale ``e`` so that ``|e|_inf`` is as close to ``target`` as possible without exceeding it."""
    cur = matrix_norm(e, "infinity")
    if cur == 0 or target == 0:
        return np.zeros_like(e)
    out = e * (target / cur)
    while matrix_norm(out, "infinity") > target:
        out = out * (1.0 - 2.0**-52)
    return out


def _symmetric_low_rank(p, eigenvalues, stream):
    eigenvalues = np.asarray(eigenvalues, dtype=np.float64)
    u = random_orthonormal(p, eigenvalues.size, stream)
    x = (u * eigenvalues) @ u.T
    return 0.5 * (x + x.T)


def entrywise_instance(p, eigenvalues, ratio, stream):
    """Symmetric rank-r signal plus symmetric noise with ``|E|_inf <= ratio * |lambda_r(X)|``, as close as floats allow."""
    x = _symmetric_low_rank(p, eigenvalues, stream)
    # scale against the computed |lambda_r| of x so the boundary is hit exactly
    lam, _ = sym_eig(x, order="abs")
    lam_r = abs(float(lam[len(eigenvalues) - 1]))
    e = scale_to_inf_norm(gen_symmetric_noise(p, stream), ratio * lam_r)
    return make_instance(x, e, len(eigenvalues))


def run_entrywise(config):
    p = config.params
    cols = ["replicate", "noise_ratio", "status", "lhs", "rhs", "slack", "reconstruction_error"]
    report = ExperimentReport(config.experiment, config.to_dict(), cols)
    slacks = []
    violations = identity_fail = failed = 0
    for rep in range(config.replicates):
        stream = _seed_stream(config, rep)
        ratio = p["noise_ratio"]
        if p["noise_ratio_min"] is not None:
            lo = p["noise_ratio_min"]
            ratio = lo + (ratio - lo) * float(stream.uniform(1)[0])
        inst = entrywise_instance(p["p"], p["eigenvalues"], ratio, stream)
        pair = spectral_pair(inst, "eig")
        rep_ = bnd.bound_entrywise_symmetric(inst, pair=pair)
        recon = reconstruction_error(decompose(inst, "symmetric4", pair=pair))
        identity_fail += recon > IDENTITY_TOL
        status = _status(rep_)
        if status == "checked":
            slacks.append(rep_.slack)
            violations += rep_.slack < -SLACK_TOL
        else:
            failed += 1
        report.rows.append({
            "replicate": rep, "noise_ratio": ratio, "status": status,
            "lhs": rep_.lhs, "rhs": rep_.rhs, "slack": rep_.slack,
            "reconstruction_error": recon,
        })
    agg = {"checked": len(slacks), "precondition_failed": failed,
           "bound_violations": int(violations), "identity_failures": int(identity_fail)}
    agg.update(_quantiles(slacks))
    agg["violation_count"] = int(violations + identity_fail)
    report.aggregate = agg
    return report


# ------------------------------------------------------- decomposition suite


def _random_instance(stream, max_dim, max_rank, noise_fraction, symmetric):
    """Random instance with a clear gap after the r-th singular value."""
    r = 1 + int(stream.uniform(1)[0] * max_rank)
    lo = r + 2
    p1 = lo + int(stream.uniform(1)[0] * (max_dim - lo + 1))
    p2 = p1 if symmetric else lo + int(stream.uniform(1)[0] * (max_dim - lo + 1))
    k = min(p1, p2)
    spec = np.concatenate([np.linspace(10.0, 5.0, r), 0.5 * stream.uniform(k - r)])
    if symmetric:
        q = random_orthonormal(p1, k, stream)
        signs = np.where(stream.uniform(k) < 0.5, -1.0, 1.0)
        x = (q * (spec * signs)) @ q.T
        x = 0.5 * (x + x.T)
        g = gen_symmetric_noise(p1, stream)
    else:
        q1 = random_orthonormal(p1, k, stream)
        q2 = random_orthonormal(p2, k, stream)
        x = (q1 * spec) @ q2.T
        g = gen_gaussian_noise(p1, p2, stream)
    e = g * (noise_fraction * 5.0 / matrix_norm(g, "spectral"))
    return make_instance(x, e, r)


def run_decomposition_suite(config):
    p = config.params
    cols = ["replicate", "variant", "side", "p1", "p2", "r", "reconstruction_error"]
    report = ExperimentReport(config.experiment, config.to_dict(), cols)
    worst = {}
    fails = 0
    for rep in range(config.replicates):
        stream = _seed_stream(config, rep)
        rect = _random_instance(stream, p["max_dim"], p["max_rank"], p["noise_fraction"], False)
        sym = _random_instance(stream, p["max_dim"], p["max_rank"], p["noise_fraction"], True)
        rect_pair = spectral_pair(rect, "svd")
        sym_pair = spectral_pair(sym, "eig")
        for variant in VARIANTS:
            inst, pair = (sym, sym_pair) if variant == "symmetric4" else (rect, rect_pair)
            for side in (("left",) if variant == "symmetric4" else SIDES):
                err = reconstruction_error(decompose(inst, variant, side, pair=pair))
                key = f"{variant}_{side}"
                worst[key] = max(worst.get(key, 0.0), err)
                fails += err > IDENTITY_TOL
                report.rows.append({
                    "replicate": rep, "variant": variant, "side": side,
                    "p1": inst.shape[0], "p2": inst.shape[1], "r": inst.r,
                    "reconstruction_error": err,
                })
    agg = {f"max_error_{k}": v for k, v in sorted(worst.items())}
    agg["identity_failures"] = int(fails)
    agg["violation_count"] = int(fails)
    report.aggregate = agg
    return report


# --------------------------------------------------------------- norm suite

NORM_RTOL = 1e-12


def norm_relation_checks(a, b, c):
    """Named inequalities ``(lhs, rhs)`` among the norms of A, AB and CA."""
    p1, p2 = a.shape
    tti = two_to_inf_norm(a)
    mx = matrix_norm(a, "max")
    inf = matrix_norm(a, "infinity")
    spec = matrix_norm(a, "spectral")
    frob = matrix_norm(a, "frobenius")
    s = np.linalg.svd(a, compute_uv=False)
    rank = max(1, int(np.sum(s > 1e-12 * s[0]))) if s[0] > 0 else 1
    return {
        "tti_over_sqrt_p2_le_max": (tti / math.sqrt(p2), mx),
        "max_le_tti": (mx, tti),
        "tti_le_inf": (tti, inf),
        "inf_le_sqrt_p2_tti": (inf, math.sqrt(p2) * tti),
        "tti_le_spectral": (tti, spec),
        "spectral_le_sqrt_p1_tti": (spec, math.sqrt(p1) * tti),
        "spectral_le_sqrt_p2_transpose_tti": (spec, math.sqrt(p2) * two_to_inf_norm(a.T)),
        "spectral_le_frobenius": (spec, frob),
        "frobenius_le_sqrt_rank_spectral": (frob, math.sqrt(rank) * spec),
        "product_tti_le_tti_spectral": (two_to_inf_norm(a @ b), tti * matrix_norm(b, "spectral")),
        "left_product_tti_le_inf_tti": (two_to_inf_norm(c @ a), matrix_norm(c, "infinity") * tti),
    }


def run_norm_suite(config):
    p = config.params
    cols = ["replicate", "p1", "p2", "relation", "lhs", "rhs", "holds"]
    report = ExperimentReport(config.experiment, config.to_dict(), cols)
    violations = 0
    for rep in range(config.replicates):
        stream = _seed_stream(config, rep)
        dims = 1 + (stream.uniform(4) * p["max_dim"]).astype(int)
        p1, p2, p3, p4 = (int(t) for t in dims)
        a = stream.normal((p1, p2))
        if rep % 3 == 1:
            # low-rank shapes exercise the rank-based relation
            k = 1 + int(stream.uniform(1)[0] * min(p1, p2))
            a = stream.normal((p1, k)) @ stream.normal((k, p2))
        b = stream.normal((p2, p3))
        c = stream.normal((p4, p1))
        for name, (lhs, rhs) in norm_relation_checks(a, b, c).items():
            ok = lhs <= rhs * (1 + NORM_RTOL) + NORM_RTOL
            violations += not ok
            report.rows.append({"replicate": rep, "p1": p1, "p2": p2, "relation": name,
                                "lhs": lhs, "rhs": rhs, "holds": int(ok)})
    report.aggregate = {"checks": len(report.rows), "violation_count": int(violations)}
    return report


# ------------------------------------------------------------- bounds suite


def _scale_rank_r(x, e_unit, r, alpha, alpha_p, factor):
    """Scale unit noise so the sigma_r conditions of the rank-r bounds hold with margin ``factor``."""
    inst = make_instance(x, e_unit, r)
    c = bnd.perturbation_constants(inst)
    need = max(2 * c["e_spectral"], 2 / alpha * c["C_EU"], 2 / alpha_p * c["C_EV"])
    return c["sigma_r"] / need * factor


def _case_baseline(stream):
    sig = np.linspace(20.0, 10.0, 5)
    x, _, _ = gen_low_rank(60, 40, 5, sig, stream)
    g = gen_gaussian_noise(60, 40, stream)
    e = g * (2.0 / matrix_norm(g, "spectral"))
    inst = make_instance(x, e, 5)
    return bnd.bound_baseline(inst), inst


def _case_uniform_rank_r(stream):
    x, _, _ = gen_low_rank(40, 30, 3, [12.0, 10.0, 8.0], stream)
    g = gen_gaussian_noise(40, 30, stream)
    t = _scale_rank_r(x, g, 3, 0.5, 0.5, 0.3 + 0.7 * float(stream.uniform(1)[0]))
    inst = make_instance(x, g * t, 3)
    return bnd.bound_uniform_rect(inst, 0.5, 0.5), inst


def _case_uniform_full(stream):
    p1, p2, r = 40, 30, 3
    q1 = random_orthonormal(p1, p2, stream)
    q2 = random_orthonormal(p2, p2, stream)
    tail = 1e-3 * (0.1 + stream.uniform(p2 - r))
    spec = np.concatenate([[12.0, 10.0, 8.0], np.sort(tail)[::-1]])
    x = (q1 * spec) @ q2.T
    g = gen_gaussian_noise(p1, p2, stream)
    t = _scale_rank_r(x, g, r, 0.25, 0.25, 0.3 + 0.7 * float(stream.uniform(1)[0]))
    inst = make_instance(x, g * t, r)
    return bnd.bound_uniform_rect(inst, 0.25, 0.25, 0.25, 0.25), inst


def _case_low_rank(stream):
    x, _, _ = gen_low_rank(80, 60, 3, [15.0, 12.0, 10.0], stream)
    g = gen_gaussian_noise(80, 60, stream)
    t = _scale_rank_r(x, g, 3, 0.5, 0.5, 0.3 + 0.7 * float(stream.uniform(1)[0]))
    inst = make_instance(x, g * t, 3)
    return bnd.bound_low_rank(inst, 0.5, 0.5), inst


def _case_entrywise(stream):
    ratio = 0.25 * float(stream.uniform(1)[0])
    inst = entrywise_instance(50, [10.0, -8.0], ratio, stream)
    return bnd.bound_entrywise_symmetric(inst), inst


def _case_davis_kahan(stream):
    p = 20
    q = random_orthonormal(p, p, stream)
    lam = np.concatenate([[20.0, 18.0], np.linspace(13.0, -5.0, p - 2)])
    x = (q * lam) @ q.T
    x = 0.5 * (x + x.T)
    g = gen_symmetric_noise(p, stream)
    e = g * (1.0 / matrix_norm(g, "spectral"))
    inst = make_instance(x, e, 2)
    return bnd.davis_kahan_report(inst.x, inst.xhat, 1, 2), inst


BOUND_CASES = {
    "baseline": _case_baseline,
    "uniform_rect_rank_r": _case_uniform_rank_r,
    "uniform_rect": _case_uniform_full,
    "low_rank": _case_low_rank,
    "entrywise_symmetric": _case_entrywise,
    "davis_kahan": _case_davis_kahan,
}


def run_bounds_suite(config):
    p = config.params
    cols = ["bound_id", "replicate", "status", "lhs", "rhs", "slack", "weyl_ok"]
    report = ExperimentReport(config.experiment, config.to_dict(), cols)
    agg = {}
    total_viol = 0
    for bi, name in enumerate(p["bounds"]):
        slacks, viol, failed = [], 0, 0
        for rep in range(config.replicates):
            stream = _seed_stream(config, bi, rep)
            rep_, inst = BOUND_CASES[name](stream)
            s = np.linalg.svd(inst.x, compute_uv=False)
            sh = np.linalg.svd(inst.xhat, compute_uv=False)
            weyl_ok = bool(sh[inst.r - 1] >= s[inst.r - 1] - matrix_norm(inst.e, "spectral") - SLACK_TOL)
            status = _status(rep_)
            if status == "checked":
                slacks.append(rep_.slack)
                viol += rep_.slack < -SLACK_TOL
            else:
                failed += 1
            viol += not weyl_ok
            report.rows.append({"bound_id": name, "replicate": rep, "status": status,
                                "lhs": rep_.lhs, "rhs": rep_.rhs, "slack": rep_.slack,
                                "weyl_ok": int(weyl_ok)})
        agg[f"{name}_checked"] = len(slacks)
        agg[f"{name}_precondition_failed"] = failed
        agg[f"{name}_violations"] = int(viol)
        agg[f"{name}_slack_min"] = _quantiles(slacks)["slack_min"]
        total_viol += viol
    agg["violation_count"] = int(total_viol)
    report.aggregate = agg
    return report


RUNNERS = {
    "covariance": run_covariance,
    "lowrank_recovery": run_lowrank_recovery,
    "omnibus": run_omnibus,
    "entrywise": run_entrywise,
    "decomposition_suite": run_decomposition_suite,
    "norm_suite": run_norm_suite,
    "bounds_suite": run_bounds_suite,
}


def run_experiment(config):
    if isinstance(config, dict):
        config = load_config(config)
    return RUNNERS[config.experiment](config)


# ---------------------------------------------------------------- reporting

REPORT_SCHEMA = {
    "type": "object",
    "required": ["experiment", "config", "columns", "rows", "aggregate"],
    "additionalProperties": False,
    "properties": {
        "experiment": {"type": "string", "enum": list(EXPERIMENTS)},
        "config": {"type": "object"},
        "columns": {"type": "array", "items": {"type": "string"}},
        "rows": {"type": "array", "items": {"type": "object"}},
        "aggregate": {
            "type": "object",
            "required": ["violation_count"],
            "properties": {"violation_count": {"type": "integer", "minimum": 0}},
            "additionalProperties": {"type": ["number", "integer", "null"]},
        },
    },
}

CSV_PREFIX = ["kind", "name", "value"]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if v is None:
        return ""
    return str(v)


def _clean(v):
    if isinstance(v, (np.integer, bool, np.bool_)):
        return int(v)
    if isinstance(v, np.floating):
        v = float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def report_to_csv(report):
    """Header ``kind,name,value,<columns>``; replicate rows then aggregate rows."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(CSV_PREFIX + list(report.columns))
    for i, row in enumerate(report.rows):
        writer.writerow(["replicate", str(i), ""] + [_fmt(row.get(c)) for c in report.columns])
    for key, val in report.aggregate.items():
        writer.writerow(["aggregate", key, _fmt(val)] + [""] * len(report.columns))
    return buf.getvalue()


def report_to_json(report):
    doc = {
        "experiment": report.experiment,
        "config": {k: _clean(v) if not isinstance(v, list) else v for k, v in report.config.items()},
        "columns": list(report.columns),
        "rows": [{c: _clean(row.get(c)) for c in report.columns} for row in report.rows],
        "aggregate": {k: _clean(v) for k, v in report.aggregate.items()},
    }
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def write_report(report, fmt="csv", path=None):
    """Write atomically (temp file in the target directory, then rename)."""
    if fmt not in ("csv", "json"):
        raise ArgumentError(f"unknown report format {fmt!r}")
    text = report_to_csv(report) if fmt == "csv" else report_to_json(report)
    if path is None:
        return text
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return text


def _parse_cell(s):
    if s == "":
        return None
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_report(path):
    """Parse a CSV or JSON report back into ``(rows, aggregate)``."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        return doc["rows"], doc["aggregate"]
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    columns = header[len(CSV_PREFIX):]
    rows, agg = [], {}
    for rec in reader:
        if rec[0] == "replicate":
            rows.append({c: _parse_cell(v) for c, v in zip(columns, rec[len(CSV_PREFIX):])})
        elif rec[0] == "aggregate":
            agg[rec[1]] = _parse_cell(rec[2])
    return rows, agg
