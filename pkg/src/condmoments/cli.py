"""Experiment harness and command-line interface.

Subcommands:

    verify    run a verification suite (bundled default or --config) and
              write a JSON report plus CSV summary
    estimate  run one estimator and print the result as JSON
    formulas  print any closed-form value as JSON
    selftest  run the property suites with fixed seeds

Config and report formats are JSON; the CSV summary has one row per
experiment with columns experiment_id, estimator_id, params, n_samples,
mean, stderr, closed_form, z, pass.  Exit codes: 0 all non-probe
experiments pass, 1 a check failed or an estimator errored, 2 the config or
command line was invalid.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import bwspace, conditioning, cxla, formulas, montecarlo, randgeom, roots
from .montecarlo import Comparison, EstimatorConfig
from .randgeom import RngStream, mix64

VERSION = "0.1.0"
CONFIG_VERSION = 1
DEFAULT_SEED = 20260809
SEED_ENV_VAR = "CONDMOMENTS_SEED"

_SINGLE_ESTIMATORS = ("pinv_moment", "detweighted_square", "detweighted_rect",
                      "espnorm", "espnormrest", "poly_moment")
_PAIR_ESTIMATORS = ("detweighted_rect_pair", "detweighted_square_pair", "poly_matrix_pair", "poly_scaling_pair")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: str
    estimator_id: str
    params: dict
    samples: int
    seed: int
    tolerance_sigmas: float
    closed_form_id: str | None = None
    lines_per_system: int | None = None
    probe: bool = False


@dataclass
class Report:
    version: str
    timestamp: str
    runtime_seconds: float
    overall_pass: bool
    rows: list[dict] = field(default_factory=list)


# ---------------------------------------------------------------------------
# closed forms

def _closed_form(closed_form_id: str, params: dict) -> formulas.FormulaValue:
    if closed_form_id == "pinv_moment_value":
        return formulas.pinv_moment_value(params["r"], params["m"])
    if closed_form_id == "invnor2mdet_value":
        return formulas.invnor2mdet_value(params["r"], params["k"])
    if closed_form_id == "main_theorem_value":
        return formulas.main_theorem_value(params["n"], params["degrees"])
    if closed_form_id == "espnorm_value":
        return formulas.espnorm_value(params["n"], params["alpha"])
    if closed_form_id == "espnormrest_closed":
        return formulas.espnormrest_value(
            params["n"], params["alpha"], params["beta"]
        ).closed_form
    if closed_form_id == "espnormrest_sum":
        return formulas.espnormrest_value(
            params["n"], params["alpha"], params["beta"]
        ).sum_form
    raise ValueError(f"unknown closed_form_id {closed_form_id!r}")


# ---------------------------------------------------------------------------
# experiment validation (before any sampling starts)

def _validate_experiment(exp: ExperimentConfig) -> None:
    p = exp.params
    est = exp.estimator_id
    if est == "pinv_moment":
        r, m, alpha = p["r"], p["m"], p["alpha"]
        if not (1 <= r <= m):
            raise ValueError(f"{exp.experiment_id}: need 1 <= r <= m")
        if not (0 < alpha < 2 * (m - r + 1)):
            raise ValueError(
                f"{exp.experiment_id}: alpha violates 0 < alpha < 2(m-r+1) = {2 * (m - r + 1)}"
            )
    elif est == "detweighted_rect":
        r, n, alpha = p["r"], p["n"], p["alpha"]
        if not (1 <= r <= n) or not (0 < alpha < 2 * (n - r + 2)):
            raise ValueError(
                f"{exp.experiment_id}: alpha violates 0 < alpha < 2(n-r+2) = {2 * (n - r + 2)}"
            )
    elif est == "detweighted_square":
        r, k, alpha = p["r"], p["k"], p["alpha"]
        if r < 1 or k <= 0 or not (0 < alpha < 4 * k + 2):
            raise ValueError(
                f"{exp.experiment_id}: alpha violates 0 < alpha < 4k+2 = {4 * k + 2}"
            )
    elif est == "espnorm":
        if p["alpha"] <= -2 * p["n"]:
            raise ValueError(f"{exp.experiment_id}: alpha violates alpha > -2n")
    elif est == "espnormrest":
        n, alpha, beta = p["n"], p["alpha"], p["beta"]
        if n < 2 or alpha < 0 or 2 * alpha + beta <= 1 - 2 * n:
            raise ValueError(
                f"{exp.experiment_id}: parameters violate 2*alpha + beta > 1 - 2n"
            )
    elif est in ("poly_moment", "poly_matrix_pair", "poly_scaling_pair"):
        n = p["n"]
        degs = bwspace.check_degrees(n, p["degrees"])
        r = len(degs)
        alpha = p["alpha"]
        if r != 1:
            raise ValueError(f"{exp.experiment_id}: polynomial sampling needs r = 1")
        if not (0 < alpha < 2 * (n - r + 2)):
            raise ValueError(
                f"{exp.experiment_id}: alpha violates 0 < alpha < 2(n-r+2) = {2 * (n - r + 2)}"
            )
        if est == "poly_matrix_pair" and int(p.get("matrix_samples", 0)) < 1:
            raise ValueError(f"{exp.experiment_id}: poly_matrix_pair needs matrix_samples >= 1")
    elif est == "detweighted_rect_pair":
        r, n, alpha = p["r"], p["n"], p["alpha"]
        if not (1 <= r <= n) or not (0 < alpha < 2 * (n - r + 2)):
            raise ValueError(
                f"{exp.experiment_id}: alpha violates 0 < alpha < 2(n-r+2) = {2 * (n - r + 2)}"
            )
    elif est == "detweighted_square_pair":
        r, n = p["r"], p["n"]
        if not (1 <= r < n):
            raise ValueError(f"{exp.experiment_id}: kernel identity needs 1 <= r < n")
    else:
        raise ValueError(f"{exp.experiment_id}: unknown estimator_id {est!r}")
    if exp.closed_form_id is not None:
        _closed_form(exp.closed_form_id, p)  # raises on bad formula parameters


# ---------------------------------------------------------------------------
# experiment execution

def _cfg(exp: ExperimentConfig, seed: int, samples: int, workers: int) -> EstimatorConfig:
    return EstimatorConfig(
        samples=samples,
        seed=seed,
        workers=workers,
        lines_per_system=exp.lines_per_system or 8,
    )


def _run_single(exp: ExperimentConfig, samples: int, workers: int) -> Comparison:
    p = exp.params
    cfg = _cfg(exp, exp.seed, samples, workers)
    if exp.estimator_id == "pinv_moment":
        est = montecarlo.estimate_pinv_moment(p["r"], p["m"], p["alpha"], p["norm"], cfg)
    elif exp.estimator_id == "detweighted_rect":
        est = montecarlo.estimate_detweighted_rect(p["r"], p["n"], p["alpha"], p["norm"], cfg)
    elif exp.estimator_id == "detweighted_square":
        est = montecarlo.estimate_detweighted_square(p["r"], p["k"], p["alpha"], p["norm"], cfg)
    elif exp.estimator_id == "espnorm":
        est = montecarlo.estimate_espnorm(p["n"], p["alpha"], cfg)
    elif exp.estimator_id == "espnormrest":
        est = montecarlo.estimate_espnormrest(p["n"], p["alpha"], p["beta"], cfg)
    elif exp.estimator_id == "poly_moment":
        est = montecarlo.estimate_poly_moment(
            p["n"], p["degrees"], p["alpha"], p.get("relative", False), p["norm"], cfg
        )
    else:
        raise ValueError(f"not a single-estimator experiment: {exp.estimator_id}")
    cf = _closed_form(exp.closed_form_id, p)
    return montecarlo.compare(est, cf, exp.tolerance_sigmas)


def _run_pair(exp: ExperimentConfig, samples: int, workers: int) -> Comparison:
    p = exp.params
    seed_lhs = mix64(exp.seed, 1)
    seed_rhs = mix64(exp.seed, 2)
    tol = exp.tolerance_sigmas

    if exp.estimator_id == "detweighted_rect_pair":
        r, n, alpha, norm = p["r"], p["n"], p["alpha"], p["norm"]
        lhs = montecarlo.estimate_detweighted_rect(
            r, n, alpha, norm, _cfg(exp, seed_lhs, samples, workers)
        )
        rhs = montecarlo.estimate_pinv_moment(
            r, n + 1, alpha, norm, _cfg(exp, seed_rhs, samples, workers)
        )
        scale = math.exp(math.lgamma(n - r + 1) - math.lgamma(n + 1))
        return montecarlo.compare_pair(lhs, rhs, tol, lhs_scale=scale)

    if exp.estimator_id == "detweighted_square_pair":
        r, n = p["r"], p["n"]
        alpha, norm = p.get("alpha", 2.0), p.get("norm", "frobenius")
        lhs = montecarlo.estimate_pinv_moment(
            r, n, alpha, norm, _cfg(exp, seed_lhs, samples, workers)
        )
        rhs = montecarlo.estimate_detweighted_square(
            r, n - r, alpha, norm, _cfg(exp, seed_rhs, samples, workers)
        )
        scale = math.exp(
            sum(math.lgamma(i) - math.lgamma(r + i) for i in range(1, n - r + 1))
        )
        return montecarlo.compare_pair(lhs, rhs, tol, rhs_scale=scale)

    if exp.estimator_id == "poly_matrix_pair":
        n, degs, alpha, norm = p["n"], p["degrees"], p["alpha"], p["norm"]
        matrix_samples = p["matrix_samples"] if samples == exp.samples else samples
        lhs = montecarlo.estimate_poly_moment(
            n, degs, alpha, True, norm, _cfg(exp, seed_lhs, samples, workers)
        )
        rhs = montecarlo.estimate_pinv_moment(
            len(degs), n + 1, alpha, norm, _cfg(exp, seed_rhs, matrix_samples, workers)
        )
        return montecarlo.compare_pair(lhs, rhs, tol)

    if exp.estimator_id == "poly_scaling_pair":
        n, degs, alpha, norm = p["n"], p["degrees"], p["alpha"], p["norm"]
        lhs = montecarlo.estimate_poly_moment(
            n, degs, alpha, False, norm, _cfg(exp, seed_lhs, samples, workers)
        )
        rhs = montecarlo.estimate_poly_moment(
            n, degs, alpha, True, norm, _cfg(exp, seed_rhs, samples, workers)
        )
        n_dim = bwspace.dim_space(n, degs)
        scale = math.exp(math.lgamma(n_dim) - math.lgamma(n_dim - alpha / 2.0))
        return montecarlo.compare_pair(lhs, rhs, tol, rhs_scale=scale)

    raise ValueError(f"not a pair experiment: {exp.estimator_id}")


def run_experiment(
    exp: ExperimentConfig, samples_override: int | None = None, workers: int = 1
) -> Comparison:
    """Execute one experiment and compare against its reference."""
    samples = samples_override if samples_override is not None else exp.samples
    if exp.estimator_id in _PAIR_ESTIMATORS:
        return _run_pair(exp, samples, workers)
    return _run_single(exp, samples, workers)


def _row_from_comparison(exp: ExperimentConfig, comp: Comparison) -> dict:
    est = comp.estimate
    return {
        "experiment_id": exp.experiment_id,
        "estimator_id": exp.estimator_id,
        "params": exp.params,
        "n_samples": est.n_samples,
        "seed": exp.seed,
        "method": est.method,
        "mean": est.mean,
        "stderr": est.stderr,
        "lhs_scale": comp.lhs_scale,
        "closed_form": comp.closed_form.value if comp.closed_form else None,
        "closed_form_id": exp.closed_form_id,
        "reference_value": comp.reference_value,
        "reference_stderr": comp.reference_stderr,
        "z": comp.z_score,
        "pass": comp.passed,
        "probe": exp.probe,
        "tolerance_sigmas": exp.tolerance_sigmas,
        "error": None,
    }


def _error_row(exp: ExperimentConfig, err: Exception) -> dict:
    return {
        "experiment_id": exp.experiment_id,
        "estimator_id": exp.estimator_id,
        "params": exp.params,
        "n_samples": 0,
        "seed": exp.seed,
        "method": None,
        "mean": None,
        "stderr": None,
        "lhs_scale": 1.0,
        "closed_form": None,
        "closed_form_id": exp.closed_form_id,
        "reference_value": None,
        "reference_stderr": None,
        "z": None,
        "pass": False,
        "probe": exp.probe,
        "tolerance_sigmas": exp.tolerance_sigmas,
        "error": f"{type(err).__name__}: {err}",
    }


# ---------------------------------------------------------------------------
# bundled default suite (the acceptance experiments)

def default_suite(seed: int = DEFAULT_SEED) -> list[ExperimentConfig]:
    """The bundled verification suite; seeds derive from one base seed."""
    exps: list[ExperimentConfig] = []

    def add(experiment_id, estimator_id, params, samples, tolerance_sigmas,
            closed_form_id=None, lines_per_system=None, probe=False):
        exps.append(
            ExperimentConfig(
                experiment_id=experiment_id,
                estimator_id=estimator_id,
                params=params,
                samples=samples,
                seed=mix64(seed, len(exps) + 1),
                tolerance_sigmas=tolerance_sigmas,
                closed_form_id=closed_form_id,
                lines_per_system=lines_per_system,
                probe=probe,
            )
        )

    for r, m in ((1, 3), (2, 4), (3, 5), (2, 5)):
        add(f"pinv-r{r}m{m}", "pinv_moment",
            {"r": r, "m": m, "alpha": 2.0, "norm": "frobenius"},
            100_000, 3.0, "pinv_moment_value")

    for r, k in ((1, 1), (2, 1), (2, 2), (3, 1)):
        add(f"invnor2mdet-r{r}k{k}", "detweighted_square",
            {"r": r, "k": float(k), "alpha": 2.0, "norm": "frobenius"},
            100_000, 3.0, "invnor2mdet_value")

    for norm in ("frobenius", "operator"):
        add(f"rect-identity-{norm}", "detweighted_rect_pair",
            {"r": 2, "n": 3, "alpha": 2.0, "norm": norm}, 100_000, 3.0)

    add("kernel-identity-r2n3", "detweighted_square_pair",
        {"r": 2, "n": 3, "alpha": 2.0, "norm": "frobenius"}, 100_000, 3.0)

    for d in (1, 2, 3):
        add(f"theorem-determined-d{d}", "poly_moment",
            {"n": 1, "degrees": [d], "alpha": 2.0, "relative": False,
             "norm": "frobenius"},
            10_000, 4.0, "main_theorem_value", lines_per_system=1)

    add("theorem-underdetermined-n2d2", "poly_moment",
        {"n": 2, "degrees": [2], "alpha": 2.0, "relative": False,
         "norm": "frobenius"},
        10_000, 3.0, "main_theorem_value", lines_per_system=8)

    add("relative-vs-matrix-n2d2", "poly_matrix_pair",
        {"n": 2, "degrees": [2], "alpha": 2.0, "norm": "frobenius",
         "matrix_samples": 100_000},
        10_000, 3.0, lines_per_system=8)

    add("scaling-identity-d2", "poly_scaling_pair",
        {"n": 1, "degrees": [2], "alpha": 2.0, "norm": "frobenius"},
        10_000, 3.0, lines_per_system=1)

    for n, alpha in ((3, 4.0), (2, -2.0), (4, 2.0)):
        add(f"espnorm-n{n}a{alpha:g}", "espnorm",
            {"n": n, "alpha": alpha}, 100_000, 3.0, "espnorm_value")

    for n, alpha in ((3, 1), (4, 2)):
        add(f"espnormrest-n{n}a{alpha}", "espnormrest",
            {"n": n, "alpha": alpha, "beta": 2.0}, 100_000, 3.0, "espnormrest_closed")

    add("espnormrest-probe-sum", "espnormrest",
        {"n": 3, "alpha": 1, "beta": 0.0}, 100_000, 3.0, "espnormrest_sum",
        probe=True)
    add("espnormrest-probe-closed", "espnormrest",
        {"n": 3, "alpha": 1, "beta": 0.0}, 100_000, 5.0, "espnormrest_closed",
        probe=True)

    return exps


# ---------------------------------------------------------------------------
# config parsing

def parse_config(obj: dict) -> list[ExperimentConfig]:
    """Validate a config dict and return the experiment list."""
    if not isinstance(obj, dict):
        raise ValueError("config must be a JSON object")
    version = obj.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ValueError(f"unsupported config version {version}")
    base_seed = int(obj.get("seed", DEFAULT_SEED))
    raw = obj.get("experiments")
    if not isinstance(raw, list) or not raw:
        raise ValueError("config must list at least one experiment")
    exps = []
    seen = set()
    for i, e in enumerate(raw):
        exp = ExperimentConfig(
            experiment_id=str(e["experiment_id"]),
            estimator_id=str(e["estimator_id"]),
            params=dict(e["params"]),
            samples=int(e["samples"]),
            seed=int(e.get("seed", mix64(base_seed, i + 1))),
            tolerance_sigmas=float(e.get("tolerance_sigmas", 3.0)),
            closed_form_id=e.get("closed_form_id"),
            lines_per_system=e.get("lines_per_system"),
            probe=bool(e.get("probe", False)),
        )
        if exp.samples < 1:
            raise ValueError(f"{exp.experiment_id}: samples must be >= 1")
        if exp.experiment_id in seen:
            raise ValueError(f"duplicate experiment_id {exp.experiment_id!r}")
        seen.add(exp.experiment_id)
        _validate_experiment(exp)
        exps.append(exp)
    return exps


def config_to_dict(exps: list[ExperimentConfig]) -> dict:
    """Serialize experiments back to the config schema."""
    out = []
    for e in exps:
        d = {
            "experiment_id": e.experiment_id,
            "estimator_id": e.estimator_id,
            "params": e.params,
            "samples": e.samples,
            "seed": e.seed,
            "tolerance_sigmas": e.tolerance_sigmas,
            "closed_form_id": e.closed_form_id,
            "probe": e.probe,
        }
        if e.lines_per_system is not None:
            d["lines_per_system"] = e.lines_per_system
        out.append(d)
    return {"version": CONFIG_VERSION, "experiments": out}


# ---------------------------------------------------------------------------
# verify / report

def run_verify(
    experiments: list[ExperimentConfig],
    samples_override: int | None = None,
    workers: int = 1,
    echo=None,
) -> Report:
    """Run every experiment; overall pass is the conjunction of non-probe rows."""
    start = time.perf_counter()
    rows = []
    for exp in experiments:
        try:
            comp = run_experiment(exp, samples_override=samples_override, workers=workers)
            row = _row_from_comparison(exp, comp)
        except (cxla.NumericError, ValueError) as err:
            row = _error_row(exp, err)
        rows.append(row)
        if echo is not None:
            flag = "probe" if row["probe"] else ("pass" if row["pass"] else "FAIL")
            if row["error"]:
                echo(f"[{flag}] {row['experiment_id']}: error {row['error']}")
            else:
                echo(
                    f"[{flag}] {row['experiment_id']}: mean={row['mean']:.6g} "
                    f"ref={row['reference_value']:.6g} z={row['z']:+.2f}"
                )
    overall = all(r["pass"] for r in rows if not r["probe"])
    return Report(
        version=VERSION,
        timestamp=datetime.now(timezone.utc).isoformat(),
        runtime_seconds=time.perf_counter() - start,
        overall_pass=overall,
        rows=rows,
    )


def report_csv(report: Report) -> str:
    """CSV summary; deterministic for a fixed config (no timestamps)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["experiment_id", "estimator_id", "params", "n_samples",
                "mean", "stderr", "closed_form", "z", "pass"])
    for r in report.rows:
        w.writerow([
            r["experiment_id"],
            r["estimator_id"],
            json.dumps(r["params"], sort_keys=True),
            r["n_samples"],
            repr(r["mean"]) if r["mean"] is not None else "",
            repr(r["stderr"]) if r["stderr"] is not None else "",
            repr(r["reference_value"]) if r["reference_value"] is not None else "",
            repr(r["z"]) if r["z"] is not None else "",
            r["pass"],
        ])
    return buf.getvalue()


def report_json(report: Report) -> dict:
    return {
        "version": report.version,
        "timestamp": report.timestamp,
        "runtime_seconds": report.runtime_seconds,
        "overall_pass": report.overall_pass,
        "comparisons": report.rows,
    }


def write_report(report: Report, out_dir: str) -> tuple[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, "verify-report.json")
    csv_path = os.path.join(out_dir, "verify-report.csv")
    with open(json_path, "w") as f:
        json.dump(report_json(report), f, indent=2)
        f.write("\n")
    with open(csv_path, "w") as f:
        f.write(report_csv(report))
    return json_path, csv_path


# ---------------------------------------------------------------------------
# selftest property suites

def _suite_penrose(seed: int) -> tuple[bool, str]:
    rng = RngStream(seed, 0)
    worst = 0.0
    for r, m in ((1, 2), (2, 3), (3, 3), (4, 6), (2, 5)):
        a = randgeom.gaussian_matrix(rng, r, m)
        p = cxla.pinv(a)
        scale = max(1.0, float(np.linalg.norm(a)))
        worst = max(
            worst,
            float(np.linalg.norm(a @ p @ a - a)) / scale,
            float(np.linalg.norm(p @ a @ p - p)) / max(1.0, float(np.linalg.norm(p))),
            float(np.linalg.norm((a @ p).conj().T - a @ p)),
            float(np.linalg.norm((p @ a).conj().T - p @ a)),
        )
    return worst < 1e-10, f"max Penrose residual {worst:.2e}"


def _suite_svd_reconstruction(seed: int) -> tuple[bool, str]:
    rng = RngStream(seed, 0)
    worst = 0.0
    for r, m in ((1, 1), (2, 3), (4, 4), (3, 6)):
        a = randgeom.gaussian_matrix(rng, r, m)
        f = cxla.svd(a)
        worst = max(
            worst,
            float(np.linalg.norm(f.reconstruct() - a)) / float(np.linalg.norm(a)),
            float(np.linalg.norm(f.u.conj().T @ f.u - np.eye(r))),
            float(np.linalg.norm(f.v.conj().T @ f.v - np.eye(m))),
        )
    return worst < 1e-10, f"max SVD residual {worst:.2e}"


def _suite_euler_identity(seed: int) -> tuple[bool, str]:
    rng = RngStream(seed, 0)
    worst = 0.0
    for _ in range(25):
        n = 2
        h = randgeom.gaussian_system(rng, n, (2, 3))
        x = randgeom.complex_gaussian_vector(rng, n + 1)
        lhs = bwspace.jacobian(h, x) @ x
        rhs = np.array(h.degrees) * bwspace.evaluate(h, x)
        worst = max(worst, float(np.linalg.norm(lhs - rhs) / max(1.0, np.linalg.norm(rhs))))
    return worst < 1e-10, f"max Euler residual {worst:.2e}"


def _suite_reproducing_kernel(seed: int) -> tuple[bool, str]:
    rng = RngStream(seed, 0)
    worst = 0.0
    for _ in range(25):
        d, n = 3, 2
        h = randgeom.gaussian_system(rng, n, (d,))
        x = randgeom.complex_gaussian_vector(rng, n + 1)
        k = bwspace.kernel_poly(x, d)
        lhs = bwspace.bw_inner(h, k)
        rhs = bwspace.evaluate(h, x)[0]
        bound = bwspace.bw_norm(h) * np.linalg.norm(x) ** d
        worst = max(worst, abs(lhs - rhs) / bound)
    return worst < 1e-10, f"max reproducing residual {worst:.2e}"


def _suite_bw_invariance(seed: int) -> tuple[bool, str]:
    rng = RngStream(seed, 0)
    worst = 0.0
    for _ in range(10):
        h = randgeom.gaussian_system(rng, 2, (2, 2))
        u = randgeom.haar_unitary(rng, 3)
        hr = randgeom.rotate_system(h, u)
        worst = max(worst, abs(bwspace.bw_norm(hr) - bwspace.bw_norm(h)) / bwspace.bw_norm(h))
    return worst < 1e-10, f"max norm drift {worst:.2e}"


def _suite_mu_invariance(seed: int) -> tuple[bool, str]:
    rng = RngStream(seed, 0)
    worst = 0.0
    for _ in range(10):
        h = randgeom.gaussian_system(rng, 2, (2,))
        pts = roots.sample_variety_points(h, rng, 1)
        x = pts[0]
        mu = conditioning.mu_frobenius(h, x).value
        u = randgeom.haar_unitary(rng, 3)
        mu_rot = conditioning.mu_frobenius(randgeom.rotate_system(h, u), u @ x).value
        worst = max(worst, abs(mu_rot - mu) / mu)
        scaled = bwspace.make_system(h.n, h.degrees, [3.7 * c for c in h.coords])
        worst = max(worst, abs(conditioning.mu_frobenius(scaled, x).value - mu) / mu)
    return worst < 1e-8, f"max mu drift {worst:.2e}"


def _suite_haar_unitarity(seed: int) -> tuple[bool, str]:
    rng = RngStream(seed, 0)
    worst = 0.0
    for dim in (2, 3, 5):
        u = randgeom.haar_unitary(rng, dim)
        worst = max(worst, float(np.linalg.norm(u.conj().T @ u - np.eye(dim))))
    return worst < 1e-10, f"max unitarity residual {worst:.2e}"


def _suite_roots(seed: int) -> tuple[bool, str]:
    rng = RngStream(seed, 0)
    for trial in range(20):
        n = 2 if trial % 2 else 1
        d = 1 + trial % 5
        h = randgeom.gaussian_system(rng, n, (d,))
        pts = roots.sample_variety_points(h, rng, 2)
        expected = d if n == 1 else 2 * d
        if len(pts) != expected:
            return False, f"expected {expected} points, got {len(pts)}"
        res = np.abs(bwspace.evaluate_at(h, pts)[:, 0])
        if np.any(res > 1e-8 * bwspace.bw_norm(h)):
            return False, f"membership residual {res.max():.2e}"
    # Vieta at d = 5
    g = roots.BinaryForm(5, randgeom.complex_gaussian_vector(rng, 6))
    pts = roots.binary_form_roots(g, rng)
    w = pts[:, 1] / pts[:, 0]
    b = g.coeffs
    ok_sum = abs(np.sum(w) + b[4] / b[5]) <= 1e-8 * max(1.0, abs(b[4] / b[5]))
    ok_prod = abs(np.prod(w) - (-1) ** 5 * b[0] / b[5]) <= 1e-8 * max(1.0, abs(b[0] / b[5]))
    if not (ok_sum and ok_prod):
        return False, "Vieta check failed"
    return True, "membership, degree and Vieta checks hold"


def _suite_gamma_telescoping(seed: int) -> tuple[bool, str]:
    worst = 0.0
    for n in range(1, 7):
        for r in range(1, n + 1):
            degrees = [2] * r
            c = formulas.exmualpha_constant(n, r, degrees, 2.0)
            w = formulas.invnor2mdet_value(r, n - r + 1)
            target = formulas.main_theorem_value(n, degrees)
            worst = max(worst, abs(c.value * w.value - target.value) / target.value)
    return worst < 1e-12, f"max telescoping residual {worst:.2e}"


def _suite_determinism(seed: int, workers: int = 2) -> tuple[bool, str]:
    runs = [
        montecarlo.estimate_pinv_moment(
            2, 4, 2.0, "frobenius",
            EstimatorConfig(samples=3 * montecarlo.BLOCK_SAMPLES, seed=seed, workers=w),
        )
        for w in (1, workers)
    ]
    same = runs[0].mean == runs[1].mean and runs[0].stderr == runs[1].stderr
    return same, f"means {runs[0].mean!r} vs {runs[1].mean!r}"


def _suite_gaussian_convention(seed: int, variance_scale: float = 1.0) -> tuple[bool, str]:
    rng = RngStream(seed, 0)
    z = randgeom.complex_gaussian_array(rng, (100_000,)) * math.sqrt(variance_scale)
    m2 = float(np.mean(np.abs(z) ** 2))
    se = float(np.std(np.abs(z) ** 2, ddof=1)) / math.sqrt(z.size)
    ok = abs(m2 - 1.0) <= 4 * se
    return ok, f"per-coordinate second moment {m2:.4f} (target 1, se {se:.1e})"


_SELFTEST_SUITES = [
    ("penrose-conditions", _suite_penrose),
    ("svd-reconstruction", _suite_svd_reconstruction),
    ("euler-identity", _suite_euler_identity),
    ("reproducing-kernel", _suite_reproducing_kernel),
    ("bw-unitary-invariance", _suite_bw_invariance),
    ("mu-invariance", _suite_mu_invariance),
    ("haar-unitarity", _suite_haar_unitarity),
    ("roots", _suite_roots),
    ("gamma-telescoping", _suite_gamma_telescoping),
    ("determinism-parallel", _suite_determinism),
    ("gaussian-convention", _suite_gaussian_convention),
]


def run_selftest(seed: int = DEFAULT_SEED, echo=print) -> bool:
    """Run every property suite; returns True iff all pass."""
    all_ok = True
    for index, (name, fn) in enumerate(_SELFTEST_SUITES):
        ok, detail = fn(mix64(seed, index + 1))
        all_ok &= ok
        if echo is not None:
            echo(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return all_ok


# ---------------------------------------------------------------------------
# formulas subcommand

def run_formulas(name: str, args: dict) -> dict:
    """Evaluate a named closed form and return a JSON-ready dict."""

    def fv(v: formulas.FormulaValue) -> dict:
        return {"value": v.value, "log_value": v.log_value,
                "formula_id": v.formula_id, "params": v.params}

    if name == "espnorm":
        return fv(formulas.espnorm_value(args["n"], args["alpha"]))
    if name == "espnormrest":
        forms = formulas.espnormrest_value(args["n"], int(args["alpha"]), args["beta"])
        return {
            "closed_form": fv(forms.closed_form),
            "sum_form": fv(forms.sum_form),
            "forms_agree": forms.forms_agree,
        }
    if name == "invnor2mdet":
        return fv(formulas.invnor2mdet_value(args["r"], args["k"]))
    if name == "main_theorem":
        return fv(formulas.main_theorem_value(args["n"], args["degrees"]))
    if name == "exmualpha":
        return fv(formulas.exmualpha_constant(args["n"], args["r"], args["degrees"], args["alpha"]))
    if name == "pinv_moment":
        return fv(formulas.pinv_moment_value(args["r"], args["m"]))
    if name == "volumes":
        vols = formulas.volumes(args["n"], int(args["k"]), args["l"], args["degrees"])
        return {
            "vol_projective": fv(vols.vol_projective),
            "vol_grassmann": fv(vols.vol_grassmann),
            "vol_Vh": fv(vols.vol_vh),
        }
    raise ValueError(f"unknown formula {name!r}")


# ---------------------------------------------------------------------------
# argument parsing / main

def _parse_degrees(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad degree list {text!r}") from exc


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="condmoments",
                                 description="Moment identities for random polynomial systems "
                                             "and matrices: closed forms and MC verification.")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("--config", help="JSON config path (default: bundled suite)")
    v.add_argument("--seed", type=int, help="override every experiment seed")
    v.add_argument("--samples", type=int, help="override every experiment's sample count")
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--out", default="report", help="output directory for JSON/CSV reports")

    e = sub.add_parser("estimate", help="run a single estimator")
    e.add_argument("--estimator", required=True, choices=_SINGLE_ESTIMATORS)
    e.add_argument("--samples", type=int, default=100_000)
    e.add_argument("--seed", type=int, default=None)
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--r", type=int)
    e.add_argument("--m", type=int)
    e.add_argument("--n", type=int)
    e.add_argument("--k", type=float)
    e.add_argument("--alpha", type=float, default=2.0)
    e.add_argument("--beta", type=float)
    e.add_argument("--norm", choices=("frobenius", "operator"), default="frobenius")
    e.add_argument("--degrees", type=_parse_degrees)
    e.add_argument("--relative", action="store_true")
    e.add_argument("--lines", type=int, default=8)

    f = sub.add_parser("formulas", help="print a closed-form value as JSON")
    f.add_argument("name", choices=("espnorm", "espnormrest", "invnor2mdet",
                                    "main_theorem", "exmualpha", "pinv_moment", "volumes"))
    f.add_argument("--n", type=int)
    f.add_argument("--r", type=int)
    f.add_argument("--m", type=int)
    f.add_argument("--k", type=float)
    f.add_argument("--l", type=int)
    f.add_argument("--alpha", type=float)
    f.add_argument("--beta", type=float)
    f.add_argument("--degrees", type=_parse_degrees)

    s = sub.add_parser("selftest", help="run the property suites")
    s.add_argument("--seed", type=int, default=None)
    return ap


def _env_seed() -> int | None:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        return None


def _resolve_seed(cli_seed: int | None) -> int:
    if cli_seed is not None:
        return cli_seed
    env = _env_seed()
    return env if env is not None else DEFAULT_SEED


def _cmd_verify(args) -> int:
    try:
        if args.config:
            with open(args.config) as fh:
                exps = parse_config(json.load(fh))
            if args.seed is not None:
                exps = [
                    dataclasses.replace(e, seed=mix64(args.seed, i + 1))
                    for i, e in enumerate(exps)
                ]
        else:
            exps = default_suite(_resolve_seed(args.seed))
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    report = run_verify(exps, samples_override=args.samples, workers=args.workers,
                        echo=print)
    json_path, csv_path = write_report(report, args.out)
    print(f"report: {json_path}")
    print(f"summary: {csv_path}")
    errored = any(r["error"] for r in report.rows)
    print(f"overall: {'PASS' if report.overall_pass else 'FAIL'}")
    return 0 if report.overall_pass and not errored else 1


def _cmd_estimate(args) -> int:
    seed = _resolve_seed(args.seed)
    cfg = EstimatorConfig(samples=args.samples, seed=seed, workers=args.workers,
                          lines_per_system=args.lines)
    try:
        if args.estimator == "pinv_moment":
            est = montecarlo.estimate_pinv_moment(args.r, args.m, args.alpha, args.norm, cfg)
        elif args.estimator == "detweighted_rect":
            est = montecarlo.estimate_detweighted_rect(args.r, args.n, args.alpha, args.norm, cfg)
        elif args.estimator == "detweighted_square":
            est = montecarlo.estimate_detweighted_square(args.r, args.k, args.alpha, args.norm, cfg)
        elif args.estimator == "espnorm":
            est = montecarlo.estimate_espnorm(args.n, args.alpha, cfg)
        elif args.estimator == "espnormrest":
            est = montecarlo.estimate_espnormrest(args.n, int(args.alpha), args.beta, cfg)
        else:
            est = montecarlo.estimate_poly_moment(
                args.n, args.degrees, args.alpha, args.relative, args.norm, cfg
            )
    except (TypeError, ValueError) as err:
        print(f"parameter error: {err}", file=sys.stderr)
        return 2
    except cxla.NumericError as err:
        print(f"estimator failure: {err}", file=sys.stderr)
        return 1
    print(json.dumps(est.__dict__, indent=2))
    return 0


def _cmd_formulas(args) -> int:
    params = {k: v for k, v in vars(args).items()
              if k in ("n", "r", "m", "k", "l", "alpha", "beta", "degrees") and v is not None}
    try:
        out = run_formulas(args.name, params)
    except (KeyError, TypeError) as err:
        print(f"missing parameter for {args.name}: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"domain error: {err}", file=sys.stderr)
        return 2
    print(json.dumps(out, indent=2))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "verify":
        return _cmd_verify(args)
    if args.command == "estimate":
        return _cmd_estimate(args)
    if args.command == "formulas":
        return _cmd_formulas(args)
    return 0 if run_selftest(_resolve_seed(args.seed)) else 1


if __name__ == "__main__":
    sys.exit(main())
