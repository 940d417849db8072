"""Monte Carlo estimators for the moment identities, with comparisons.

Sampling discipline: draws happen in fixed blocks of BLOCK_SAMPLES, one
counter-based substream per block (the polynomial estimator uses one
substream per system instead).  Values are reduced in block order with
pairwise summation, so a result is a pure function of
(estimator_id, params, seed, n_samples) regardless of the worker count.

Heavy tails: whenever the estimand's second moment is infinite or unproven
the estimator switches to median-of-means over MOM_BUCKETS contiguous
buckets and reports the bucket-mean spread (sample std of bucket means
divided by sqrt(buckets)) as the dispersion; z-scores against that
dispersion are approximate and the acceptance tolerances account for it.

Integrands that mix pseudoinverse norms with determinant weights are
assembled in log space and exponentiated against the running maximum, since
the determinant powers span hundreds of orders of magnitude.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import conditioning, randgeom, roots
from .cxla import NumericError
from .formulas import FormulaValue
from .randgeom import RngStream

BLOCK_SAMPLES = 4096
MOM_BUCKETS = 32
_NORMS = ("frobenius", "operator")

# failed root searches tolerated before the polynomial estimator aborts
_MAX_FAILURE_RATE = 1e-3


@dataclass(frozen=True)
class EstimatorConfig:
    """How much to sample and from where.

    samples counts matrices/vectors for the matrix-side estimators and
    systems for the polynomial estimator; lines_per_system only matters for
    the latter (and is ignored when n = 1, where the zero set is finite).
    """

    samples: int
    seed: int
    workers: int = 1
    lines_per_system: int = 8

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.lines_per_system < 1:
            raise ValueError(f"lines_per_system must be >= 1, got {self.lines_per_system}")


@dataclass(frozen=True)
class EstimateResult:
    """A reproducible Monte Carlo estimate."""

    mean: float
    stderr: float
    n_samples: int
    method: str
    seed: int
    estimator_id: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Comparison:
    """An estimate checked against a reference value.

    For closed-form references reference_stderr is 0 and the z-score is
    (mean - reference) / stderr; for estimated references the dispersion is
    combined in quadrature.  passed is |z| <= tolerance_sigmas.
    """

    estimate: EstimateResult
    closed_form: FormulaValue | None
    reference_value: float
    reference_stderr: float
    z_score: float
    passed: bool
    tolerance_sigmas: float
    lhs_scale: float = 1.0


def _check_norm(norm: str) -> str:
    if norm not in _NORMS:
        raise ValueError(f"norm must be one of {_NORMS}, got {norm!r}")
    return norm


def _blocks(n: int, block: int = BLOCK_SAMPLES):
    start = 0
    index = 0
    while start < n:
        count = min(block, n - start)
        yield index, count
        start += count
        index += 1


def _map_blocks(worker, tasks, workers: int) -> list[np.ndarray]:
    if workers <= 1:
        return [worker(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, tasks))


def _reduce_log_values(logv: np.ndarray, heavy: bool) -> tuple[float, float, str]:
    """Mean and dispersion from per-sample log-values.

    Plain path: arithmetic mean and standard error.  Heavy path:
    median-of-means over MOM_BUCKETS contiguous buckets.  All sums are
    pairwise (numpy reduction) over the fixed sample order.
    """
    n = logv.size
    m = float(np.max(logv))
    if math.isnan(m):
        return math.nan, math.nan, "plain-mean"
    if m == -math.inf:
        return 0.0, 0.0, "plain-mean"
    if m == math.inf:
        return math.inf, math.inf, "plain-mean"
    ex = np.exp(logv - m)
    if not heavy:
        mean_scaled = float(np.mean(ex))
        sd_scaled = float(np.std(ex, ddof=1)) if n > 1 else 0.0
        mean = math.exp(m + math.log(mean_scaled)) if mean_scaled > 0 else 0.0
        stderr = (
            math.exp(m + math.log(sd_scaled) - 0.5 * math.log(n)) if sd_scaled > 0 else 0.0
        )
        return mean, stderr, "plain-mean"
    buckets = np.array_split(ex, min(MOM_BUCKETS, n))
    bucket_means = np.array([float(np.mean(b)) for b in buckets])
    med_scaled = float(np.median(bucket_means))
    spread_scaled = float(np.std(bucket_means, ddof=1)) if len(bucket_means) > 1 else 0.0
    mean = math.exp(m + math.log(med_scaled)) if med_scaled > 0 else 0.0
    stderr = (
        math.exp(m + math.log(spread_scaled) - 0.5 * math.log(len(bucket_means)))
        if spread_scaled > 0
        else 0.0
    )
    return mean, stderr, f"median-of-means({len(bucket_means)})"


def _run_matrix_estimator(
    estimator_id: str,
    params: dict,
    cfg: EstimatorConfig,
    log_values_fn,
    heavy: bool,
) -> EstimateResult:
    def worker(task):
        index, count = task
        rng = RngStream(cfg.seed, index)
        return log_values_fn(rng, count)

    parts = _map_blocks(worker, list(_blocks(cfg.samples)), cfg.workers)
    logv = np.concatenate(parts)
    mean, stderr, method = _reduce_log_values(logv, heavy)
    return EstimateResult(
        mean=mean,
        stderr=stderr,
        n_samples=cfg.samples,
        method=method,
        seed=cfg.seed,
        estimator_id=estimator_id,
        params=params,
    )


def _log_pinv_norm(s: np.ndarray, norm: str) -> np.ndarray:
    """log of the pseudoinverse norm from batched singular values (full rank)."""
    with np.errstate(divide="ignore"):
        if norm == "frobenius":
            return 0.5 * np.log(np.sum(s**-2.0, axis=1))
        return -np.log(s[:, -1])


def estimate_pinv_moment(
    r: int, m: int, alpha: float, norm: str, cfg: EstimatorConfig
) -> EstimateResult:
    """MC mean of ||M^+||^alpha over standard Gaussian r x m complex matrices.

    The mean is finite iff alpha < 2(m - r + 1); outside that range the
    estimator refuses to run.  The variance is finite iff alpha < m - r + 1,
    otherwise median-of-means is used.
    """
    _check_norm(norm)
    if not (1 <= r <= m):
        raise ValueError(f"need 1 <= r <= m, got r = {r}, m = {m}")
    if not (0 < alpha < 2 * (m - r + 1)):
        raise ValueError(
            f"alpha must satisfy 0 < alpha < 2(m-r+1) = {2 * (m - r + 1)} "
            f"for a finite mean, got {alpha}"
        )
    heavy = not (alpha < m - r + 1)

    def log_values(rng: RngStream, count: int) -> np.ndarray:
        a = randgeom.complex_gaussian_array(rng, (count, r, m))
        s = np.linalg.svd(a, compute_uv=False)
        return alpha * _log_pinv_norm(s, norm)

    params = {"r": r, "m": m, "alpha": alpha, "norm": norm}
    return _run_matrix_estimator("pinv_moment", params, cfg, log_values, heavy)


def estimate_detweighted_rect(
    r: int, n: int, alpha: float, norm: str, cfg: EstimatorConfig
) -> EstimateResult:
    """MC mean of ||A^+||^alpha |det A A*| over Gaussian r x n matrices."""
    _check_norm(norm)
    if not (1 <= r <= n):
        raise ValueError(f"need 1 <= r <= n, got r = {r}, n = {n}")
    if not (0 < alpha < 2 * (n - r + 2)):
        raise ValueError(
            f"alpha must satisfy 0 < alpha < 2(n-r+2) = {2 * (n - r + 2)} "
            f"for a finite mean, got {alpha}"
        )
    heavy = not (alpha < n - r + 2)

    def log_values(rng: RngStream, count: int) -> np.ndarray:
        a = randgeom.complex_gaussian_array(rng, (count, r, n))
        s = np.linalg.svd(a, compute_uv=False)
        with np.errstate(divide="ignore"):
            log_det = 2.0 * np.sum(np.log(s), axis=1)
        return alpha * _log_pinv_norm(s, norm) + log_det

    params = {"r": r, "n": n, "alpha": alpha, "norm": norm}
    return _run_matrix_estimator("detweighted_rect", params, cfg, log_values, heavy)


def estimate_detweighted_square(
    r: int, k: float, alpha: float, norm: str, cfg: EstimatorConfig
) -> EstimateResult:
    """MC mean of ||B^-1||^alpha |det B|^(2k) over Gaussian r x r matrices.

    k is the determinant half-exponent: the absolute-moment identity uses
    k = n - r + 1 and the kernel-variety identity uses k = n - r.
    """
    _check_norm(norm)
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    if not (0 < alpha < 4 * k + 2):
        raise ValueError(
            f"alpha must satisfy 0 < alpha < 4k+2 = {4 * k + 2} for a finite mean, got {alpha}"
        )
    heavy = not (alpha < 2 * k + 1)

    def log_values(rng: RngStream, count: int) -> np.ndarray:
        a = randgeom.complex_gaussian_array(rng, (count, r, r))
        s = np.linalg.svd(a, compute_uv=False)
        with np.errstate(divide="ignore"):
            log_det = 2.0 * k * np.sum(np.log(s), axis=1)
        return alpha * _log_pinv_norm(s, norm) + log_det

    params = {"r": r, "k": k, "alpha": alpha, "norm": norm}
    return _run_matrix_estimator("detweighted_square", params, cfg, log_values, heavy)


def estimate_espnorm(n: int, alpha: float, cfg: EstimatorConfig) -> EstimateResult:
    """MC mean of ||v||^alpha over standard Gaussian vectors in C^n."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if alpha <= -2 * n:
        raise ValueError(f"alpha must exceed -2n = {-2 * n} for a finite mean, got {alpha}")
    heavy = not (2 * alpha > -2 * n)

    def log_values(rng: RngStream, count: int) -> np.ndarray:
        v = randgeom.complex_gaussian_array(rng, (count, n))
        with np.errstate(divide="ignore"):
            return alpha * np.log(np.linalg.norm(v, axis=1))

    params = {"n": n, "alpha": alpha}
    return _run_matrix_estimator("espnorm", params, cfg, log_values, heavy)


def estimate_espnormrest(
    n: int, alpha: int, beta: float, cfg: EstimatorConfig
) -> EstimateResult:
    """MC mean of ||v||^(2 alpha) ||P v||^beta, P dropping the last coordinate."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if alpha < 0 or int(alpha) != alpha:
        raise ValueError(f"alpha must be a nonnegative integer, got {alpha}")
    if 2 * alpha + beta <= 1 - 2 * n:
        raise ValueError(f"need 2*alpha + beta > 1 - 2n = {1 - 2 * n}")
    heavy = not (4 * alpha + 2 * beta > 1 - 2 * n)

    def log_values(rng: RngStream, count: int) -> np.ndarray:
        v = randgeom.complex_gaussian_array(rng, (count, n))
        with np.errstate(divide="ignore"):
            return 2.0 * alpha * np.log(np.linalg.norm(v, axis=1)) + beta * np.log(
                np.linalg.norm(v[:, : n - 1], axis=1)
            )

    params = {"n": n, "alpha": int(alpha), "beta": beta}
    return _run_matrix_estimator("espnormrest", params, cfg, log_values, heavy)


def _poly_system_log_value(
    seed: int,
    system_index: int,
    n: int,
    degrees: tuple[int, ...],
    alpha: float,
    relative: bool,
    norm: str,
    lines: int,
) -> float:
    rng = RngStream(seed, system_index)
    h = randgeom.gaussian_system(rng, n, degrees)
    pts = roots.sample_variety_points(h, rng, lines)
    # batched single-equation fast path; for r = 1 the Frobenius and operator
    # values coincide and mu = ||h|| sqrt(d) / ||Dh(x)||, which agrees with
    # conditioning.empirical_moment (pinned by a consistency test)
    from . import bwspace

    hnorm = bwspace.bw_norm(h)
    residuals = np.abs(bwspace.evaluate_at(h, pts)[:, 0])
    if np.any(residuals > conditioning.ZERO_TOL * hnorm):
        raise ValueError("sampled point failed the zero-residual precondition")
    jac = bwspace.jacobian_at(h, pts)[:, 0, :]
    sigma = np.linalg.norm(jac, axis=1)
    with np.errstate(divide="ignore"):
        mu = hnorm * math.sqrt(degrees[0]) / sigma
    if relative:
        mu = mu / hnorm
    value = float(np.mean(mu**alpha))
    return math.log(value) if value > 0 else -math.inf


def estimate_poly_moment(
    n: int,
    degrees,
    alpha: float,
    relative: bool,
    norm: str,
    cfg: EstimatorConfig,
) -> EstimateResult:
    """MC mean, over Gaussian systems, of the zero-set average of mu^alpha.

    Outer Monte Carlo over cfg.samples Gaussian systems; for each system the
    zero set is sampled by uniform line sections (lines_per_system lines,
    every intersection point weighted equally) and mu^alpha is averaged over
    the sampled points, divided by ||h||^alpha when relative.  Supported for
    single-equation systems (any n >= 1, which includes the determined
    n = 1 slice).
    """
    _check_norm(norm)
    from . import bwspace

    degs = bwspace.check_degrees(n, degrees)
    if len(degs) != 1:
        raise ValueError(
            f"polynomial sampling supports a single equation (r = 1), got r = {len(degs)}"
        )
    r = len(degs)
    if not (0 < alpha < 2 * (n - r + 2)):
        raise ValueError(
            f"alpha must satisfy 0 < alpha < 2(n-r+2) = {2 * (n - r + 2)}, got {alpha}"
        )
    heavy = not (alpha < n - r + 2)
    lines = 1 if n == 1 else cfg.lines_per_system

    def worker(task) -> np.ndarray:
        start, stop = task
        vals = np.empty(stop - start)
        for j in range(start, stop):
            try:
                vals[j - start] = _poly_system_log_value(
                    cfg.seed, j, n, degs, alpha, relative, norm, lines
                )
            except roots.RootFindingError:
                vals[j - start] = math.nan
        return vals

    chunk = 256
    tasks = [(s, min(s + chunk, cfg.samples)) for s in range(0, cfg.samples, chunk)]
    parts = _map_blocks(worker, tasks, cfg.workers)
    logv = np.concatenate(parts)

    failed = int(np.count_nonzero(np.isnan(logv)))
    total_lines = cfg.samples * lines
    if failed > _MAX_FAILURE_RATE * total_lines:
        raise NumericError(
            f"root finding failed for {failed} of {cfg.samples} systems "
            f"({total_lines} lines); rate exceeds {_MAX_FAILURE_RATE:.1%}"
        )
    if failed:
        logv = logv[~np.isnan(logv)]

    mean, stderr, method = _reduce_log_values(logv, heavy)
    params = {
        "n": n,
        "degrees": list(degs),
        "alpha": alpha,
        "relative": relative,
        "norm": norm,
        "systems": cfg.samples,
        "lines_per_system": lines,
    }
    return EstimateResult(
        mean=mean,
        stderr=stderr,
        n_samples=int(logv.size),
        method=method,
        seed=cfg.seed,
        estimator_id="poly_moment",
        params=params,
    )


def _z_score(delta: float, sigma: float, scale: float) -> float:
    floor = 1e-13 * max(1.0, abs(scale))
    if sigma == 0.0 and abs(delta) > floor:
        return math.inf if delta > 0 else -math.inf
    return delta / max(sigma, floor)


def compare(est: EstimateResult, cf: FormulaValue, tolerance_sigmas: float) -> Comparison:
    """z-score of an estimate against a closed-form value."""
    if tolerance_sigmas <= 0:
        raise ValueError("tolerance_sigmas must be positive")
    z = _z_score(est.mean - cf.value, est.stderr, cf.value)
    return Comparison(
        estimate=est,
        closed_form=cf,
        reference_value=cf.value,
        reference_stderr=0.0,
        z_score=z,
        passed=bool(abs(z) <= tolerance_sigmas),
        tolerance_sigmas=tolerance_sigmas,
    )


def compare_pair(
    lhs: EstimateResult,
    rhs: EstimateResult,
    tolerance_sigmas: float,
    lhs_scale: float = 1.0,
    rhs_scale: float = 1.0,
) -> Comparison:
    """z-score of two independent estimates with dispersions combined in quadrature.

    Checks lhs_scale * lhs against rhs_scale * rhs.
    """
    if tolerance_sigmas <= 0:
        raise ValueError("tolerance_sigmas must be positive")
    ref = rhs_scale * rhs.mean
    sigma = math.hypot(lhs_scale * lhs.stderr, rhs_scale * rhs.stderr)
    z = _z_score(lhs_scale * lhs.mean - ref, sigma, ref)
    return Comparison(
        estimate=lhs,
        closed_form=None,
        reference_value=ref,
        reference_stderr=rhs_scale * rhs.stderr,
        z_score=z,
        passed=bool(abs(z) <= tolerance_sigmas),
        tolerance_sigmas=tolerance_sigmas,
        lhs_scale=lhs_scale,
    )
