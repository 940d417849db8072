"""Closed-form Gamma-function identities for the moment computations.

Every formula is evaluated in log space with the C library log-Gamma, so
ratios whose factors overflow double range (already at moderate matrix
sizes) stay finite.  Tests cross-check all integer-argument cases against
exact factorial arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class FormulaValue:
    """A positive closed-form value carried together with its log."""

    value: float
    log_value: float
    formula_id: str
    params: dict = field(default_factory=dict)


def _from_log(log_value: float, formula_id: str, params: dict) -> FormulaValue:
    try:
        value = math.exp(log_value)
    except OverflowError:
        value = math.inf
    return FormulaValue(value=value, log_value=log_value, formula_id=formula_id, params=params)


def _lgamma(x: float, what: str) -> float:
    if x <= 0.0:
        raise ValueError(f"{what}: Gamma argument {x} is at or beyond a pole")
    return math.lgamma(x)


def espnorm_value(n: int, alpha: float) -> FormulaValue:
    """Moment of the norm of a standard Gaussian vector in C^n.

    E ||v||^alpha = Gamma(n + alpha/2) / Gamma(n), for alpha > -2n.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if alpha <= -2 * n:
        raise ValueError(f"alpha must exceed -2n = {-2 * n}, got {alpha}")
    log_value = _lgamma(n + alpha / 2.0, "espnorm") - _lgamma(float(n), "espnorm")
    return _from_log(log_value, "espnorm_value", {"n": n, "alpha": alpha})


@dataclass(frozen=True)
class EspnormrestForms:
    """Both published forms of the projected-norm moment.

    closed_form is Gamma(n + alpha + beta/2) / (n Gamma(n - 1)); sum_form is
    the binomial sum sum_i Gamma(alpha+1)/Gamma(alpha-i+1) *
    Gamma(n-1+alpha+beta/2-i)/Gamma(n-1).  They agree exactly at beta = 2
    (the only case the downstream moments use) and genuinely disagree for
    other beta; forms_agree records which case a parameter set falls in.
    """

    closed_form: FormulaValue
    sum_form: FormulaValue
    forms_agree: bool


def espnormrest_value(n: int, alpha: int, beta: float) -> EspnormrestForms:
    """E( ||v||^(2 alpha) ||P v||^beta ) for v standard Gaussian in C^n,

    where P projects onto the first n - 1 coordinates.  alpha must be a
    nonnegative integer; the parameters must satisfy 2 alpha + beta > 1 - 2n.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if alpha < 0 or int(alpha) != alpha:
        raise ValueError(f"alpha must be a nonnegative integer, got {alpha}")
    alpha = int(alpha)
    if 2 * alpha + beta <= 1 - 2 * n:
        raise ValueError(f"need 2*alpha + beta > 1 - 2n = {1 - 2 * n}")

    params = {"n": n, "alpha": alpha, "beta": beta}
    log_closed = (
        _lgamma(n + alpha + beta / 2.0, "espnormrest closed form")
        - math.log(n)
        - _lgamma(n - 1.0, "espnormrest closed form")
    )
    closed = _from_log(log_closed, "espnormrest_closed", params)

    log_base = _lgamma(n - 1.0, "espnormrest sum form")
    total = 0.0
    for i in range(alpha + 1):
        log_term = (
            _lgamma(alpha + 1.0, "espnormrest sum form")
            - _lgamma(alpha - i + 1.0, "espnormrest sum form")
            + _lgamma(n - 1.0 + alpha + beta / 2.0 - i, "espnormrest sum form")
            - log_base
        )
        total += math.exp(log_term)
    sum_form = FormulaValue(
        value=total, log_value=math.log(total), formula_id="espnormrest_sum", params=params
    )
    agree = abs(closed.value - sum_form.value) <= 1e-12 * abs(closed.value)
    return EspnormrestForms(closed_form=closed, sum_form=sum_form, forms_agree=agree)


def invnor2mdet_value(r: int, k: float) -> FormulaValue:
    """E( ||B^-1||_F^2 |det B|^(2k) ) for B standard Gaussian in C^(r x r):

    (r / k) * prod_{i=1..r} Gamma(k + i) / Gamma(i).
    """
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    log_value = math.log(r) - math.log(k)
    for i in range(1, r + 1):
        log_value += _lgamma(k + i, "invnor2mdet") - _lgamma(float(i), "invnor2mdet")
    return _from_log(log_value, "invnor2mdet_value", {"r": r, "k": k})


def main_theorem_value(n: int, degrees) -> FormulaValue:
    """Expected second Frobenius moment: (N - 1) r / (n - r + 1),

    with N the complex dimension of the system space.  At n = r this is the
    determined-case value (N - 1) r.
    """
    from . import bwspace

    degs = bwspace.check_degrees(n, degrees)
    r = len(degs)
    n_dim = bwspace.dim_space(n, degs)
    value = (n_dim - 1) * r / (n - r + 1)
    return FormulaValue(
        value=value,
        log_value=math.log(value),
        formula_id="main_theorem_value",
        params={"n": n, "degrees": list(degs), "N": n_dim},
    )


def exmualpha_constant(n: int, r: int, degrees, alpha: float) -> FormulaValue:
    """Constant relating the alpha-th absolute moment to the square-matrix

    determinant-weighted expectation:

        Gamma(N) / Gamma(N - alpha/2) * prod_{i=1..n-r+1} Gamma(i)/Gamma(r+i),

    valid for 0 < alpha < 2 (n - r + 2) and alpha/2 < N.
    """
    from . import bwspace

    degs = bwspace.check_degrees(n, degrees)
    if r != len(degs):
        raise ValueError(f"r = {r} does not match len(degrees) = {len(degs)}")
    if not (0 < alpha < 2 * (n - r + 2)):
        raise ValueError(
            f"alpha must satisfy 0 < alpha < 2(n-r+2) = {2 * (n - r + 2)}, got {alpha}"
        )
    n_dim = bwspace.dim_space(n, degs)
    if alpha / 2.0 >= n_dim:
        raise ValueError(f"alpha/2 must be below N = {n_dim}")
    log_value = _lgamma(float(n_dim), "exmualpha") - _lgamma(n_dim - alpha / 2.0, "exmualpha")
    for i in range(1, n - r + 2):
        log_value += _lgamma(float(i), "exmualpha") - _lgamma(float(r + i), "exmualpha")
    return _from_log(
        log_value,
        "exmualpha_constant",
        {"n": n, "r": r, "degrees": list(degs), "alpha": alpha, "N": n_dim},
    )


def pinv_moment_value(r: int, m: int) -> FormulaValue:
    """E ||M^+||_F^2 over standard Gaussian r x m complex matrices: r / (m - r)."""
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    if m <= r:
        raise ValueError(f"need m > r for a finite moment, got r = {r}, m = {m}")
    value = r / (m - r)
    return FormulaValue(
        value=value,
        log_value=math.log(value),
        formula_id="pinv_moment_value",
        params={"r": r, "m": m},
    )


@dataclass(frozen=True)
class Volumes:
    """Volumes of projective space, a Grassmannian, and a zero variety."""

    vol_projective: FormulaValue
    vol_grassmann: FormulaValue
    vol_vh: FormulaValue


def volumes(n: int, k: int, l: int, degrees) -> Volumes:
    """vol P^n = pi^n / Gamma(n+1); vol G(k, l) = pi^(k(l-k)) prod Gamma(i)/Gamma(k+i);

    vol V_h = D pi^(n-r) / Gamma(n-r+1) with D the product of the degrees.
    """
    from . import bwspace

    degs = bwspace.check_degrees(n, degrees)
    r = len(degs)
    if not (1 <= k < l):
        raise ValueError(f"need 1 <= k < l, got k = {k}, l = {l}")

    log_proj = n * math.log(math.pi) - _lgamma(n + 1.0, "vol_projective")
    log_grass = k * (l - k) * math.log(math.pi)
    for i in range(1, k + 1):
        log_grass += _lgamma(float(i), "vol_grassmann") - _lgamma(float(k + i), "vol_grassmann")
    log_vh = (
        math.log(bwspace.bezout(degs))
        + (n - r) * math.log(math.pi)
        - _lgamma(n - r + 1.0, "vol_vh")
    )
    return Volumes(
        vol_projective=_from_log(log_proj, "vol_projective", {"n": n}),
        vol_grassmann=_from_log(log_grass, "vol_grassmann", {"k": k, "l": l}),
        vol_vh=_from_log(log_vh, "vol_vh", {"n": n, "degrees": list(degs)}),
    )
