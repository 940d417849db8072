"""Condition numbers of a polynomial system at its zeros.

The Frobenius condition number of a system h at a unit-norm zero x is

    mu_F(h, x) = ||h|| * || Dh(x)^+ diag(sqrt(d_i)) ||_F,

with the Moore-Penrose pseudoinverse of the full r x (n+1) derivative; the
operator-norm variant replaces the Frobenius norm of the scaled
pseudoinverse by its largest singular value.  When Dh(x) has numerical rank
below r the value is +infinity.  Both are scale invariant in h, invariant
under a phase change of x, and invariant under simultaneous unitary
rotation of system and point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bwspace, cxla
from .bwspace import SystemCoords

# Zeros are accepted up to this residual relative to ||h||; root polishing
# delivers ~1e-12 so the slack decouples mu from the root finder.
ZERO_TOL = 1e-8

_UNIT_TOL = 1e-6


@dataclass(frozen=True)
class ConditionValue:
    """Condition number value; rank_deficient is true iff value is +inf."""

    value: float
    rank_deficient: bool


def _checked_zero(h: SystemCoords, x) -> tuple[np.ndarray, float]:
    v = np.asarray(x, dtype=np.complex128).ravel()
    if v.shape != (h.n + 1,):
        raise ValueError(f"point must have shape ({h.n + 1},), got {v.shape}")
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > _UNIT_TOL:
        raise ValueError(f"point must be unit norm, got ||x|| = {nrm}")
    v = v / nrm
    hnorm = bwspace.bw_norm(h)
    residual = np.linalg.norm(bwspace.evaluate(h, v))
    if residual > ZERO_TOL * hnorm:
        raise ValueError(
            f"point is not a zero of the system: |h(x)| = {residual:.3e} "
            f"> {ZERO_TOL:.0e} * ||h|| = {ZERO_TOL * hnorm:.3e}"
        )
    return v, hnorm


def _scaled_pinv(h: SystemCoords, x: np.ndarray) -> np.ndarray | None:
    """Dh(x)^+ diag(sqrt(d_i)), or None when Dh(x) is rank deficient."""
    jac = bwspace.jacobian(h, x)
    f = cxla.svd(jac)
    k = cxla.numerical_rank(f.singular_values)
    if k < h.r:
        return None
    pj = (f.v[:, :k] / f.singular_values[:k]) @ f.u[:, :k].conj().T
    return pj * np.sqrt(np.array(h.degrees, dtype=np.float64))[None, :]


def mu_frobenius(h: SystemCoords, x) -> ConditionValue:
    """Frobenius condition number at a unit-norm zero of h."""
    v, hnorm = _checked_zero(h, x)
    b = _scaled_pinv(h, v)
    if b is None:
        return ConditionValue(value=math.inf, rank_deficient=True)
    return ConditionValue(value=hnorm * cxla.frobenius_norm(b), rank_deficient=False)


def mu_operator(h: SystemCoords, x) -> ConditionValue:
    """Operator-norm condition number at a unit-norm zero of h.

    Satisfies mu_operator <= mu_frobenius <= sqrt(r) * mu_operator.
    """
    v, hnorm = _checked_zero(h, x)
    b = _scaled_pinv(h, v)
    if b is None:
        return ConditionValue(value=math.inf, rank_deficient=True)
    return ConditionValue(value=hnorm * cxla.operator_norm(b), rank_deficient=False)


def empirical_moment(
    h: SystemCoords,
    zeros,
    alpha: float,
    relative: bool = False,
    norm: str = "frobenius",
) -> float:
    """Mean of mu(h, x)^alpha over a finite list of zeros.

    With relative=True each term is divided by ||h||^alpha.  Any
    rank-deficient zero makes the result +inf.  Raises on an empty list.
    """
    zeros = list(zeros)
    if not zeros:
        raise ValueError("empirical_moment needs at least one zero")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    mu = {"frobenius": mu_frobenius, "operator": mu_operator}.get(norm)
    if mu is None:
        raise ValueError(f"unknown norm {norm!r}")
    hnorm = bwspace.bw_norm(h)
    total = 0.0
    for x in zeros:
        m = mu(h, x)
        if m.rank_deficient:
            return math.inf
        term = m.value**alpha
        if relative:
            term /= hnorm**alpha
        total += term
    return total / len(zeros)
