"""Zero-set sampling for single-equation systems.

Two building blocks: restriction of a hypersurface equation to a projective
line (giving a binary form), and simultaneous root finding of binary forms
with the Aberth-Ehrlich iteration.  Together they sample the zero set of a
single equation uniformly: every uniform line meets a degree-d hypersurface
in exactly d points (with multiplicity), and in complex projective space
the tangent space of a hypersurface at any smooth point is a complex
hyperplane, all of which are unitarily equivalent, so the line-section
point process has constant density with respect to the volume measure of
the zero set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bwspace, randgeom
from .bwspace import SystemCoords
from .cxla import NumericError
from .randgeom import RngStream

ABERTH_MAX_ITER = 200
ABERTH_TOL = 1e-12
_RESIDUAL_TOL = 1e-9


class RootFindingError(NumericError):
    """The root iteration failed to reach the target residual."""


@dataclass(frozen=True)
class BinaryForm:
    """g(s, t) = sum_k coeffs[k] * s^(d-k) * t^k with complex coefficients."""

    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (self.degree + 1,):
            raise ValueError(
                f"degree-{self.degree} form needs {self.degree + 1} coefficients, got {c.shape}"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("binary form coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)


def binary_form_value(g: BinaryForm, s: complex, t: complex) -> complex:
    d = g.degree
    powers_s = np.power(s, np.arange(d, -1, -1, dtype=np.float64))
    powers_t = np.power(t, np.arange(0, d + 1, dtype=np.float64))
    return complex(np.dot(g.coeffs, powers_s * powers_t))


def _binary_form_values(g: BinaryForm, st: np.ndarray) -> np.ndarray:
    """g at each row (s, t) of an (m, 2) array."""
    d = g.degree
    powers_s = st[:, 0:1] ** np.arange(d, -1, -1)
    powers_t = st[:, 1:2] ** np.arange(0, d + 1)
    return (powers_s * powers_t) @ g.coeffs


def restrict_to_line(h: SystemCoords, u, v) -> BinaryForm:
    """Binary form g(s, t) = h(s u + t v) for a single-equation system.

    (u, v) must be orthonormal.  Coefficients are recovered exactly by
    discrete Fourier interpolation: the values g(1, w^k) at the (d+1)-th
    roots of unity w^k determine the d+1 coefficients through one inverse
    DFT.  A pointwise residual check guards the construction.
    """
    if h.r != 1:
        raise ValueError(f"restriction needs a single-equation system, got r = {h.r}")
    uu = np.asarray(u, dtype=np.complex128).ravel()
    vv = np.asarray(v, dtype=np.complex128).ravel()
    if uu.shape != (h.n + 1,) or vv.shape != (h.n + 1,):
        raise ValueError("line vectors must live in C^(n+1)")
    gram = np.array(
        [
            [np.vdot(uu, uu), np.vdot(uu, vv)],
            [np.vdot(vv, uu), np.vdot(vv, vv)],
        ]
    )
    if np.linalg.norm(gram - np.eye(2)) > 1e-8:
        raise ValueError("line vectors must be orthonormal")

    d = h.degrees[0]
    omega = np.exp(2j * np.pi * np.arange(d + 1) / (d + 1))

    # fixed deterministic spot-check chart points, normalized to unit (s, t)
    checks = np.array(
        [[0.6, 0.8 + 0.06j], [1.0, -0.1j], [-0.28, 0.96 - 0.028j]], dtype=np.complex128
    )
    checks /= np.linalg.norm(checks, axis=1)[:, None]

    nodes = np.concatenate([np.stack([np.ones(d + 1, dtype=np.complex128), omega], axis=1), checks])
    points = nodes[:, 0:1] * uu[None, :] + nodes[:, 1:2] * vv[None, :]
    values = bwspace.evaluate_at(h, points)[:, 0]
    coeffs = np.fft.fft(values[: d + 1]) / (d + 1)
    g = BinaryForm(degree=d, coeffs=coeffs)

    hnorm = bwspace.bw_norm(h)
    residuals = np.abs(_binary_form_values(g, checks) - values[d + 1 :])
    if np.any(residuals > _RESIDUAL_TOL * hnorm):
        raise NumericError("line restriction failed its residual check")
    return g


def _horner_pair(coeffs_desc: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate a polynomial and its derivative at each z (coefficients descending)."""
    p = np.zeros_like(z)
    dp = np.zeros_like(z)
    for c in coeffs_desc:
        dp = dp * z + p
        p = p * z + c
    return p, dp


def _aberth(coeffs_asc: np.ndarray, rng: RngStream) -> np.ndarray:
    """All roots of a dense univariate polynomial, simultaneous iteration.

    coeffs_asc[k] is the coefficient of w^k and the leading coefficient
    must be nonzero.  Convergence target: homogeneous residual
    |p(z)| / (1 + |z|^2)^(d/2) below ABERTH_TOL * max|coeff| at every root.
    """
    d = len(coeffs_asc) - 1
    scale = np.max(np.abs(coeffs_asc))
    lead = coeffs_asc[-1]
    inner = np.abs(coeffs_asc[:-1]).max()
    if inner == 0.0:
        return np.zeros(d, dtype=np.complex128)  # p = c * w^d
    radius = (inner / abs(lead)) ** (1.0 / d) * (1.0 + 1e-3)
    phases = rng.uniforms(d)
    z = radius * np.exp(2j * np.pi * phases)

    desc = coeffs_asc[::-1]
    for _ in range(ABERTH_MAX_ITER):
        p, dp = _horner_pair(desc, z)
        if np.all(np.abs(p) <= ABERTH_TOL * scale * (1.0 + np.abs(z) ** 2) ** (d / 2)):
            return z
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = p / dp
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv_diff = 1.0 / diff
            np.fill_diagonal(inv_diff, 0.0)
            corr = newton / (1.0 - newton * inv_diff.sum(axis=1))
        bad = ~np.isfinite(corr)
        if np.any(bad):
            # stalled iterate (derivative zero or colliding guesses): nudge
            corr = np.where(bad, 0.1 * radius * np.exp(2j * np.pi * rng.uniforms(d)), corr)
        z = z - corr
    p, _ = _horner_pair(desc, z)
    if np.all(np.abs(p) <= ABERTH_TOL * scale * (1.0 + np.abs(z) ** 2) ** (d / 2)):
        return z
    raise RootFindingError(f"Aberth iteration did not converge after {ABERTH_MAX_ITER} steps")


def _compose_unitary(g: BinaryForm, q: np.ndarray) -> np.ndarray:
    """Coefficients (ascending in t') of g(q @ (s', t'))."""
    d = g.degree
    s_form = np.array([q[0, 0], q[0, 1]])  # s = q00 s' + q01 t'
    t_form = np.array([q[1, 0], q[1, 1]])
    out = np.zeros(d + 1, dtype=np.complex128)
    s_pows = [np.array([1.0 + 0j])]
    t_pows = [np.array([1.0 + 0j])]
    for _ in range(d):
        s_pows.append(np.convolve(s_pows[-1], s_form))
        t_pows.append(np.convolve(t_pows[-1], t_form))
    for k in range(d + 1):
        out += g.coeffs[k] * np.convolve(s_pows[d - k], t_pows[k])
    return out


def binary_form_roots(g: BinaryForm, rng: RngStream) -> np.ndarray:
    """The d projective roots of a binary form, as unit vectors in C^2.

    A random Haar unitary change of chart makes a root at the chart
    boundary almost surely absent; the rotated form is dehomogenized,
    solved by Aberth-Ehrlich, and the roots are mapped back.  Clustered
    (multiple) roots are returned as nearby simple roots.  One chart
    resample is attempted before giving up.
    """
    if g.degree < 1:
        raise ValueError("root extraction needs degree >= 1")
    if np.all(g.coeffs == 0):
        raise ValueError("cannot extract roots of the zero form")
    scale = float(np.max(np.abs(g.coeffs)))
    last_err: RootFindingError | None = None
    for _ in range(2):
        q = randgeom.haar_unitary(rng, 2)
        rotated = _compose_unitary(g, q)
        if abs(rotated[-1]) < 1e-14 * scale:
            # leading coefficient vanished: the chart still contains a root
            # at infinity, resample
            last_err = RootFindingError("degenerate chart rotation")
            continue
        try:
            w = _aberth(rotated, rng)
        except RootFindingError as exc:
            last_err = exc
            continue
        chart = np.stack([np.ones_like(w), w], axis=1)
        chart /= np.linalg.norm(chart, axis=1)[:, None]
        pts = chart @ q.T
        residuals = np.abs(_binary_form_values(g, pts))
        if np.all(residuals < _RESIDUAL_TOL * scale):
            return pts
        last_err = RootFindingError(
            f"root residual {residuals.max():.3e} above {_RESIDUAL_TOL:.0e} * max|coeff|"
        )
    raise last_err if last_err is not None else RootFindingError("root finding failed")


def _bconv_pair(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise polynomial coefficient convolution of (L, la) with (L, lb)."""
    la, lb = a.shape[1], b.shape[1]
    out = np.zeros((a.shape[0], la + lb - 1), dtype=np.complex128)
    for j in range(lb):
        out[:, j : j + la] += a * b[:, j : j + 1]
    return out


def _compose_unitary_batch(coeffs: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise chart rotation: coefficients of g_l(q_l @ (s', t'))."""
    d = coeffs.shape[1] - 1
    s_pows = [np.ones((coeffs.shape[0], 1), dtype=np.complex128)]
    t_pows = [np.ones((coeffs.shape[0], 1), dtype=np.complex128)]
    for _ in range(d):
        s_pows.append(_bconv_pair(s_pows[-1], q[:, 0, :]))
        t_pows.append(_bconv_pair(t_pows[-1], q[:, 1, :]))
    out = np.zeros_like(coeffs)
    for k in range(d + 1):
        out += coeffs[:, k : k + 1] * _bconv_pair(s_pows[d - k], t_pows[k])
    return out


def _aberth_batch(coeffs_asc: np.ndarray, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise Aberth-Ehrlich; returns (roots (L, d), failed-row mask)."""
    n_rows, dp1 = coeffs_asc.shape
    d = dp1 - 1
    scale = np.max(np.abs(coeffs_asc), axis=1)
    inner = np.max(np.abs(coeffs_asc[:, :-1]), axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        radius = np.where(
            inner > 0, (inner / np.abs(coeffs_asc[:, -1])) ** (1.0 / d) * (1.0 + 1e-3), 0.0
        )
    z = radius[:, None] * np.exp(2j * np.pi * rng.uniforms((n_rows, d)))
    desc = coeffs_asc[:, ::-1]
    done = inner == 0.0  # pure-leading rows: all roots at the origin, exact

    for _ in range(ABERTH_MAX_ITER):
        p = np.zeros_like(z)
        dp = np.zeros_like(z)
        for col in range(dp1):
            dp = dp * z + p
            p = p * z + desc[:, col : col + 1]
        residual_ok = np.abs(p) <= ABERTH_TOL * scale[:, None] * (1.0 + np.abs(z) ** 2) ** (d / 2)
        done |= residual_ok.all(axis=1)
        if done.all():
            return z, ~done
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = p / dp
            diff = z[:, :, None] - z[:, None, :]
            eye = np.eye(d, dtype=bool)
            diff[:, eye] = 1.0
            inv_diff = 1.0 / diff
            inv_diff[:, eye] = 0.0
            corr = newton / (1.0 - newton * inv_diff.sum(axis=2))
        corr[done] = 0.0
        bad = ~np.isfinite(corr)
        if np.any(bad):
            corr[bad] = 0.1 * np.repeat(radius[:, None], d, axis=1)[bad] * np.exp(
                2j * np.pi * rng.uniforms(int(bad.sum()))
            )
        z = z - corr
    return z, ~done


def sample_variety_points(h: SystemCoords, rng: RngStream, lines: int) -> np.ndarray:
    """Zero-set points of a single-equation system via uniform line sections.

    Returns the stacked intersection points of `lines` independent uniform
    projective lines with the zero set, embedded back in C^(n+1) as unit
    vectors; each line contributes exactly d points counted with
    multiplicity.  For n = 1 the line is the whole projective space and the
    d roots are returned once.

    All lines are processed as one batch (lines drawn first, then charts,
    then the root iteration); a line whose batched root search fails falls
    back to the scalar path with a fresh chart before the error propagates.
    """
    if h.r != 1:
        raise ValueError(f"variety sampling needs r = 1, got r = {h.r}")
    if all(np.all(c == 0) for c in h.coords):
        raise ValueError("cannot sample the zero set of the zero system")
    if lines < 1:
        raise ValueError(f"lines must be >= 1, got {lines}")

    if h.n == 1:
        e0 = np.array([1.0, 0.0], dtype=np.complex128)
        e1 = np.array([0.0, 1.0], dtype=np.complex128)
        g = restrict_to_line(h, e0, e1)
        return binary_form_roots(g, rng)

    n, d = h.n, h.degrees[0]
    hnorm = bwspace.bw_norm(h)

    # uniform lines: Gaussian pairs, row-wise Gram-Schmidt
    pairs = randgeom.complex_gaussian_array(rng, (lines, 2, n + 1))
    u = pairs[:, 0, :]
    u = u / np.linalg.norm(u, axis=1)[:, None]
    w = pairs[:, 1, :] - np.einsum("lj,lj->l", np.conj(u), pairs[:, 1, :])[:, None] * u
    v = w / np.linalg.norm(w, axis=1)[:, None]

    # restrictions: DFT nodes plus fixed spot-check points, one evaluation pass
    omega = np.exp(2j * np.pi * np.arange(d + 1) / (d + 1))
    checks = np.array(
        [[0.6, 0.8 + 0.06j], [1.0, -0.1j], [-0.28, 0.96 - 0.028j]], dtype=np.complex128
    )
    checks /= np.linalg.norm(checks, axis=1)[:, None]
    nodes = np.concatenate(
        [np.stack([np.ones(d + 1, dtype=np.complex128), omega], axis=1), checks]
    )  # (d+4, 2)
    pts = nodes[None, :, 0:1] * u[:, None, :] + nodes[None, :, 1:2] * v[:, None, :]
    values = bwspace.evaluate_at(h, pts.reshape(-1, n + 1))[:, 0].reshape(lines, -1)
    coeffs = np.fft.fft(values[:, : d + 1], axis=1) / (d + 1)

    powers = (checks[:, 0:1] ** np.arange(d, -1, -1)) * (checks[:, 1:2] ** np.arange(d + 1))
    predicted = coeffs @ powers.T
    if np.any(np.abs(predicted - values[:, d + 1 :]) > _RESIDUAL_TOL * hnorm):
        raise NumericError("line restriction failed its residual check")

    # random charts: batched Haar 2x2, then rotated dehomogenized coefficients
    ginibre = randgeom.complex_gaussian_array(rng, (lines, 2, 2))
    q, rfac = np.linalg.qr(ginibre)
    diag = rfac[:, (0, 1), (0, 1)]
    q = q * (diag / np.abs(diag))[:, None, :]
    rotated = _compose_unitary_batch(coeffs, q)

    scale = np.max(np.abs(coeffs), axis=1)
    failed = np.abs(rotated[:, -1]) < 1e-14 * scale
    roots_w, aberth_failed = _aberth_batch(rotated, rng)
    failed |= aberth_failed

    chart = np.stack([np.ones_like(roots_w), roots_w], axis=2)
    chart /= np.linalg.norm(chart, axis=2)[:, :, None]
    chart = np.einsum("ljk,lik->lij", q, chart)  # back through the chart unitary
    out = np.einsum("li,lj->lij", chart[:, :, 0], u) + np.einsum(
        "li,lj->lij", chart[:, :, 1], v
    )

    # root residuals per line, against each line's own coefficient scale
    res_pow_s = chart[:, :, 0:1] ** np.arange(d, -1, -1)
    res_pow_t = chart[:, :, 1:2] ** np.arange(d + 1)
    residuals = np.abs(np.einsum("lik,lk->li", res_pow_s * res_pow_t, coeffs))
    failed |= np.any(residuals >= _RESIDUAL_TOL * scale[:, None], axis=1)

    for idx in np.flatnonzero(failed):
        g = BinaryForm(degree=d, coeffs=coeffs[idx])
        roots2 = binary_form_roots(g, rng)  # fresh chart, scalar retry path
        out[idx] = roots2[:, 0:1] * u[idx][None, :] + roots2[:, 1:2] * v[idx][None, :]
    return out.reshape(lines * d, n + 1)
