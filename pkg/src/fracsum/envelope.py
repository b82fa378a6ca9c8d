"""Exact integrals of lower/upper envelopes of power functions.

The central routine integrates

    sum_k c_k t^k * ext_i beta_i t^(e_i)        (ext = min or max)

over an interval ``[a, b]`` with ``0 <= a <= b <= inf``.  Two powers cross
at most once on ``(0, inf)``, so the envelope is a single power on each
interval between consecutive crossing points, and each piece integrates in
closed form.  Everything is vectorized over leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _crossings(log_beta: np.ndarray, exps: np.ndarray) -> np.ndarray:
    """Pairwise crossing points ``t*`` (shape ``(..., l(l-1)/2)``); NaN if none."""
    ell = log_beta.shape[-1]
    out = []
    for i in range(ell):
        for j in range(i + 1, ell):
            de = exps[..., i] - exps[..., j]
            with np.errstate(divide="ignore", invalid="ignore"):
                db = log_beta[..., j] - log_beta[..., i]
                logt = np.where(de != 0.0, db / np.where(de != 0.0, de, 1.0), np.nan)
            logt = np.where(np.isfinite(logt), logt, np.nan)
            with np.errstate(over="ignore"):
                out.append(np.exp(logt))
    if not out:
        return np.zeros(log_beta.shape[:-1] + (0,))
    return np.stack(out, axis=-1)


def _piece_integral(beta, q, lo, hi):
    """Integral of ``beta * t^(q-1)`` over ``[lo, hi]`` (elementwise, ``lo <= hi``)."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        hi_pow = np.where(np.isinf(hi), 0.0, np.power(hi, q))
        lo_pow = np.where(lo == 0.0, 0.0, np.power(lo, q))
        power_part = (hi_pow - lo_pow) / np.where(q == 0.0, 1.0, q)
        log_part = np.log(hi) - np.log(lo)
        val = np.where(q == 0.0, log_part, power_part)
        val = np.where(hi > lo, val, 0.0)
        return np.where(beta == 0.0, 0.0, beta * val)


def envelope_integral(betas, exps, a, b, coeffs=None, kind: str = "min") -> np.ndarray:
    """Integrate a polynomial-weighted envelope of power functions.

    Parameters
    ----------
    betas : array (..., l)
        Nonnegative prefactors.
    exps : array (l,) or (..., l)
        Exponents ``e_i`` of ``t``.
    a, b : arrays broadcastable to ``betas.shape[:-1]``
        Integration bounds; ``b`` may be ``inf``.
    coeffs : array (..., K), optional
        Coefficients of the polynomial weight ``sum_k c_k t^k`` (default 1).
    kind : {"min", "max"}

    Returns
    -------
    ndarray of shape ``betas.shape[:-1]``.

    The integral must converge; the caller is responsible for choosing
    exponents with ``e_i + k + 1 > 0`` near 0 and ``< 0`` near infinity.
    """
    betas = np.asarray(betas, dtype=float)
    if np.any(betas < 0):
        raise ValueError("envelope prefactors must be nonnegative")
    lead = betas.shape[:-1]
    ell = betas.shape[-1]
    exps = np.broadcast_to(np.asarray(exps, dtype=float), lead + (ell,))
    a = np.broadcast_to(np.asarray(a, dtype=float), lead)
    b = np.broadcast_to(np.asarray(b, dtype=float), lead)
    if coeffs is None:
        coeffs = np.ones(lead + (1,))
    coeffs = np.broadcast_to(np.asarray(coeffs, dtype=float), lead + (np.shape(coeffs)[-1],))
    if kind not in ("min", "max"):
        raise ValueError(f"kind must be 'min' or 'max', got {kind!r}")

    with np.errstate(divide="ignore"):
        log_beta = np.log(betas)
    cross = _crossings(log_beta, exps)
    cross = np.where(np.isnan(cross), a[..., None], np.clip(cross, a[..., None], b[..., None]))
    pts = np.sort(np.concatenate([a[..., None], cross, b[..., None]], axis=-1), axis=-1)
    lo, hi = pts[..., :-1], pts[..., 1:]

    # Any point strictly inside a piece identifies the active power.
    with np.errstate(invalid="ignore", over="ignore"):
        mid = np.where(
            lo > 0,
            np.where(np.isinf(hi), 2.0 * lo, np.sqrt(lo * hi)),
            np.where(np.isinf(hi), 1.0, 0.5 * hi),
        )
        mid = np.where(mid > 0, mid, 1.0)
        log_mid = np.log(mid)
    score = log_beta[..., None, :] + exps[..., None, :] * log_mid[..., None]
    # Ties between identical powers are harmless; NaN never arises because
    # log_beta is finite or -inf and exps is finite.
    active = np.argmin(score, axis=-1) if kind == "min" else np.argmax(score, axis=-1)
    beta_act = np.take_along_axis(betas[..., None, :], active[..., None], axis=-1)[..., 0]
    exp_act = np.take_along_axis(exps[..., None, :], active[..., None], axis=-1)[..., 0]

    total = np.zeros(lo.shape)
    for k in range(coeffs.shape[-1]):
        ck = coeffs[..., k][..., None]
        piece = _piece_integral(beta_act, exp_act + k + 1.0, lo, hi)
        total = total + np.where(ck == 0.0, 0.0, ck * piece)
    return np.sum(total, axis=-1)


@dataclass(frozen=True)
class MinPowerIntegrand:
    """Prefactors ``beta_i >= 0`` and exponents ``gamma_i > 0`` of a min-power integrand."""

    betas: tuple[float, ...]
    gammas: tuple[float, ...]

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        gammas = tuple(float(g) for g in self.gammas)
        if len(betas) == 0:
            raise ValueError("the integrand needs at least one term")
        if len(betas) != len(gammas):
            raise ValueError("betas and gammas must have the same length")
        if any(not np.isfinite(b) or b < 0 for b in betas):
            raise ValueError("betas must be finite and nonnegative")
        if any(not np.isfinite(g) or g <= 0 for g in gammas):
            raise ValueError("gammas must be finite and positive")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "gammas", gammas)

    @property
    def count(self) -> int:
        return len(self.betas)


@dataclass(frozen=True)
class EnvelopeResult:
    value: float
    bound: float
    holds: bool


def min_power_integral(kind: str, m: MinPowerIntegrand, r: float) -> EnvelopeResult:
    """Exact value of a min-power integral and the single-term bound.

    ``kind="tail"``: ``int_r^inf min_i beta_i / t^(gamma_i + 1) dt``, bounded by
    ``min_i beta_i / (gamma_i r^gamma_i)``.

    ``kind="head"``: ``int_0^r min_i beta_i t^(gamma_i - 1) dt``, bounded by
    ``min_i beta_i r^gamma_i / gamma_i``.
    """
    if not (np.isfinite(r) and r > 0):
        raise ValueError(f"r must be positive, got {r}")
    beta = np.array(m.betas)
    gamma = np.array(m.gammas)
    if kind == "tail":
        value = float(envelope_integral(beta, -gamma - 1.0, r, np.inf))
        bound = float(np.min(beta / (gamma * r**gamma)))
    elif kind == "head":
        value = float(envelope_integral(beta, gamma - 1.0, 0.0, r))
        bound = float(np.min(beta * r**gamma / gamma))
    else:
        raise ValueError(f"kind must be 'tail' or 'head', got {kind!r}")
    return EnvelopeResult(value, bound, value <= bound * (1.0 + 1e-12))
