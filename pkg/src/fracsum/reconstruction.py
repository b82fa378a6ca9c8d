"""Reconstruction kernels and the recovery of a function from a half-space field.

A reconstruction kernel ``psi = (psi_x, psi_t)`` is supported in the unit ball
and satisfies

    div psi_x(h) + h . grad psi_t(h) + n psi_t(h) = 0,      int psi_t = 1.

For such a kernel and ``U`` the extension of ``u``,

    u(x) = - int_0^inf int psi((x - y) / t) . grad U(y, t) / t^n dy dt.

``reconstruct`` evaluates the right-hand side for an arbitrary field in place
of ``grad U``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, signal
from scipy.stats import qmc

from .extension import Mollifier, ball_rule, energy_closures, make_bump_mollifier, weighted_energy_terms
from .functionals import CheckResult, gagliardo_seminorm, ratio
from .grid import ExponentFamily, HalfSpaceField, SampledFunction, interpolate_values

Array = np.ndarray


@dataclass(frozen=True)
class ReconstructionKernel:
    """A kernel ``psi`` with its spatial derivatives, all supported in the unit ball."""

    dim: int
    psi_x: Callable[[Array], Array]
    psi_t: Callable[[Array], Array]
    div_psi_x: Callable[[Array], Array]
    grad_psi_t: Callable[[Array], Array]
    name: str = "custom"

    def __call__(self, h: Array) -> Array:
        """``psi(h)`` as an ``(n + 1)``-vector (spatial part first)."""
        return np.concatenate([self.psi_x(h), self.psi_t(h)[..., None]], axis=-1)

    def residual(self, h: Array) -> Array:
        h = np.asarray(h, dtype=float)
        return self.div_psi_x(h) + np.sum(h * self.grad_psi_t(h), axis=-1) + self.dim * self.psi_t(h)


def canonical_kernel(phi: Mollifier | None = None, dim: int | None = None) -> ReconstructionKernel:
    """``psi(h) = phi(h) (-h, 1)``."""
    if phi is None:
        phi = make_bump_mollifier(dim or 1)
    n = phi.dim

    def psi_x(h):
        h = np.asarray(h, dtype=float)
        return -h * phi(h)[..., None]

    def div_psi_x(h):
        h = np.asarray(h, dtype=float)
        return -n * phi(h) - np.sum(h * phi.gradient(h), axis=-1)

    return ReconstructionKernel(n, psi_x, phi, div_psi_x, phi.gradient, "canonical")


@dataclass(frozen=True)
class KernelValidation:
    max_residual: float
    mass_error: float
    samples: int
    ok: bool


def _kernel_mass(psi: ReconstructionKernel) -> float:
    """``int psi_t`` over the unit ball."""
    opts = dict(epsabs=1e-15, epsrel=1e-13, limit=200)
    if psi.dim == 1:
        return integrate.quad(lambda x: float(psi.psi_t(np.array([x]))), -1.0, 1.0, **opts)[0]
    # Tensor Gauss-Legendre in polar coordinates; exact enough for smooth kernels.
    r, wr = np.polynomial.legendre.leggauss(200)
    r, wr = 0.5 * (r + 1.0), 0.5 * wr
    th = np.linspace(0.0, 2 * math.pi, 256, endpoint=False)
    pts = r[:, None, None] * np.stack([np.cos(th), np.sin(th)], axis=-1)[None, :, :]
    vals = psi.psi_t(pts)
    return float(np.sum(vals * (r * wr)[:, None]) * (2 * math.pi / len(th)))


def validate_kernel(
    psi: ReconstructionKernel, samples: int = 10_000, seed: int = 0, tol: float = 1e-8, mass_tol: float = 1e-6
) -> KernelValidation:
    """Evaluate the kernel identity at quasi-random points of the unit ball."""
    n = psi.dim
    sob = qmc.Sobol(d=n, scramble=True, seed=seed)
    pts = np.empty((0, n))
    while len(pts) < samples:
        cand = 2.0 * sob.random(1 << int(math.ceil(math.log2(samples)))) - 1.0
        pts = np.concatenate([pts, cand[np.sum(cand**2, axis=-1) < 1.0]])
    pts = pts[:samples]
    res = float(np.max(np.abs(psi.residual(pts))))
    mass_err = abs(_kernel_mass(psi) - 1.0)
    return KernelValidation(res, mass_err, samples, res <= tol and mass_err <= mass_tol)


# ---------------------------------------------------------------------------
# Scale identity


def _ball_average(psi_fn, field_vals: Array, F: HalfSpaceField, x: Array, t: float, rule) -> Array:
    """``int psi(z) . field(x - t z) dz`` with the ball rule and interpolation in space."""
    pts, w, _ = rule
    y = x[None, :] - t * pts
    samples = np.stack([interpolate_values(field_vals[c], F.xgrid, y) for c in range(field_vals.shape[0])], axis=-1)
    weights = psi_fn(pts)
    if weights.ndim == 1:
        weights = weights[:, None]
    return float(np.sum(samples * weights * w[:, None]))


def scale_identity_check(
    psi: ReconstructionKernel,
    U: HalfSpaceField,
    grad: HalfSpaceField,
    x,
    tau: float,
    T: float,
    K: int = 256,
) -> tuple[float, float, float]:
    """Compare both sides of the identity between the scales ``tau`` and ``T``.

    ``lhs = int psi_t(z) U(x - tau z, tau) dz`` and
    ``rhs = int psi_t(z) U(x - T z, T) dz - int_tau^T int psi(z) . grad U(x - t z, t) dz dt``.
    Both scales are snapped to the nearest levels of the field's t-grid; the
    t-integral uses Simpson's rule in ``log t``.  Returns ``(lhs, rhs, gap)``.
    """
    if tau > T:
        raise ValueError("tau must not exceed T")
    if U.components != 1 or grad.components != U.dim + 1:
        raise ValueError("need a scalar extension and its gradient field")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    tg = U.tgrid
    a, b = tg.nearest(tau), tg.nearest(T)
    t = tg.nodes
    rule = ball_rule(make_bump_mollifier(U.dim), K)
    lhs = _ball_average(psi.psi_t, U.values[:, a], U, x, t[a], rule)
    top = _ball_average(psi.psi_t, U.values[:, b], U, x, t[b], rule)
    if b == a:
        return lhs, top, abs(lhs - top)
    levels = range(a, b + 1)
    inner = np.array([_ball_average(psi, grad.values[:, k], grad, x, t[k], rule) for k in levels])
    logs = np.log(t[a : b + 1])
    body = integrate.simpson(inner * t[a : b + 1], x=logs)
    rhs = top - body
    return lhs, rhs, abs(lhs - rhs)


# ---------------------------------------------------------------------------
# Reconstruction


def _level_sums(psi: ReconstructionKernel, F: HalfSpaceField, lev: int, t: float) -> Array:
    """``h^n / t^n sum_y psi((x - y) / t) . F(y, t)`` at the base-grid nodes."""
    n = F.dim
    h = F.base.h
    mmax = int(math.floor(t / h))
    offs = np.arange(-mmax, mmax + 1) * h
    tap_pts = np.stack(np.meshgrid(*([offs] * n), indexing="ij"), axis=-1) / t
    taps = psi(tap_pts)
    pad = F.pad
    window = tuple(slice(pad - mmax, pad + m + mmax) for m in F.base.shape)
    acc = np.zeros(F.base.shape)
    for c in range(F.components):
        seg = F.values[c, lev][window]
        if not np.any(seg):
            continue
        acc += signal.convolve(seg, taps[..., c], mode="valid", method="direct" if n == 1 else "auto")
    return acc * (h**n / t**n)


def reconstruct(psi: ReconstructionKernel, F: HalfSpaceField, tail: bool = True) -> SampledFunction:
    """``v(x) = - sum_t w_t sum_y psi((x - y) / t) . F(y, t) h^n / t^n`` on the base grid.

    With ``tail=True`` the scales beyond the last level are added under the
    assumption that ``int psi((x - y) / t) . F(y, t) dy / t^n`` decays like
    ``t^-(n+1)``, which holds for gradients of extensions of compactly
    supported functions.  See :func:`reconstruction_tail` for its size.
    """
    v, _ = _reconstruct_parts(psi, F)
    if tail:
        v = v + reconstruction_tail(psi, F)
    if not np.all(np.isfinite(v)):
        raise FloatingPointError("reconstruction sum is not finite; the field violates the integrability condition")
    return SampledFunction(F.domain, F.base, v)


def _reconstruct_parts(psi: ReconstructionKernel, F: HalfSpaceField):
    if F.components != F.dim + 1:
        raise ValueError("reconstruction needs an (n + 1)-component field")
    tg = F.tgrid
    v = np.zeros(F.base.shape)
    last = None
    for lev, (t, w) in enumerate(zip(tg.nodes, tg.weights)):
        s = _level_sums(psi, F, lev, t)
        v -= w * s
        last = s
    return v, last


def reconstruction_tail(psi: ReconstructionKernel, F: HalfSpaceField) -> Array:
    """Power-law continuation of the t-integral beyond the last level."""
    tg = F.tgrid
    n = F.dim
    last = _level_sums(psi, F, tg.levels - 1, tg.t_max)
    Tp = tg.upper_edge
    return -last * tg.t_max ** (n + 1) / (n * Tp**n)


def trace_estimate_check(
    psi: ReconstructionKernel, theta: HalfSpaceField, s: float, p: float, closures: bool = True
) -> CheckResult:
    """Gagliardo energy of ``reconstruct(theta)`` against the weighted energy of ``theta``."""
    fam = ExponentFamily(((s, p),))
    v = reconstruct(psi, theta)
    lhs = gagliardo_seminorm(v, s, p, exterior=v.domain.kind != "ball")
    rhs = math.fsum(weighted_energy_terms(theta, fam)[0].ravel())
    if closures:
        head, tail = energy_closures(theta, fam)
        rhs += head + tail
    if rhs == 0.0 and lhs > 0.0:
        raise ArithmeticError("reconstruction has energy while the field has none")
    c = ratio(lhs, rhs)
    return CheckResult("trace_estimate", lhs, rhs, c is not None and math.isfinite(c), c, {"s": s, "p": p})
