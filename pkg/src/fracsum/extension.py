"""Mollifier extension of a sampled function to the upper half-space.

``U(x, t) = int u(x - t h) phi(h) dh`` and its gradient ``(grad_x U, dU/dt)``.
The gradient is computed from the difference form

    grad U(x, t) = (1 / t) int (u(x - t h) - u(x)) xi(h) dh,
    xi(h) = (grad phi(h), -(n phi(h) + h . grad phi(h))),

which vanishes identically on constants because every component of ``xi`` has
zero mean.

Two quadratures are combined.  At small scales the ``K``-point rule on the unit
ball is used together with multilinear interpolation of ``u``; its sample
spacing ``2 t / K^(1/n)`` is then finer than the grid.  Once that spacing would
exceed the grid spacing, the integral is taken directly as a sum over the grid
nodes, i.e. a discrete convolution with the kernel sampled at ``m h / t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, signal

from .envelope import envelope_integral
from .functionals import CheckResult, min_functional, ratio
from .grid import (
    ExponentFamily,
    HalfSpaceField,
    SampledFunction,
    TGrid,
    default_tgrid,
    interpolate_values,
)


@lru_cache(maxsize=None)
def bump_normalization(n: int) -> float:
    """``c_n`` such that ``c_n exp(-1 / (1 - |h|^2))`` has unit integral over ``R^n``."""
    f = lambda r: math.exp(-1.0 / (1.0 - r * r)) if r < 1.0 else 0.0
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=200)
    if n == 1:
        mass = 2.0 * integrate.quad(f, 0.0, 1.0, **opts)[0]
    elif n == 2:
        mass = 2.0 * math.pi * integrate.quad(lambda r: r * f(r), 0.0, 1.0, **opts)[0]
    else:
        raise ValueError(f"dimension {n} not supported (use 1 or 2)")
    return 1.0 / mass


@dataclass(frozen=True)
class Mollifier:
    """Radial bump ``phi(h) = c exp(-1 / (1 - |h|^2))`` on the unit ball."""

    dim: int
    c: float

    def __call__(self, h: np.ndarray) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        r2 = np.sum(h * h, axis=-1)
        inside = r2 < 1.0
        q = np.where(inside, 1.0 - r2, 1.0)
        return np.where(inside, self.c * np.exp(-1.0 / q), 0.0)

    def gradient(self, h: np.ndarray) -> np.ndarray:
        """``grad phi(h) = -2 h phi(h) / (1 - |h|^2)^2`` (zero outside the ball)."""
        h = np.asarray(h, dtype=float)
        r2 = np.sum(h * h, axis=-1)
        inside = r2 < 1.0
        q = np.where(inside, 1.0 - r2, 1.0)
        factor = np.where(inside, -2.0 * self.c * np.exp(-1.0 / q) / (q * q), 0.0)
        return factor[..., None] * h


def make_bump_mollifier(n: int) -> Mollifier:
    if n not in (1, 2):
        raise ValueError(f"dimension {n} not supported (use 1 or 2)")
    return Mollifier(n, bump_normalization(n))


@dataclass(frozen=True)
class XiKernel:
    """The zero-mean vector kernel whose convolution with ``u`` gives ``t grad U``."""

    phi: Mollifier

    @property
    def dim(self) -> int:
        return self.phi.dim

    def __call__(self, h: np.ndarray) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        ph = self.phi(h)
        g = self.phi.gradient(h)
        last = -(self.dim * ph + np.sum(h * g, axis=-1))
        return np.concatenate([g, last[..., None]], axis=-1)


@lru_cache(maxsize=None)
def _ball_rule_cached(n: int, K: int, c: float):
    m = max(2, int(round(K ** (1.0 / n))))
    x = -1.0 + (np.arange(m) + 0.5) * (2.0 / m)
    pts = np.stack(np.meshgrid(*([x] * n), indexing="ij"), axis=-1).reshape(-1, n)
    keep = np.sum(pts**2, axis=-1) < 1.0
    pts = pts[keep]
    w = np.full(len(pts), (2.0 / m) ** n)
    phi = Mollifier(n, c)
    w = w / math.fsum(phi(pts) * w)
    pts.setflags(write=False)
    w.setflags(write=False)
    return pts, w, 2.0 / m


def ball_rule(phi: Mollifier, K: int = 256):
    """Tensor midpoint rule with about ``K`` points on the unit ball.

    Points outside the ball are rejected and the weights rescaled so that the
    rule integrates ``phi`` to exactly 1.  Returns ``(points, weights, spacing)``.
    """
    if K < 2:
        raise ValueError("the ball rule needs at least two points")
    return _ball_rule_cached(phi.dim, int(K), phi.c)


def _support_box(u: SampledFunction):
    """Coordinate range per dimension outside of which the interpolant vanishes."""
    nz = np.nonzero(u.values)
    if len(nz[0]) == 0:
        return None
    axes = u.grid.axes
    hs = u.grid.spacing
    return [(axes[k][nz[k].min()] - hs[k], axes[k][nz[k].max()] + hs[k]) for k in range(u.grid.dim)]


def _default_pad(u: SampledFunction, tgrid: TGrid) -> int:
    return int(math.ceil(tgrid.t_max / u.grid.h)) + 1


def _resolve(u: SampledFunction, tgrid: TGrid | None, pad: int | None):
    if tgrid is None:
        half = max(max(abs(lo), abs(hi)) for lo, hi in u.domain.bounds)
        tgrid = default_tgrid(u.grid, half)
    if pad is None:
        pad = _default_pad(u, tgrid)
    needed = int(math.ceil(tgrid.t_max / u.grid.h))
    if pad < needed:
        raise ValueError(f"pad of {pad} cells cannot hold kernels of radius t_max (need {needed})")
    return tgrid, pad


def _convolve_levels(u: SampledFunction, kernel, ncomp: int, difference: bool, tgrid: TGrid, K: int, pad: int, phi: Mollifier):
    n = u.grid.dim
    base = u.grid
    xgrid = base.padded(pad)
    h = base.h
    pts_rule, w_rule, spacing = ball_rule(phi, K)
    k_rule = kernel(pts_rule) * w_rule[:, None]  # (K, c)
    t_switch = h / spacing
    out = np.zeros((ncomp, tgrid.levels) + xgrid.shape)
    supp = _support_box(u)
    if supp is None:
        return xgrid, out
    axes = xgrid.axes
    slab_pts = None
    inner = tuple(slice(pad, pad + m) for m in base.shape)
    u_slab = np.zeros(xgrid.shape)
    u_slab[inner] = u.values

    for lev, t in enumerate(tgrid.nodes):
        if t < t_switch:
            sel = []
            for k in range(n):
                lo, hi = supp[k][0] - t, supp[k][1] + t
                idx = np.nonzero((axes[k] >= lo) & (axes[k] <= hi))[0]
                sel.append(slice(idx.min(), idx.max() + 1))
            sel = tuple(sel)
            if slab_pts is None:
                slab_pts = xgrid.points
            x = slab_pts[sel]
            samples = interpolate_values(u.values, base, x[..., None, :] - t * pts_rule)
            if difference:
                samples = samples - u_slab[sel][..., None]
            vals = np.tensordot(samples, k_rule, axes=([-1], [0]))  # (..., c)
            if difference:
                vals = vals / t
            out[(slice(None), lev) + sel] = np.moveaxis(vals, -1, 0)
        else:
            mmax = int(math.floor(t / h))
            offs = np.arange(-mmax, mmax + 1) * h
            tap_pts = np.stack(np.meshgrid(*([offs] * n), indexing="ij"), axis=-1) / t
            taps = kernel(tap_pts)  # (..., c)
            scale = h**n / t**n
            if difference:
                scale /= t
            lo = pad - mmax
            region = tuple(slice(lo, lo + m + 2 * mmax) for m in base.shape)
            for c in range(ncomp):
                tap = taps[..., c]
                full = signal.convolve(u.values, tap, mode="full", method="direct" if n == 1 else "auto")
                block = out[c, lev]
                block[region] = full * scale
                if difference:
                    block[inner] -= u.values * (math.fsum(tap.ravel()) * scale)
    return xgrid, out


def extend_half_space(
    u: SampledFunction,
    phi: Mollifier | None = None,
    tgrid: TGrid | None = None,
    K: int = 256,
    pad: int | None = None,
) -> HalfSpaceField:
    """Scalar extension ``U(x, t)`` on the padded slab."""
    phi = phi or make_bump_mollifier(u.grid.dim)
    tgrid, pad = _resolve(u, tgrid, pad)
    kernel = lambda h: phi(h)[..., None]
    _, vals = _convolve_levels(u, kernel, 1, False, tgrid, K, pad, phi)
    return HalfSpaceField(u.domain, u.grid, pad, tgrid, vals)


def gradient_field(
    u: SampledFunction,
    phi: Mollifier | None = None,
    tgrid: TGrid | None = None,
    K: int = 256,
    pad: int | None = None,
) -> HalfSpaceField:
    """``grad U`` with components ``(d/dx_1, ..., d/dx_n, d/dt)`` via the difference form."""
    phi = phi or make_bump_mollifier(u.grid.dim)
    tgrid, pad = _resolve(u, tgrid, pad)
    xi = XiKernel(phi)
    _, vals = _convolve_levels(u, xi, u.grid.dim + 1, True, tgrid, K, pad, phi)
    return HalfSpaceField(u.domain, u.grid, pad, tgrid, vals)


# ---------------------------------------------------------------------------
# Weighted energies


def _weight_exponents(fam: ExponentFamily) -> np.ndarray:
    """Exponent of ``t`` in ``|F|^p / t^(1 - (1 - s) p)``."""
    return -1.0 + (1.0 - fam.s) * fam.p


def weighted_energy_terms(F: HalfSpaceField, fam: ExponentFamily) -> np.ndarray:
    """Per-node, per-index quadrature terms ``w |F|^p_i t^(-1 + (1 - s_i) p_i)``.

    Shape ``(l, levels) + xgrid.shape``.
    """
    mag = F.magnitude()
    t = F.tgrid.nodes
    wt = F.tgrid.weights * F.base.cell_volume
    expo = _weight_exponents(fam)
    shape = (F.tgrid.levels,) + (1,) * F.dim
    out = np.empty((fam.count,) + mag.shape)
    for i, (q, ex) in enumerate(zip(fam.p, expo)):
        out[i] = mag**q * (wt * t**ex).reshape(shape)
    return out


def energy_closures(F: HalfSpaceField, fam: ExponentFamily) -> tuple[float, float]:
    """Envelope integrals below the first and above the last level.

    Below ``t_min`` the field is frozen at its first level; above ``t_max`` it
    is continued by the power law ``t^-(n+1)`` of a compactly supported input.
    """
    mag = F.magnitude()
    n = F.dim
    ex = _weight_exponents(fam)
    first = mag[0].ravel()
    last = mag[-1].ravel()
    vol = F.base.cell_volume
    head_beta = first[:, None] ** fam.p
    head = envelope_integral(head_beta, ex, 0.0, F.tgrid.lower_edge, kind="min")
    tM = F.tgrid.t_max
    tail_beta = (last[:, None] * tM ** (n + 1)) ** fam.p
    tail = envelope_integral(tail_beta, ex - (n + 1) * fam.p, F.tgrid.upper_edge, np.inf, kind="min")
    return vol * math.fsum(head), vol * math.fsum(tail)


def weighted_min_energy(F: HalfSpaceField, fam: ExponentFamily, closures: bool = False) -> float:
    """``iint min_i |F|^p_i / t^(1 - (1 - s_i) p_i) dt dx`` over the field's grid.

    With ``closures=True`` the head (``t < t_min``) and tail (``t > t_max``)
    estimates from :func:`energy_closures` are added.
    """
    terms = weighted_energy_terms(F, fam)
    body = math.fsum(np.min(terms, axis=0).ravel())
    if not closures:
        return body
    head, tail = energy_closures(F, fam)
    return body + head + tail


def extension_energy_check(
    u: SampledFunction,
    fam: ExponentFamily,
    phi: Mollifier | None = None,
    tgrid: TGrid | None = None,
    K: int = 256,
    G: HalfSpaceField | None = None,
) -> CheckResult:
    """Weighted min-energy of ``grad U`` against the whole-space min-functional of ``u``."""
    G = G if G is not None else gradient_field(u, phi, tgrid, K)
    lhs = weighted_min_energy(G, fam, closures=True)
    rhs = min_functional(u, fam, exterior=True)
    c = ratio(lhs, rhs)
    return CheckResult("extension_energy", lhs, rhs, c is not None and math.isfinite(c), c)
