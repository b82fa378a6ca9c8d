"""Gagliardo-type double integrals and the elementary inequalities around them.

All double integrals share one engine.  For nodes ``x != y`` the integrand is
evaluated at cell centers (midpoint rule on cell pairs).  The same-cell pairs
carry an integrable singularity; by default their contribution is computed
exactly for the local linear model ``u(x) - u(y) ~ grad u . (x - y)`` with the
envelope integrator, which removes the ``O(h)`` bias of simply dropping them.
Functionals return the integrals themselves (p-th powers of seminorms).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .envelope import envelope_integral
from .grid import ExponentFamily, Grid, SampledFunction
from .parallel import map_chunks

DIAGONAL_RULES = ("local-linear", "exclude")
NEAR_FIELD_CELLS = 16
_PAIR_BLOCK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one inequality check ``lhs <= constant * rhs``."""

    name: str
    lhs: float
    rhs: float
    holds: bool
    constant: float | None = None
    extra: dict = field(default_factory=dict)

    def to_record(self, grid: Grid | None = None, fam: ExponentFamily | None = None) -> dict:
        rec = {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "constant": self.constant,
            "holds": bool(self.holds),
            "grid": grid.to_dict() if grid is not None else None,
            "fam": fam.as_list() if fam is not None else None,
        }
        rec.update(self.extra)
        return rec


def ratio(lhs: float, rhs: float) -> float | None:
    """``lhs / rhs`` with ``0 / 0 = 0``; ``None`` when only ``rhs`` vanishes."""
    if rhs == 0.0:
        return 0.0 if lhs == 0.0 else None
    return lhs / rhs


# ---------------------------------------------------------------------------
# Pair-integral engine


def _gauss_on(a: float, b: float, n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _diagonal_2d_rule(n_per_arc: int = 12):
    """Angles in ``[0, pi)`` split at the kinks of the cell geometry."""
    parts = [_gauss_on(k * math.pi / 4, (k + 1) * math.pi / 4, n_per_arc) for k in range(4)]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _pair_energy(
    fields: Sequence[np.ndarray],
    grid: Grid,
    mask: np.ndarray,
    p: np.ndarray,
    e: np.ndarray,
    coef: np.ndarray,
    fidx: Sequence[int],
    reduce: str,
    diagonal: str = "local-linear",
    exterior: bool = False,
    threads: int | None = None,
) -> float:
    """``sum over cell pairs of ext_i coef_i |f_{fidx[i]}(x) - f_{fidx[i]}(y)|^p_i / |x - y|^e_i``."""
    if diagonal not in DIAGONAL_RULES:
        raise ValueError(f"diagonal rule must be one of {DIAGONAL_RULES}, got {diagonal!r}")
    n = grid.dim
    pts = grid.points[mask]
    vals = [np.asarray(f)[mask] for f in fields]
    P = pts.shape[0]
    ell = len(p)
    if P == 0:
        return 0.0
    log_coef = np.log(coef)
    ext = np.min if reduce == "min" else np.max
    block = max(1, _PAIR_BLOCK_ELEMENTS // (P * ell))

    def run(a: int, b: int) -> float:
        d2 = np.zeros((b - a, P))
        for k in range(n):
            d2 += (pts[a:b, None, k] - pts[None, :, k]) ** 2
        with np.errstate(divide="ignore"):
            logd = 0.5 * np.log(d2)
        logd[d2 == 0.0] = np.inf
        terms = np.empty((ell, b - a, P))
        for i in range(ell):
            v = vals[fidx[i]]
            with np.errstate(divide="ignore"):
                logdiff = np.log(np.abs(v[a:b, None] - v[None, :]))
            terms[i] = log_coef[i] + p[i] * logdiff
            if e[i] != 0.0:
                terms[i] -= e[i] * logd
        return float(np.sum(np.exp(ext(terms, axis=0))))

    spans = [(i, min(i + block, P)) for i in range(0, P, block)]
    total = math.fsum(map_chunks(run, spans, threads)) * grid.cell_volume**2

    if diagonal == "local-linear" and all(m >= 2 for m in grid.shape):
        total += _diagonal_correction(fields, grid, mask, p, e, coef, fidx, reduce)
        if n == 1:
            total += _near_field_1d(vals, grid.spacing[0], p, e, coef, fidx, reduce)
    if exterior:
        total += _exterior_correction(vals, pts, grid, p, e, coef, fidx, reduce)
    return total


def _diagonal_correction(fields, grid, mask, p, e, coef, fidx, reduce) -> float:
    """Same-cell contribution for the local linear model of each field."""
    n = grid.dim
    grads = []
    for f in fields:
        g = np.gradient(np.asarray(f, dtype=float), *grid.spacing)
        g = [g] if n == 1 else g
        grads.append(np.stack([gk[mask] for gk in g], axis=-1))
    ell = len(p)
    if n == 1:
        h = grid.spacing[0]
        betas = np.stack(
            [coef[i] * np.abs(grads[fidx[i]][:, 0]) ** p[i] for i in range(ell)], axis=-1
        )
        vals = envelope_integral(betas, p - e, 0.0, h, coeffs=[h, -1.0], kind=reduce)
        return 2.0 * math.fsum(vals)
    hx, hy = grid.spacing
    theta, wt = _diagonal_2d_rule()
    c, s = np.abs(np.cos(theta)), np.abs(np.sin(theta))
    with np.errstate(divide="ignore"):
        rho_max = np.minimum(np.where(c > 0, hx / c, np.inf), np.where(s > 0, hy / s, np.inf))
    coeffs = np.stack([np.full_like(c, hx * hy), -(hy * c + hx * s), c * s], axis=-1)
    dirs = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    betas = np.stack(
        [coef[i] * np.abs(grads[fidx[i]] @ dirs.T) ** p[i] for i in range(ell)], axis=-1
    )
    vals = envelope_integral(betas, p - e + 1.0, 0.0, rho_max, coeffs=coeffs, kind=reduce)
    return 2.0 * math.fsum((vals @ wt).ravel())


def _near_field_1d(vals, h, p, e, coef, fidx, reduce, cells: int = NEAR_FIELD_CELLS) -> float:
    """Replace the midpoint value of close cell pairs by the exact cell-pair integral.

    For cells ``k`` apart the difference is modeled by the secant slope, and the
    tent-weighted integral over the pair of cells is done exactly.  This removes
    most of the error of the midpoint rule near a singular kernel.
    """
    ell = len(p)
    P = len(vals[0])
    ext = np.min if reduce == "min" else np.max
    out = []
    for k in range(1, min(cells, P - 1) + 1):
        diffs = [np.abs(vals[fidx[i]][k:] - vals[fidx[i]][:-k]) for i in range(ell)]
        betas = np.stack([coef[i] * (diffs[i] / (k * h)) ** p[i] for i in range(ell)], axis=-1)
        exact = envelope_integral(
            betas, p - e, (k - 1) * h, k * h, coeffs=[-(k - 1) * h, 1.0], kind=reduce
        ) + envelope_integral(betas, p - e, k * h, (k + 1) * h, coeffs=[(k + 1) * h, -1.0], kind=reduce)
        mid = h * h * ext([coef[i] * diffs[i] ** p[i] / (k * h) ** e[i] for i in range(ell)], axis=0)
        out.append(2.0 * (math.fsum(exact) - math.fsum(mid)))
    return math.fsum(out)


def _exterior_rays(pts: np.ndarray, grid: Grid, n_per_arc: int = 10):
    """Angles, weights and exit distances of rays leaving the grid box."""
    lo, hi = np.array(grid.lower), np.array(grid.upper)
    corners = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    ang = np.arctan2(corners[None, :, 1] - pts[:, None, 1], corners[None, :, 0] - pts[:, None, 0])
    ang = np.sort(np.mod(ang, 2 * math.pi), axis=1)
    ends = np.concatenate([ang[:, 1:], ang[:, :1] + 2 * math.pi], axis=1)
    x, w = np.polynomial.legendre.leggauss(n_per_arc)
    half = 0.5 * (ends - ang)
    theta = (ang + half)[..., None] + half[..., None] * x
    weight = half[..., None] * w
    cx, cy = np.cos(theta), np.sin(theta)
    px, py = pts[:, 0, None, None], pts[:, 1, None, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        rx = np.where(cx > 0, (hi[0] - px) / cx, np.where(cx < 0, (lo[0] - px) / cx, np.inf))
        ry = np.where(cy > 0, (hi[1] - py) / cy, np.where(cy < 0, (lo[1] - py) / cy, np.inf))
    return np.minimum(rx, ry), weight


def _exterior_correction(vals, pts, grid, p, e, coef, fidx, reduce) -> float:
    """Pairs with one point outside the grid box, where every field is zero."""
    ell = len(p)
    n = grid.dim
    betas = np.stack([coef[i] * np.abs(vals[fidx[i]]) ** p[i] for i in range(ell)], axis=-1)
    keep = np.any(betas > 0, axis=-1)
    if not np.any(keep):
        return 0.0
    betas, pts = betas[keep], pts[keep]
    gam = e - n
    if np.any(gam <= 0):
        raise ValueError("exterior contributions diverge for this kernel")
    if n == 1:
        left = pts[:, 0] - grid.lower[0]
        right = grid.upper[0] - pts[:, 0]
        tails = envelope_integral(betas, -gam - 1.0, left, np.inf, kind=reduce) + envelope_integral(
            betas, -gam - 1.0, right, np.inf, kind=reduce
        )
    else:
        rho, weight = _exterior_rays(pts, grid)
        b = np.broadcast_to(betas[:, None, None, :], rho.shape + (ell,))
        vals_r = envelope_integral(b, -gam - 1.0, rho, np.inf, kind=reduce)
        tails = np.sum(vals_r * weight, axis=(1, 2))
    return 2.0 * grid.cell_volume * math.fsum(tails)


def _check_fields(funcs: Sequence[SampledFunction]):
    first = funcs[0]
    for f in funcs[1:]:
        if f.grid != first.grid:
            raise ValueError("all functions must share the same grid")
        if f.domain != first.domain:
            raise ValueError("all functions must share the same domain")
    return first.grid, first.mask


def _exponent_arrays(fam: ExponentFamily, n: int):
    s, p = fam.s, fam.p
    return p, n + s * p


# ---------------------------------------------------------------------------
# Public functionals


def gagliardo_seminorm(
    u: SampledFunction,
    s: float,
    p: float,
    *,
    diagonal: str = "local-linear",
    exterior: bool = False,
    threads: int | None = None,
) -> float:
    """``iint |u(x) - u(y)|^p / |x - y|^(n + s p)`` over the domain (p-th power).

    With ``exterior=True`` the function is extended by zero outside the grid
    box and the pairs with one point outside are added analytically, giving
    the integral over the whole space.
    """
    return min_functional(
        u, ExponentFamily(((s, p),)), diagonal=diagonal, exterior=exterior, threads=threads
    )


def min_functional(
    u: SampledFunction,
    fam: ExponentFamily,
    *,
    diagonal: str = "local-linear",
    exterior: bool = False,
    threads: int | None = None,
) -> float:
    """``iint min_i |u(x) - u(y)|^p_i / |x - y|^(n + s_i p_i)``."""
    if exterior and u.domain.kind == "ball":
        raise ValueError("exterior pairs are defined for box-shaped domains only")
    p, e = _exponent_arrays(fam, u.grid.dim)
    return _pair_energy(
        [u.values], u.grid, u.mask, p, e, np.ones(fam.count), [0] * fam.count, "min",
        diagonal, exterior, threads,
    )


def max_functional(
    u_list: Sequence[SampledFunction],
    fam: ExponentFamily,
    *,
    scale: Sequence[float] | None = None,
    diagonal: str = "local-linear",
    exterior: bool = False,
    threads: int | None = None,
) -> float:
    """``iint max_i c_i |u_i(x) - u_i(y)|^p_i / |x - y|^(n + s_i p_i)`` with ``c_i = 1`` by default."""
    if len(u_list) != fam.count:
        raise ValueError(f"expected {fam.count} functions, got {len(u_list)}")
    grid, mask = _check_fields(u_list)
    p, e = _exponent_arrays(fam, grid.dim)
    coef = np.ones(fam.count) if scale is None else np.asarray(scale, dtype=float)
    return _pair_energy(
        [u.values for u in u_list], grid, mask, p, e, coef, list(range(fam.count)), "max",
        diagonal, exterior, threads,
    )


@dataclass(frozen=True)
class SumEstimate:
    lhs: float
    rhs: float
    holds: bool
    pointwise_holds: bool
    pointwise_violations: int
    worst_pointwise_ratio: float


def sum_estimate_pointwise(
    u_list: Sequence[SampledFunction], fam: ExponentFamily, rtol: float = 1e-12
) -> tuple[int, float]:
    """Check the per-pair triangle-type bound on every ordered pair of distinct nodes.

    For every pair, ``min_i |sum_j du_j|^p_i / d^e_i <= max_i l^p_i |du_i|^p_i / d^e_i``.
    Returns the number of violating pairs and the largest lhs/rhs ratio.
    """
    if len(u_list) != fam.count:
        raise ValueError(f"expected {fam.count} functions, got {len(u_list)}")
    grid, mask = _check_fields(u_list)
    p, e = _exponent_arrays(fam, grid.dim)
    ell = fam.count
    vals = [u.values[mask] for u in u_list]
    pts = grid.points[mask]
    P = pts.shape[0]
    block = max(1, _PAIR_BLOCK_ELEMENTS // (P * ell))
    violations = 0
    worst = 0.0
    for a in range(0, P, block):
        b = min(a + block, P)
        d = np.sqrt(np.sum((pts[a:b, None, :] - pts[None, :, :]) ** 2, axis=-1))
        off = d > 0
        # Sum the component differences rather than differencing the rounded
        # totals, so that rounding cannot push the left side past the bound.
        diffs = [vals[i][a:b, None] - vals[i][None, :] for i in range(ell)]
        dsum = np.abs(np.sum(diffs, axis=0))
        lhs = np.min([dsum ** p[i] / np.where(off, d, 1.0) ** e[i] for i in range(ell)], axis=0)
        rhs = np.max(
            [(ell * np.abs(diffs[i])) ** p[i] / np.where(off, d, 1.0) ** e[i] for i in range(ell)],
            axis=0,
        )
        lhs, rhs = lhs[off], rhs[off]
        violations += int(np.count_nonzero(lhs > rhs * (1.0 + rtol)))
        pos = rhs > 0
        if np.any(pos):
            worst = max(worst, float(np.max(lhs[pos] / rhs[pos])))
        if np.any((rhs == 0) & (lhs > 0)):
            worst = math.inf
    return violations, worst


def sum_estimate_check(
    u_list: Sequence[SampledFunction],
    fam: ExponentFamily,
    *,
    diagonal: str = "local-linear",
    pointwise: bool = True,
    threads: int | None = None,
) -> SumEstimate:
    """Compare ``min_functional(sum u_i)`` with the max-functional of ``l u_i``."""
    if len(u_list) != fam.count:
        raise ValueError(f"expected {fam.count} functions, got {len(u_list)}")
    grid, _ = _check_fields(u_list)
    total = u_list[0].with_values(np.sum([u.values for u in u_list], axis=0))
    lhs = min_functional(total, fam, diagonal=diagonal, threads=threads)
    rhs = max_functional(
        u_list, fam, scale=float(fam.count) ** fam.p, diagonal=diagonal, threads=threads
    )
    if pointwise:
        bad, worst = sum_estimate_pointwise(u_list, fam)
    else:
        bad, worst = 0, float("nan")
    return SumEstimate(lhs, rhs, lhs <= rhs * (1.0 + 1e-12), bad == 0, bad, worst)


@dataclass(frozen=True)
class DiscreteMeasure:
    """Probability measure with finitely many atoms."""

    masses: tuple[float, ...]

    def __post_init__(self):
        m = tuple(float(x) for x in self.masses)
        if len(m) == 0 or any(not x > 0 for x in m):
            raise ValueError("masses must be positive")
        if abs(math.fsum(m) - 1.0) > 1e-12:
            raise ValueError(f"masses must sum to 1, got {math.fsum(m)}")
        object.__setattr__(self, "masses", m)

    @classmethod
    def uniform(cls, k: int) -> "DiscreteMeasure":
        return cls((1.0 / k,) * k)

    @classmethod
    def from_weights(cls, w: Sequence[float]) -> "DiscreteMeasure":
        """Normalize positive weights; the last mass absorbs the rounding."""
        w = np.asarray(w, dtype=float)
        m = list(w / math.fsum(w))
        m[-1] = 1.0 - math.fsum(m[:-1])
        return cls(tuple(m))


def jensen_min(alphas, f_values, mu: DiscreteMeasure, p) -> CheckResult:
    """``min_i a_i ((1/l) int f dmu)^p_i  <=  int min_i a_i f^p_i dmu``."""
    alphas = np.asarray(alphas, dtype=float)
    p = np.asarray(p, dtype=float)
    f = np.asarray(f_values, dtype=float)
    if alphas.shape != p.shape:
        raise ValueError("alphas and exponents must have the same length")
    if np.any(alphas < 0) or np.any(f < 0):
        raise ValueError("alphas and f must be nonnegative")
    if np.any(p < 1):
        raise ValueError("exponents must be >= 1")
    if f.shape != (len(mu.masses),):
        raise ValueError("f needs one value per atom")
    ell = len(alphas)
    m = np.asarray(mu.masses)
    mean = math.fsum(m * f) / ell
    lhs = float(np.min(alphas * mean**p))
    rhs = math.fsum(m * np.min(alphas[:, None] * f[None, :] ** p[:, None], axis=0))
    return CheckResult("jensen_min", lhs, rhs, lhs <= rhs * (1.0 + 1e-12), ratio(lhs, rhs))


@dataclass(frozen=True)
class PiecewiseConstant:
    """A nonnegative step function on ``(0, inf)``, zero outside ``[edges[0], edges[-1]]``."""

    edges: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        e = tuple(float(x) for x in self.edges)
        v = tuple(float(x) for x in self.values)
        if len(e) != len(v) + 1 or len(v) == 0:
            raise ValueError("need len(edges) == len(values) + 1 >= 2")
        if e[0] < 0 or any(not b > a for a, b in zip(e, e[1:])) or not math.isfinite(e[-1]):
            raise ValueError("edges must be finite, nonnegative and strictly increasing")
        if any(x < 0 or not math.isfinite(x) for x in v):
            raise ValueError("values must be finite and nonnegative")
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "values", v)

    def cumulative(self) -> np.ndarray:
        """``int_0^{edges[k]} g`` for every edge."""
        steps = np.diff(self.edges) * np.array(self.values)
        return np.concatenate([[0.0], np.cumsum(steps)])


def _power_integral(a: float, b: float, q: float) -> float:
    """``int_a^b r^(q-1) dr``."""
    if q == 0:
        return math.log(b / a) if a > 0 else math.inf
    if q < 0 and a == 0:
        return math.inf
    return (b**q - a**q) / q


def hardy_check(g: PiecewiseConstant, p: float, alpha: float, kind: str, tol: float = 1e-3) -> CheckResult:
    """Hardy inequalities for a step function ``g``.

    ``kind="zero"``: ``int (int_0^t g)^p t^(-1-alpha) dt <= (p/alpha)^p int g^p r^(p-1-alpha) dr``.

    ``kind="infinity"``: ``int (int_t^inf g)^p t^(alpha-1) dt <= (p/alpha)^p int g^p r^(p-1+alpha) dr``.
    """
    if not (math.isfinite(p) and p >= 1):
        raise ValueError(f"p must be >= 1, got {p}")
    if not (math.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be positive, got {alpha}")
    e = g.edges
    v = g.values
    cum = g.cumulative()
    total = cum[-1]
    factor = (p / alpha) ** p
    opts = dict(epsabs=0.0, epsrel=1e-12, limit=200)
    pieces = []
    if kind == "zero":
        for k in range(len(v)):
            if cum[k] == 0 and v[k] == 0:
                continue
            fn = lambda t, k=k: (cum[k] + v[k] * (t - e[k])) ** p * t ** (-1.0 - alpha)
            pieces.append(integrate.quad(fn, e[k], e[k + 1], **opts)[0])
        pieces.append(total**p * e[-1] ** (-alpha) / alpha if total > 0 else 0.0)
        rhs_terms = [v[k] ** p * _power_integral(e[k], e[k + 1], p - alpha) for k in range(len(v)) if v[k] > 0]
    elif kind == "infinity":
        if total > 0:
            pieces.append(total**p * e[0] ** alpha / alpha)
        for k in range(len(v)):
            rest = total - cum[k + 1]
            if rest == 0 and v[k] == 0:
                continue
            fn = lambda t, k=k, rest=rest: (rest + v[k] * (e[k + 1] - t)) ** p * t ** (alpha - 1.0)
            pieces.append(integrate.quad(fn, e[k], e[k + 1], **opts)[0])
        rhs_terms = [v[k] ** p * _power_integral(e[k], e[k + 1], p + alpha) for k in range(len(v)) if v[k] > 0]
    else:
        raise ValueError(f"kind must be 'zero' or 'infinity', got {kind!r}")
    lhs = math.fsum(pieces)
    rhs = factor * math.fsum(rhs_terms)
    return CheckResult(f"hardy_{kind}", lhs, rhs, lhs <= rhs * (1.0 + tol), ratio(lhs, rhs))


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(f, a: float, b: float, xtol: float) -> float:
    """Minimum value of a unimodal ``f`` on ``[a, b]``, endpoints included."""
    best = min(f(a), f(b))
    if b - a <= xtol:
        return best
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return min(best, fc, fd)


def inf_convolution_phi(alphas, p, t: float, xtol: float = 1e-9) -> tuple[float, float, float]:
    """``Phi(t) = inf { sum a_i |t_i|^p_i : sum t_i = t }`` for up to three terms.

    Returns ``(Phi(t), lower, upper)`` with ``lower = min_i a_i |t|^p_i / l^p_i`` and
    ``upper = min_i a_i |t|^p_i``.  Each term is even and increasing in ``|t_i|``,
    so the optimal parts share the sign of ``t`` and lie between 0 and ``t``;
    the nested minimizations run over those intervals.
    """
    alphas = [float(a) for a in alphas]
    p = [float(x) for x in p]
    ell = len(alphas)
    if ell != len(p) or ell == 0:
        raise ValueError("alphas and exponents must be nonempty and of equal length")
    if ell > 3:
        raise ValueError("inf-convolution is implemented for at most three terms")
    if any(not a > 0 for a in alphas):
        raise ValueError("alphas must be positive")
    if any(x < 1 for x in p):
        raise ValueError("exponents must be >= 1")
    t = float(t)
    at = abs(t)
    tol = xtol * max(at, 1e-300)

    def phi(k: int, x: float) -> float:
        """Inf-convolution of the first ``k`` terms at ``x >= 0``."""
        if k == 1:
            return alphas[0] * x ** p[0]
        if x == 0.0:
            return 0.0
        return golden_section_min(
            lambda y: phi(k - 1, x - y) + alphas[k - 1] * y ** p[k - 1], 0.0, x, tol
        )

    value = phi(ell, at)
    lower = min(a * at**q / ell**q for a, q in zip(alphas, p))
    upper = min(a * at**q for a, q in zip(alphas, p))
    return value, lower, upper


def integrability_bound(
    u: SampledFunction, fam: ExponentFamily, *, diagonal: str = "local-linear"
) -> CheckResult:
    """``iint |u(x) - u(y)| <= C (1 + min_functional(u))`` on a bounded domain.

    The constant is explicit: ``C_pair`` is the largest ratio
    ``|u(x) - u(y)| / (1 + min-integrand)`` over node pairs (and over the
    local linear model inside each cell), and ``C = C_pair * max(1, |Omega|^2)``.
    """
    if not u.domain.bounded:
        raise ValueError("the integrability bound needs a bounded domain")
    n = u.grid.dim
    p, e = _exponent_arrays(fam, n)
    lhs = _pair_energy(
        [u.values], u.grid, u.mask, np.array([1.0]), np.array([0.0]), np.ones(1), [0], "min", diagonal
    )
    emin = min_functional(u, fam, diagonal=diagonal)
    pts = u.grid.points[u.mask]
    v = u.values[u.mask]
    c_pair = 0.0
    P = pts.shape[0]
    block = max(1, _PAIR_BLOCK_ELEMENTS // max(P, 1))
    for a in range(0, P, block):
        b = min(a + block, P)
        d = np.sqrt(np.sum((pts[a:b, None, :] - pts[None, :, :]) ** 2, axis=-1))
        dv = np.abs(v[a:b, None] - v[None, :])
        off = d > 0
        dd = np.where(off, d, 1.0)
        m = np.min([dv ** p[i] / dd ** e[i] for i in range(fam.count)], axis=0)
        c_pair = max(c_pair, float(np.max(np.where(off, dv / (1.0 + m), 0.0))))
    if diagonal == "local-linear" and all(m >= 2 for m in u.grid.shape):
        g = np.gradient(u.values, *u.grid.spacing)
        g = [g] if n == 1 else g
        gnorm = np.sqrt(np.sum([gk[u.mask] ** 2 for gk in g], axis=0))
        c_pair = max(c_pair, float(np.max(gnorm)) * math.hypot(*u.grid.spacing))
    vol = u.domain.volume
    c_dom = c_pair * max(1.0, vol**2)
    rhs = c_dom * (1.0 + emin)
    return CheckResult(
        "integrability", lhs, rhs, lhs <= rhs * (1.0 + 1e-12), ratio(lhs, rhs),
        {"C_dom": c_dom, "E_min": emin},
    )
