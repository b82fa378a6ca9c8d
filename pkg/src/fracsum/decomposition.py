"""Splitting a function into pieces of different fractional smoothness.

The gradient of the extension is cut into the fields ``Theta_i = 1_{A_i} grad U``
where ``A_i`` collects the nodes at which exponent pair ``i`` gives the smallest
weighted energy; reconstructing each ``Theta_i`` gives the component ``u_i``.
Balls are handled by inversion through the sphere, a cutoff and the
whole-space construction.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .extension import Mollifier, gradient_field, make_bump_mollifier, weighted_energy_terms
from .functionals import CheckResult, max_functional, min_functional, ratio
from .grid import (
    Domain,
    ExponentFamily,
    Grid,
    HalfSpaceField,
    SampledFunction,
    TGrid,
    interpolate_values,
)
from .reconstruction import ReconstructionKernel, canonical_kernel, reconstruct, reconstruction_tail


@dataclass(frozen=True, eq=False)
class PartitionMask:
    """Index in ``1..l`` assigned to every ``(t, x)`` node of a field."""

    index: np.ndarray

    def __post_init__(self):
        self.index.setflags(write=False)

    def indicator(self, i: int) -> np.ndarray:
        return self.index == i


def partition_argmin(G: HalfSpaceField, fam: ExponentFamily):
    """Assign each node the smallest index minimizing ``|G|^p_i / t^(1 - (1 - s_i) p_i)``.

    ``np.argmin`` returns the first minimizer, so a node is given index ``i``
    exactly when pair ``i`` is strictly better than every earlier pair and no
    worse than every later one.  Returns the mask and the fields ``Theta_i``.
    """
    terms = weighted_energy_terms(G, fam)
    index = np.argmin(terms, axis=0) + 1
    mask = PartitionMask(index.astype(np.int16))
    thetas = [G.with_values(np.where(index == i + 1, G.values, 0.0)) for i in range(fam.count)]
    return mask, thetas


def energy_split(G: HalfSpaceField, fam: ExponentFamily, mask: PartitionMask) -> tuple[float, float]:
    """``(sum_i energy_i(Theta_i), min-energy(G))`` over the grid nodes.

    Both sides are exactly rounded sums of the same nonzero node terms, so they
    agree bit for bit.
    """
    terms = weighted_energy_terms(G, fam)
    node_min = np.min(terms, axis=0)
    split = math.fsum(
        v for i in range(fam.count) for v in np.where(mask.index == i + 1, terms[i], 0.0).ravel()
    )
    return split, math.fsum(node_min.ravel())


@dataclass(frozen=True)
class Decomposition:
    components: tuple[SampledFunction, ...]
    fam: ExponentFamily
    diagnostics: dict = field(default_factory=dict)

    @property
    def total(self) -> np.ndarray:
        return np.sum([c.values for c in self.components], axis=0)


def _diagnostics(u: SampledFunction, comps, fam, extra: dict) -> dict:
    mask = u.mask
    resid = float(np.max(np.abs(u.values - np.sum([c.values for c in comps], axis=0))[mask]))
    scale = float(np.max(np.abs(u.values[mask])))
    e_min = min_functional(u, fam)
    e_max = max_functional(list(comps), fam)
    out = {
        "residual_inf": resid,
        "residual_rel": resid / scale if scale > 0 else (0.0 if resid == 0 else math.inf),
        "E_min": e_min,
        "E_max": e_max,
        "constant": ratio(e_max, e_min),
        "component_energies": [
            min_functional(c, ExponentFamily((pair,))) for c, pair in zip(comps, fam.pairs)
        ],
        "component_means": [c.mean() for c in comps],
    }
    out.update(extra)
    return out


def decompose_whole_space(
    u: SampledFunction,
    fam: ExponentFamily,
    phi: Mollifier | None = None,
    psi: ReconstructionKernel | None = None,
    tgrid: TGrid | None = None,
    K: int = 256,
) -> Decomposition:
    """Components ``u_1 .. u_l`` of a compactly supported ``u`` with ``sum u_i ~ u``."""
    started = time.perf_counter()
    if u.domain.kind == "ball":
        raise ValueError("use decompose_ball for ball domains")
    if not u.has_compact_support():
        raise ValueError("the function must vanish on the outer cells of the box")
    phi = phi or make_bump_mollifier(u.grid.dim)
    psi = psi or canonical_kernel(phi)
    G = gradient_field(u, phi, tgrid, K)
    mask, thetas = partition_argmin(G, fam)
    comps = tuple(reconstruct(psi, th) for th in thetas)
    split, total = energy_split(G, fam, mask)
    tail = float(np.max(np.abs(reconstruction_tail(psi, G))))
    diag = _diagnostics(
        u, comps, fam,
        {
            "field_energy": total,
            "field_energy_split": split,
            "tail_estimate": tail,
            "nodes_per_index": [int(np.count_nonzero(mask.index == i + 1)) for i in range(fam.count)],
        },
    )
    diag["runtime"] = time.perf_counter() - started
    return Decomposition(comps, fam, diag)


# ---------------------------------------------------------------------------
# Cutoffs and balls


def smooth_step(x: np.ndarray) -> np.ndarray:
    """Smooth transition from 1 (``x <= 0``) to 0 (``x >= 1``)."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x < 1.0, np.exp(-1.0 / np.where(x < 1.0, 1.0 - x, 1.0)), 0.0)
        b = np.where(x > 0.0, np.exp(-1.0 / np.where(x > 0.0, x, 1.0)), 0.0)
    return a / (a + b)


def radial_cutoff(inner: float, outer: float) -> Callable[[np.ndarray], np.ndarray]:
    """``eta(x) = 1`` for ``|x| <= inner`` and ``0`` for ``|x| >= outer``, smooth between."""
    if not 0 <= inner < outer:
        raise ValueError("need 0 <= inner < outer")

    def eta(points):
        r = np.sqrt(np.sum(np.asarray(points) ** 2, axis=-1))
        return smooth_step((r - inner) / (outer - inner))

    return eta


def _smooth_step_lipschitz() -> float:
    x = np.linspace(0.0, 1.0, 200_001)
    return float(np.max(np.abs(np.diff(smooth_step(x)))) / (x[1] - x[0]))


def cutoff_lipschitz(inner: float, outer: float) -> float:
    return _smooth_step_lipschitz() / (outer - inner)


def cutoff(
    u: SampledFunction,
    eta: SampledFunction,
    fam: ExponentFamily,
    lipschitz: float | None = None,
    mean_tol: float = 1e-10,
):
    """Multiply a mean-zero function on a ball by a cutoff supported in the ball.

    Returns ``(eta u extended by zero, CheckResult)`` where the check compares
    the whole-space min-functional of ``eta u`` with the min-functional of
    ``R Lip(eta) u`` over the ball.
    """
    if u.domain.kind != "ball":
        raise ValueError("the cutoff estimate is stated on a ball")
    if eta.grid != u.grid:
        raise ValueError("cutoff and function must share the grid")
    R = u.domain.size
    mask = u.mask
    scale = float(np.max(np.abs(u.values[mask]))) if np.any(mask) else 0.0
    mean = u.mean()
    if abs(mean) > mean_tol * max(scale, 1.0):
        raise ValueError(f"the function must have zero mean on the ball, got {mean:.3e}")
    lip = lipschitz if lipschitz is not None else eta.lipschitz
    if lip is None:
        g = np.gradient(eta.values, *eta.grid.spacing)
        g = [g] if eta.grid.dim == 1 else g
        lip = float(np.max(np.sqrt(np.sum([gk**2 for gk in g], axis=0))))
    # Support check: a Lipschitz function supported in the closed ball obeys
    # |eta(x)| <= Lip * (R - |x|) inside and vanishes outside.
    r = np.sqrt(np.sum(u.grid.points**2, axis=-1))
    slack = 1e-9 + 1e-9 * lip * R
    if np.any(np.abs(eta.values[~mask]) > slack) or np.any(
        np.abs(eta.values[mask]) > lip * (R - r[mask]) + slack
    ):
        raise ValueError("the cutoff is not supported in the ball")
    product = SampledFunction(Domain.whole(u.grid.dim, R), u.grid, np.where(mask, eta.values * u.values, 0.0))
    lhs = min_functional(product, fam, exterior=True)
    scaled = u.with_values(R * lip * u.values)
    rhs = min_functional(scaled, fam)
    c = ratio(lhs, rhs)
    return product, CheckResult("cutoff", lhs, rhs, c is not None and math.isfinite(c), c, {"lipschitz": lip})


def truncate_uR(u: SampledFunction, R: float, profile: Callable[[np.ndarray], np.ndarray] | None = None) -> SampledFunction:
    """``u^R(x) = eta(x / R) (u(x) - mean of u over B(0, R))``.

    ``profile`` must equal 1 on ``B(0, 1/2)`` and vanish outside ``B(0, 1)``.
    """
    profile = profile or radial_cutoff(0.5, 1.0)
    if any(R > min(-l, h) + 1e-12 for l, h in zip(u.grid.lower, u.grid.upper)):
        raise ValueError(f"R = {R} exceeds the grid box")
    pts = u.grid.points
    ball = SampledFunction(Domain.ball(u.grid.dim, R), u.grid, u.values)
    mean = ball.mean()
    eta = profile(pts / R)
    r = np.sqrt(np.sum(pts**2, axis=-1))
    vals = np.where(r < 0.5 * R, u.values - mean, eta * (u.values - mean))
    return SampledFunction(u.domain, u.grid, vals)


def ball_extension(u: SampledFunction, fam: ExponentFamily | None = None):
    """Extend ``u`` from ``B(0, R)`` to ``B(0, 2R)`` by inversion in the sphere.

    The result lives on a grid with the same spacing covering ``[-2R, 2R]^n``;
    nodes in ``B(0, R)`` copy ``u`` and nodes in the annulus take
    ``u(R^2 x / |x|^2)`` by interpolation.  The image of an annulus node can
    fall in the half cell between the last node and the sphere; there the
    interpolant is clamped to the node hull.  With ``fam`` the min-functionals
    over both balls are compared.
    """
    if u.domain.kind != "ball":
        raise ValueError("ball_extension needs a ball domain")
    R = u.domain.size
    n = u.grid.dim
    N = u.grid.shape[0]
    if N % 2:
        raise ValueError("use an even number of cells so the doubled grid nests")
    big = Grid((-2 * R,) * n, (2 * R,) * n, (2 * N,) * n)
    pts = big.points
    r2 = np.sum(pts**2, axis=-1)
    sl = tuple(slice(N // 2, N // 2 + N) for _ in range(n))
    inner = np.zeros(big.shape, dtype=bool)
    inner[sl] = u.mask
    outer = ~inner & (r2 < 4 * R * R)
    vals = np.zeros(big.shape)
    vals[sl] = np.where(u.mask, u.values, 0.0)
    img = (R * R / np.where(outer, r2, 1.0))[..., None] * pts
    vals[outer] = interpolate_values(u.values, u.grid, img[outer], clamp=True)
    ext = SampledFunction(Domain.ball(n, 2 * R), big, vals)
    if fam is None:
        return ext, None
    lhs = min_functional(ext, fam)
    rhs = min_functional(u, fam)
    c = ratio(lhs, rhs)
    return ext, CheckResult("ball_extension", lhs, rhs, c is not None and math.isfinite(c), c)


def decompose_ball(
    u: SampledFunction,
    fam: ExponentFamily,
    phi: Mollifier | None = None,
    psi: ReconstructionKernel | None = None,
    eta: Callable[[np.ndarray], np.ndarray] | None = None,
    tgrid: TGrid | None = None,
    K: int = 256,
) -> Decomposition:
    """Decompose a function on ``B(0, R)``.

    Steps: invert to ``B(0, 2R)``, subtract the mean over ``B(0, 2R)``, apply a
    cutoff equal to 1 on ``B(0, R)`` and 0 outside ``B(0, 2R)``, decompose in the
    whole space, then give every component ``1/l`` of the mean back and
    restrict to ``B(0, R)``.  The whole-space step runs on ``[-3R, 3R]^n`` so
    the cut function vanishes on a margin around its support.
    """
    started = time.perf_counter()
    if u.domain.kind != "ball":
        raise ValueError("decompose_ball needs a ball domain")
    R = u.domain.size
    n = u.grid.dim
    N = u.grid.shape[0]
    ext, _ = ball_extension(u)
    mean = ext.mean()
    eta = eta or radial_cutoff(R, 2 * R)
    wide = Grid((-3 * R,) * n, (3 * R,) * n, (3 * N,) * n)
    vals = np.zeros(wide.shape)
    sl = tuple(slice(N // 2, N // 2 + 2 * N) for _ in range(n))
    vals[sl] = np.where(ext.mask, ext.values - mean, 0.0) * eta(ext.grid.points)
    v = SampledFunction(Domain.whole(n, 3 * R), wide, vals)
    inner = decompose_whole_space(v, fam, phi, psi, tgrid, K)
    ell = fam.count
    keep = tuple(slice(N, 2 * N) for _ in range(n))
    comps = tuple(
        SampledFunction(u.domain, u.grid, c.values[keep] + mean / ell) for c in inner.components
    )
    diag = _diagnostics(
        u, comps, fam,
        {
            "mean_2R": mean,
            "whole_space_residual_inf": inner.diagnostics["residual_inf"],
            "tail_estimate": inner.diagnostics["tail_estimate"],
        },
    )
    diag["runtime"] = time.perf_counter() - started
    return Decomposition(comps, fam, diag)
