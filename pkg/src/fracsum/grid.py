"""Domains, uniform grids, sampled fields and exponent families.

Every numerical routine in the package works on the same few immutable
containers defined here.  Grid nodes sit at cell centers, so a grid with
``N`` cells on ``[a, b]`` has nodes ``a + (k + 1/2) h`` with ``h = (b - a) / N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

SUPPORTED_DIMS = (1, 2)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ExponentFamily:
    """The pairs ``(s_i, p_i)`` that drive every min/max functional."""

    pairs: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pairs = tuple((float(s), float(p)) for s, p in self.pairs)
        if len(pairs) == 0:
            raise ValueError("an exponent family needs at least one (s, p) pair")
        for i, (s, p) in enumerate(pairs):
            if not (math.isfinite(s) and math.isfinite(p)):
                raise ValueError(f"pair {i}: values must be finite, got ({s}, {p})")
            if not 0.0 < s < 1.0:
                raise ValueError(f"pair {i}: s must lie in (0, 1), got {s}")
            if p < 1.0:
                raise ValueError(f"pair {i}: p must be >= 1, got {p}")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def parse(cls, text: str) -> "ExponentFamily":
        """Parse ``"0.3:1.5,0.7:1.2"`` into a family."""
        pairs = []
        for chunk in text.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            try:
                s, p = chunk.split(":")
                pairs.append((float(s), float(p)))
            except ValueError as exc:
                raise ValueError(f"cannot parse exponent pair {chunk!r}; expected s:p") from exc
        return cls(tuple(pairs))

    @property
    def count(self) -> int:
        return len(self.pairs)

    @property
    def s(self) -> np.ndarray:
        return np.array([s for s, _ in self.pairs])

    @property
    def p(self) -> np.ndarray:
        return np.array([p for _, p in self.pairs])

    def permuted(self, order: Sequence[int]) -> "ExponentFamily":
        return ExponentFamily(tuple(self.pairs[k] for k in order))

    def as_list(self) -> list[list[float]]:
        return [[s, p] for s, p in self.pairs]

    def __str__(self) -> str:
        return ",".join(f"{s:g}:{p:g}" for s, p in self.pairs)


@dataclass(frozen=True)
class Domain:
    """A computational domain in dimension 1 or 2.

    ``kind`` is ``"whole"`` (whole space truncated to the box ``[-L, L]^n``),
    ``"ball"`` (the open ball of radius ``R`` about the origin) or ``"box"``
    (explicit bounds per dimension).
    """

    kind: str
    dim: int
    size: float = 1.0
    bounds: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.dim not in SUPPORTED_DIMS:
            raise ValueError(f"dimension {self.dim} not supported (use 1 or 2)")
        if self.kind not in ("whole", "ball", "box"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "box":
            b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
            if len(b) != self.dim:
                raise ValueError("box bounds must have one (lo, hi) pair per dimension")
            if any(not hi > lo for lo, hi in b):
                raise ValueError(f"box bounds must satisfy lo < hi, got {b}")
            object.__setattr__(self, "bounds", b)
        else:
            if not (math.isfinite(self.size) and self.size > 0):
                raise ValueError(f"domain size must be positive, got {self.size}")
            object.__setattr__(self, "size", float(self.size))
            object.__setattr__(self, "bounds", ((-self.size, self.size),) * self.dim)

    @classmethod
    def whole(cls, dim: int, half_width: float) -> "Domain":
        return cls("whole", dim, half_width)

    @classmethod
    def ball(cls, dim: int, radius: float) -> "Domain":
        return cls("ball", dim, radius)

    @classmethod
    def box(cls, bounds: Sequence[Sequence[float]]) -> "Domain":
        bounds = tuple(tuple(b) for b in bounds)
        return cls("box", len(bounds), 1.0, bounds)

    @property
    def bounded(self) -> bool:
        return self.kind != "whole"

    @property
    def volume(self) -> float:
        if self.kind == "ball":
            return 2.0 * self.size if self.dim == 1 else math.pi * self.size**2
        return math.prod(hi - lo for lo, hi in self.bounds)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of points (shape ``(..., n)``) lying in the domain."""
        points = np.asarray(points, dtype=float)
        if self.kind == "ball":
            return np.sum(points**2, axis=-1) < self.size**2
        mask = np.ones(points.shape[:-1], dtype=bool)
        for k, (lo, hi) in enumerate(self.bounds):
            mask &= (points[..., k] >= lo) & (points[..., k] <= hi)
        return mask

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim}
        if self.kind == "box":
            out["bounds"] = [list(b) for b in self.bounds]
        else:
            out["size"] = self.size
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Domain":
        if d["kind"] == "box":
            return cls.box(d["bounds"])
        return cls(d["kind"], int(d["dim"]), float(d["size"]))


def distance(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Euclidean distance along the last axis."""
    return np.sqrt(np.sum((np.asarray(x) - np.asarray(y)) ** 2, axis=-1))


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on the box ``lower <= x <= upper``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    shape: tuple[int, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        shape = tuple(int(v) for v in self.shape)
        if not (len(lower) == len(upper) == len(shape)) or len(shape) not in SUPPORTED_DIMS:
            raise ValueError("grid lower/upper/shape must share a supported dimension")
        if any(n < 1 for n in shape):
            raise ValueError(f"grid needs at least one cell per dimension, got {shape}")
        if any(not u > l for l, u in zip(lower, upper)):
            raise ValueError("grid upper bounds must exceed lower bounds")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def on_domain(cls, domain: Domain, n_cells: int) -> "Grid":
        """Grid with ``n_cells`` cells per dimension on the domain's bounding box."""
        lo = tuple(b[0] for b in domain.bounds)
        hi = tuple(b[1] for b in domain.bounds)
        return cls(lo, hi, (n_cells,) * domain.dim)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((u - l) / n for l, u, n in zip(self.lower, self.upper, self.shape))

    @property
    def h(self) -> float:
        """Largest spacing (the grids built by the package are isotropic)."""
        return max(self.spacing)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(
            l + (np.arange(n) + 0.5) * hk
            for l, n, hk in zip(self.lower, self.shape, self.spacing)
        )

    @property
    def points(self) -> np.ndarray:
        """Node coordinates, shape ``shape + (n,)``, row-major order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def padded(self, cells: int) -> "Grid":
        """The same lattice extended by ``cells`` cells on every side."""
        hs = self.spacing
        return Grid(
            tuple(l - cells * hk for l, hk in zip(self.lower, hs)),
            tuple(u + cells * hk for u, hk in zip(self.upper, hs)),
            tuple(n + 2 * cells for n in self.shape),
        )

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.lower, self.upper, tuple(n * factor for n in self.shape))

    def to_dict(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper), "shape": list(self.shape)}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(tuple(d["lower"]), tuple(d["upper"]), tuple(d["shape"]))


def cell_quadrature_weights(grid: Grid, rule: str = "midpoint") -> np.ndarray:
    """Quadrature weights for the grid box.

    ``midpoint`` returns one weight per node (the cell volume).  ``trapezoid``
    returns weights for the ``N + 1`` cell vertices per dimension, which is the
    lattice on which the trapezoid rule is defined.  Both sum to the box volume.
    """
    if rule == "midpoint":
        return np.full(grid.shape, grid.cell_volume)
    if rule == "trapezoid":
        w = np.ones(1)
        for n, hk in zip(grid.shape, grid.spacing):
            wk = np.full(n + 1, hk)
            wk[0] = wk[-1] = 0.5 * hk
            w = np.multiply.outer(w, wk)
        return w.reshape(tuple(n + 1 for n in grid.shape))
    raise ValueError(f"unknown quadrature rule {rule!r}")


def grid_vertices(grid: Grid) -> tuple[np.ndarray, ...]:
    """Cell-vertex coordinates per dimension (the trapezoid lattice)."""
    return tuple(np.linspace(l, u, n + 1) for l, u, n in zip(grid.lower, grid.upper, grid.shape))


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values of a real function at the nodes of a grid covering a domain.

    Nodes outside a ball domain carry values too (they are ignored by
    integrals over the ball); ``mask`` tells which nodes belong to the domain.
    """

    domain: Domain
    grid: Grid
    values: np.ndarray
    lipschitz: float | None = None

    def __post_init__(self):
        if self.grid.dim != self.domain.dim:
            raise ValueError("grid and domain dimensions differ")
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("sampled values must be finite")
        object.__setattr__(self, "values", _readonly(v))

    @classmethod
    def from_callable(
        cls,
        domain: Domain,
        n_cells: int | Grid,
        f: Callable[[np.ndarray], np.ndarray],
        lipschitz: float | None = None,
    ) -> "SampledFunction":
        grid = n_cells if isinstance(n_cells, Grid) else Grid.on_domain(domain, n_cells)
        return cls(domain, grid, np.asarray(f(grid.points), dtype=float), lipschitz)

    @property
    def mask(self) -> np.ndarray:
        return self.domain.contains(self.grid.points)

    def with_values(self, values: np.ndarray, domain: Domain | None = None) -> "SampledFunction":
        return SampledFunction(domain or self.domain, self.grid, values)

    def mean(self) -> float:
        """Average over the domain nodes, computed relative to a reference value.

        Subtracting a reference before summing makes the mean of a constant
        function equal to that constant exactly.
        """
        vals = self.values[self.mask]
        if vals.size == 0:
            raise ValueError("domain contains no grid nodes")
        ref = float(vals.flat[0])
        return ref + math.fsum((vals - ref).ravel()) / vals.size

    def has_compact_support(self, margin_cells: int = 1, rtol: float = 1e-12) -> bool:
        """True when the values vanish on the outer ``margin_cells`` layers."""
        v = np.abs(self.values)
        scale = float(v.max()) if v.size else 0.0
        if scale == 0.0:
            return True
        inner = tuple(slice(margin_cells, n - margin_cells) for n in self.grid.shape)
        edge = v.copy()
        edge[inner] = 0.0
        return float(edge.max()) <= rtol * scale


def _locate(axis_lo: float, h: float, n: int, x: np.ndarray):
    """Cell index and fractional offset for linear interpolation along one axis."""
    pos = (x - (axis_lo + 0.5 * h)) / h
    inside = (pos >= 0.0) & (pos <= n - 1)
    if n == 1:
        return np.zeros(x.shape, dtype=np.intp), np.zeros_like(x), inside
    idx = np.clip(np.floor(pos), 0, n - 2).astype(np.intp)
    w = pos - idx
    return idx, w, inside


def interpolate_values(
    values: np.ndarray, grid: Grid, points: np.ndarray, clamp: bool = False
) -> np.ndarray:
    """Multilinear interpolation of node values at arbitrary points.

    Points outside the hull of the nodes give exactly 0, unless ``clamp`` is
    set, in which case they are projected onto the hull first.  The lerp form
    ``f0 + w (f1 - f0)`` reproduces constants exactly.
    """
    points = np.asarray(points, dtype=float)
    if points.shape[-1] != grid.dim:
        raise ValueError(f"points must have trailing dimension {grid.dim}")
    if not np.all(np.isfinite(points)):
        raise ValueError("interpolation points must be finite")
    inside = np.ones(points.shape[:-1], dtype=bool)
    locs = []
    for k in range(grid.dim):
        lo = grid.lower[k]
        hk = grid.spacing[k]
        x = points[..., k]
        if clamp:
            x = np.clip(x, lo + 0.5 * hk, grid.upper[k] - 0.5 * hk)
        idx, w, ins = _locate(lo, hk, grid.shape[k], x)
        inside &= ins
        locs.append((idx, w))
    if grid.dim == 1:
        (i, w), = locs
        f0 = values[i]
        f1 = values[np.minimum(i + 1, grid.shape[0] - 1)]
        out = f0 + w * (f1 - f0)
    else:
        (i, wx), (j, wy) = locs
        i1 = np.minimum(i + 1, grid.shape[0] - 1)
        j1 = np.minimum(j + 1, grid.shape[1] - 1)
        a = values[i, j] + wx * (values[i1, j] - values[i, j])
        b = values[i, j1] + wx * (values[i1, j1] - values[i, j1])
        out = a + wy * (b - a)
    return np.where(inside, out, 0.0)


def interpolate(f: SampledFunction, x) -> float | np.ndarray:
    """Interpolate ``f`` at one point or at an array of points of shape ``(..., n)``.

    In 1D a bare number or a 1D array of coordinates is also accepted.
    """
    pts = np.asarray(x, dtype=float)
    n = f.grid.dim
    if n == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
        single = pts.ndim == 0
        pts = pts[..., None]
    else:
        single = pts.ndim == 1
    out = interpolate_values(f.values, f.grid, pts)
    return float(out) if single else out


@dataclass(frozen=True)
class TGrid:
    """Geometric grid of scales ``t_k = t_min r^k``, ``k = 0..M-1``.

    Each node owns the log-cell ``[t_k / sqrt(r), t_k sqrt(r)]``; the weights are
    the cell lengths, so ``sum(weights * f(t))`` is the midpoint rule in ``log t``.
    """

    t_min: float
    t_max: float
    levels: int

    def __post_init__(self):
        if not (math.isfinite(self.t_min) and self.t_min > 0):
            raise ValueError(f"t_min must be positive, got {self.t_min}")
        if not (math.isfinite(self.t_max) and self.t_max > self.t_min):
            raise ValueError(f"t_max must exceed t_min, got {self.t_max}")
        if self.levels < 2:
            raise ValueError("the t-grid needs at least two levels")

    @property
    def ratio(self) -> float:
        return (self.t_max / self.t_min) ** (1.0 / (self.levels - 1))

    @property
    def nodes(self) -> np.ndarray:
        return self.t_min * self.ratio ** np.arange(self.levels)

    @property
    def weights(self) -> np.ndarray:
        r = self.ratio
        return self.nodes * (math.sqrt(r) - 1.0 / math.sqrt(r))

    @property
    def lower_edge(self) -> float:
        return self.t_min / math.sqrt(self.ratio)

    @property
    def upper_edge(self) -> float:
        return self.t_max * math.sqrt(self.ratio)

    def nearest(self, t: float) -> int:
        return int(np.argmin(np.abs(np.log(self.nodes / t))))

    def to_dict(self) -> dict:
        return {"t_min": self.t_min, "t_max": self.t_max, "levels": self.levels}

    @classmethod
    def from_dict(cls, d: dict) -> "TGrid":
        return cls(float(d["t_min"]), float(d["t_max"]), int(d["levels"]))


def default_tgrid(grid: Grid, half_width: float, levels: int = 64) -> TGrid:
    """Default scales: ``t_min = h / 4`` and ``t_max = 16 L`` (1D) or ``2 L`` (2D).

    One dimension affords the long range, which together with the power-law
    tail closure keeps the truncation error well below the grid error.  In two
    dimensions the slab padding grows with ``t_max`` and the range is cut back.
    """
    t_max = (16.0 if grid.dim == 1 else 2.0) * half_width
    return TGrid(grid.h / 4.0, t_max, levels)


@dataclass(frozen=True, eq=False)
class HalfSpaceField:
    """Samples of a scalar or vector field on ``R^n x (0, inf)``.

    ``values`` has shape ``(components, levels) + xgrid.shape``; the x-grid is
    the ``base`` grid padded by ``pad`` cells on each side, so that every node
    reached by the scale-``t`` kernels stays inside the slab.  Gradient fields
    have ``n + 1`` components ordered ``(d/dx_1, ..., d/dx_n, d/dt)``.
    """

    domain: Domain
    base: Grid
    pad: int
    tgrid: TGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        shape = (self.tgrid.levels,) + self.xgrid.shape
        if v.ndim != len(shape) + 1 or v.shape[1:] != shape:
            raise ValueError(f"field shape {v.shape} does not match (c,) + {shape}")
        if v.shape[0] not in (1, self.base.dim + 1):
            raise ValueError("a field has 1 (scalar) or n + 1 (gradient) components")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def xgrid(self) -> Grid:
        return self.base.padded(self.pad)

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def components(self) -> int:
        return self.values.shape[0]

    @property
    def base_slice(self) -> tuple[slice, ...]:
        return tuple(slice(self.pad, self.pad + n) for n in self.base.shape)

    def magnitude(self) -> np.ndarray:
        """Euclidean norm over components, shape ``(levels,) + xgrid.shape``."""
        return np.sqrt(np.sum(self.values**2, axis=0))

    def with_values(self, values: np.ndarray) -> "HalfSpaceField":
        return HalfSpaceField(self.domain, self.base, self.pad, self.tgrid, values)
