"""CSV and JSON exchange formats for sampled functions and half-space fields.

A sampled function is stored as a CSV file with header ``x[,y],value`` (one
row per grid node, row-major) next to a JSON descriptor
``{"domain": ..., "grid": ..., "data_file": ...}``.  Values are written with
17 significant digits, which round-trips doubles exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .grid import Domain, Grid, HalfSpaceField, SampledFunction, TGrid

_FMT = "%.17g"
_AXES = ("x", "y")


class InputError(ValueError):
    """Malformed input file; the message names the file and the line."""

    def __init__(self, path, line: int | None, message: str):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


def _header(dim: int) -> list[str]:
    return list(_AXES[:dim])


def write_sampled(f: SampledFunction, stem) -> Path:
    """Write ``<stem>.csv`` and ``<stem>.json``; returns the descriptor path."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    data = stem.with_suffix(".csv")
    pts = f.grid.points.reshape(-1, f.grid.dim)
    vals = f.values.reshape(-1)
    with open(data, "w", newline="") as fh:
        fh.write(",".join(_header(f.grid.dim) + ["value"]) + "\n")
        for row, v in zip(pts, vals):
            fh.write(",".join(_FMT % c for c in row) + "," + _FMT % v + "\n")
    desc = stem.with_suffix(".json")
    payload = {"domain": f.domain.to_dict(), "grid": f.grid.to_dict(), "data_file": data.name}
    desc.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return desc


def _load_descriptor(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(path, None, f"cannot read descriptor ({exc.strerror})") from exc
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(path, exc.lineno, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(d, dict):
        raise InputError(path, 1, "descriptor must be a JSON object")
    missing = [k for k in ("domain", "grid", "data_file") if k not in d]
    if missing:
        raise InputError(path, None, f"descriptor lacks {', '.join(missing)}")
    return d


def _read_rows(path: Path, header: list[str]) -> np.ndarray:
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(path, None, f"cannot read data file ({exc.strerror})") from exc
    rows = []
    with fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None:
            raise InputError(path, 1, "empty file")
        if [c.strip() for c in first] != header:
            raise InputError(path, 1, f"expected header {','.join(header)}, got {','.join(first)}")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(path, line, f"expected {len(header)} columns, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise InputError(path, line, f"not a number: {exc}") from exc
    return np.array(rows, dtype=float).reshape(-1, len(header))


def _check_coordinates(path: Path, coords: np.ndarray, expected: np.ndarray, first_line: int = 2):
    bad = np.nonzero(np.any(~np.isclose(coords, expected, rtol=1e-12, atol=1e-12), axis=-1))[0]
    if bad.size:
        k = int(bad[0])
        raise InputError(path, first_line + k, f"node coordinates {coords[k].tolist()} do not match the grid")


def read_sampled(descriptor) -> SampledFunction:
    """Load a sampled function from its JSON descriptor."""
    desc = Path(descriptor)
    d = _load_descriptor(desc)
    try:
        domain = Domain.from_dict(d["domain"])
        grid = Grid.from_dict(d["grid"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(desc, None, f"bad domain or grid: {exc}") from exc
    data = desc.parent / d["data_file"]
    header = _header(grid.dim) + ["value"]
    rows = _read_rows(data, header)
    if rows.shape[0] != grid.size:
        raise InputError(data, rows.shape[0] + 1, f"expected {grid.size} data rows, got {rows.shape[0]}")
    _check_coordinates(data, rows[:, :-1], grid.points.reshape(-1, grid.dim))
    values = rows[:, -1].reshape(grid.shape)
    if not np.all(np.isfinite(values)):
        k = int(np.nonzero(~np.isfinite(values.ravel()))[0][0])
        raise InputError(data, k + 2, "value is not finite")
    return SampledFunction(domain, grid, values)


def write_field(F: HalfSpaceField, stem) -> Path:
    """Write a half-space field as ``x[,y],t,c0..`` rows plus a JSON descriptor."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    data = stem.with_suffix(".csv")
    xg = F.xgrid
    pts = xg.points.reshape(-1, xg.dim)
    comps = [f"c{c}" for c in range(F.components)]
    with open(data, "w", newline="") as fh:
        fh.write(",".join(_header(xg.dim) + ["t"] + comps) + "\n")
        for lev, t in enumerate(F.tgrid.nodes):
            block = F.values[:, lev].reshape(F.components, -1)
            tt = _FMT % t
            for k, row in enumerate(pts):
                coords = ",".join(_FMT % c for c in row)
                fh.write(coords + "," + tt + "," + ",".join(_FMT % v for v in block[:, k]) + "\n")
    desc = stem.with_suffix(".json")
    payload = {
        "domain": F.domain.to_dict(),
        "grid": F.base.to_dict(),
        "pad": F.pad,
        "tgrid": F.tgrid.to_dict(),
        "components": F.components,
        "data_file": data.name,
    }
    desc.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return desc


def read_field(descriptor) -> HalfSpaceField:
    desc = Path(descriptor)
    d = _load_descriptor(desc)
    try:
        domain = Domain.from_dict(d["domain"])
        base = Grid.from_dict(d["grid"])
        tgrid = TGrid.from_dict(d["tgrid"])
        pad = int(d["pad"])
        ncomp = int(d["components"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(desc, None, f"bad field descriptor: {exc}") from exc
    xg = base.padded(pad)
    header = _header(xg.dim) + ["t"] + [f"c{c}" for c in range(ncomp)]
    data = desc.parent / d["data_file"]
    rows = _read_rows(data, header)
    expected = xg.size * tgrid.levels
    if rows.shape[0] != expected:
        raise InputError(data, rows.shape[0] + 1, f"expected {expected} data rows, got {rows.shape[0]}")
    vals = rows[:, xg.dim + 1 :].T.reshape((ncomp, tgrid.levels) + xg.shape)
    return HalfSpaceField(domain, base, pad, tgrid, vals)
