"""Run every inequality check on a corpus of functions and collect the evidence.

A :class:`VerificationReport` holds one record per check, function,
resolution and exponent family, the stability ratios of every empirical
constant across consecutive resolutions, and an optional scan of the trace
constant against ``s``.  The JSON form contains no timings, so two runs with
the same settings produce identical files.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import CORPUS, get_function
from .decomposition import (
    cutoff,
    cutoff_lipschitz,
    decompose_ball,
    decompose_whole_space,
    energy_split,
    partition_argmin,
    radial_cutoff,
    ball_extension,
)
from .extension import extension_energy_check, gradient_field, make_bump_mollifier
from .functionals import (
    CheckResult,
    gagliardo_seminorm,
    integrability_bound,
    min_functional,
    ratio,
    sum_estimate_check,
)
from .grid import Domain, ExponentFamily, Grid, SampledFunction, TGrid, default_tgrid
from .reconstruction import canonical_kernel, reconstruct, trace_estimate_check

STABILITY_FACTOR = 2.0

# Plain-language statement attached to every record.
STATEMENTS = {
    "min_below_seminorms": "min-functional is at most every single seminorm",
    "sum_estimate": "min-functional of a sum is bounded by the scaled max-functional of its terms",
    "integrability": "L1 pair integral is bounded by 1 + min-functional on a bounded domain",
    "extension_energy": "weighted min-energy of the extension gradient is bounded by the min-functional",
    "partition_sum": "the argmin pieces add up to the extension gradient",
    "energy_split": "the argmin pieces split the weighted min-energy exactly",
    "reconstruction": "reconstructing the extension gradient recovers the function",
    "trace_estimate": "seminorm of a reconstruction is bounded by the weighted field energy",
    "decompose_whole_space": "components add up to the function and obey the max/min energy bound",
    "decompose_ball": "ball components add up to the function and obey the max/min energy bound",
    "cutoff": "min-functional of a cut-off mean-zero function is bounded on the ball",
    "ball_extension": "min-functional of the inversion extension is bounded by the ball one",
}


@dataclass(frozen=True)
class VerifySettings:
    """Numerical parameters shared by all checks of a corpus run."""

    dim: int = 1
    half_width: float = 2.0
    radius: float = 1.0
    ball_offset: float = 0.4
    levels: int = 64
    K: int = 256
    t_min: float | None = None
    t_max: float | None = None
    seed: int = 0
    tol: float = 1e-3
    exact_tol: float = 1e-12
    residual_tol: float = 5e-2
    trace_pair: tuple[float, float] = (0.5, 2.0)
    blowup_s: tuple[float, ...] = (0.5, 0.7, 0.9)
    blowup_p: float = 2.0

    def tgrid(self, grid: Grid, half_width: float) -> TGrid:
        base = default_tgrid(grid, half_width, self.levels)
        return TGrid(self.t_min or base.t_min, self.t_max or base.t_max, self.levels)


@dataclass(frozen=True)
class BlowupSeries:
    s: tuple[float, ...]
    constants: tuple[float | None, ...]
    increasing_tail: bool
    tail_from: float = 0.7

    def to_dict(self) -> dict:
        return {
            "s": list(self.s),
            "constants": list(self.constants),
            "increasing_tail": self.increasing_tail,
            "tail_from": self.tail_from,
        }


@dataclass
class VerificationReport:
    corpus: tuple[str, ...] = ()
    resolutions: tuple[int, ...] = ()
    families: tuple[ExponentFamily, ...] = ()
    settings: VerifySettings = field(default_factory=VerifySettings)
    records: list[dict] = field(default_factory=list)
    stability: list[dict] = field(default_factory=list)
    blowup: BlowupSeries | None = None

    @property
    def all_hold(self) -> bool:
        return all(r["holds"] for r in self.records) and all(s["stable"] for s in self.stability)

    @property
    def passed(self) -> bool:
        """Every record, every stability ratio and the blow-up scan (if run) pass."""
        return self.all_hold and (self.blowup is None or self.blowup.increasing_tail)

    def failures(self) -> list[str]:
        out = [f"{r['name']} [{r['function']}, N={r['resolution']}, fam={r['fam']}]" for r in self.records if not r["holds"]]
        out += [f"stability of {s['name']} [{s['function']}, fam={s['fam']}]" for s in self.stability if not s["stable"]]
        if self.blowup is not None and not self.blowup.increasing_tail:
            out.append("blow-up scan: trace constant does not increase on the upper s tail")
        return out

    def to_dict(self) -> dict:
        s = self.settings
        return {
            "corpus": list(self.corpus),
            "resolutions": list(self.resolutions),
            "families": [str(f) for f in self.families],
            "settings": {
                "dim": s.dim,
                "half_width": s.half_width,
                "radius": s.radius,
                "ball_offset": s.ball_offset,
                "levels": s.levels,
                "K": s.K,
                "t_min": s.t_min,
                "t_max": s.t_max,
                "seed": s.seed,
                "tol": s.tol,
                "residual_tol": s.residual_tol,
            },
            "records": self.records,
            "stability": self.stability,
            "blowup": self.blowup.to_dict() if self.blowup is not None else None,
            "all_hold": self.all_hold,
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(_clean(self.to_dict()), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json())
        return path


def _clean(obj):
    """Make a structure JSON-safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def _finite(c) -> bool:
    return c is not None and math.isfinite(c)


# ---------------------------------------------------------------------------
# Per-function checks


def _record(res: CheckResult, func: str, N: int, grid: Grid, fam: ExponentFamily | None, tol: float) -> dict:
    rec = res.to_record(grid, fam)
    rec["statement"] = STATEMENTS.get(res.name, res.name)
    rec["function"] = func
    rec["resolution"] = N
    rec["tolerance"] = tol
    return rec


def _sample(name: str, domain: Domain, N: int, seed: int, center=None) -> SampledFunction:
    f = get_function(name, seed)
    return SampledFunction.from_callable(domain, N, lambda x: f(x, center=center))


def _function_checks(name: str, N: int, fams: Sequence[ExponentFamily], st: VerifySettings) -> list[dict]:
    n = st.dim
    L, R = st.half_width, st.radius
    u = _sample(name, Domain.whole(n, L), N, st.seed)
    center = [st.ball_offset] + [0.0] * (n - 1)
    ub = _sample(name, Domain.ball(n, R), N, st.seed, center)
    phi = make_bump_mollifier(n)
    psi = canonical_kernel(phi)
    tg = st.tgrid(u.grid, L)
    G = gradient_field(u, phi, tg, st.K)
    recs: list[dict] = []
    add = lambda res, fam, tol: recs.append(_record(res, name, N, u.grid, fam, tol))

    # Reconstruction identity and trace estimate; these do not depend on the family.
    v = reconstruct(psi, G)
    scale = float(np.max(np.abs(u.values)))
    err = float(np.max(np.abs(v.values - u.values))) / scale
    add(CheckResult("reconstruction", err, st.residual_tol, err <= st.residual_tol, None, {"relative_error": err}), None, st.residual_tol)
    s, p = st.trace_pair
    add(trace_estimate_check(psi, G, s, p), ExponentFamily(((s, p),)), st.tol)

    # Cutoff of the mean-zero ball function by a cutoff vanishing at the sphere.
    ub0 = ub.with_values(ub.values - ub.mean())
    eta_fn = radial_cutoff(0.5 * R, R)
    eta = SampledFunction.from_callable(ub.domain, ub.grid, eta_fn)
    lip = cutoff_lipschitz(0.5 * R, R)

    for fam in fams:
        # Functionals on the whole-space sample.
        emin = min_functional(u, fam, exterior=True)
        singles = [gagliardo_seminorm(u, si, pi, exterior=True) for si, pi in fam.pairs]
        bound = min(singles)
        add(CheckResult("min_below_seminorms", emin, bound, emin <= bound * (1 + st.exact_tol), None, {"seminorms": singles}), fam, st.exact_tol)
        add(integrability_bound(ub, fam), fam, st.exact_tol)
        add(extension_energy_check(u, fam, phi, tg, st.K, G=G), fam, st.tol)

        mask, thetas = partition_argmin(G, fam)
        total = np.sum([th.values for th in thetas], axis=0)
        dev = float(np.max(np.abs(total - G.values)))
        add(CheckResult("partition_sum", dev, 0.0, dev == 0.0, None), fam, 0.0)
        split, emin_field = energy_split(G, fam, mask)
        rel = abs(split - emin_field) / emin_field if emin_field else abs(split)
        add(CheckResult("energy_split", split, emin_field, rel <= st.exact_tol, None, {"relative_gap": rel}), fam, st.exact_tol)

        dec = decompose_whole_space(u, fam, phi, psi, tg, st.K)
        d = dec.diagnostics
        ok = d["residual_rel"] <= st.residual_tol and _finite(d["constant"])
        add(CheckResult("decompose_whole_space", d["E_max"], d["E_min"], ok, d["constant"],
                        {"residual_rel": d["residual_rel"], "tail_estimate": d["tail_estimate"]}), fam, st.residual_tol)
        se = sum_estimate_check(list(dec.components), fam)
        add(CheckResult("sum_estimate", se.lhs, se.rhs, se.holds and se.pointwise_holds, ratio(se.lhs, se.rhs),
                        {"pointwise_violations": se.pointwise_violations}), fam, st.exact_tol)

        dball = decompose_ball(ub, fam, phi, psi, tgrid=st.tgrid(ub.grid, 3 * R), K=st.K)
        d = dball.diagnostics
        ok = d["residual_rel"] <= st.residual_tol and _finite(d["constant"])
        add(CheckResult("decompose_ball", d["E_max"], d["E_min"], ok, d["constant"],
                        {"residual_rel": d["residual_rel"], "tail_estimate": d["tail_estimate"]}), fam, st.residual_tol)

        _, res = cutoff(ub0, eta, fam, lipschitz=lip)
        add(res, fam, st.tol)
        _, res = ball_extension(ub, fam)
        add(res, fam, st.tol)
    return recs


def _stability(records: list[dict], resolutions: Sequence[int]) -> list[dict]:
    out = []
    keyed: dict[tuple, dict[int, float | None]] = {}
    for r in records:
        if r.get("constant") is None and r["name"] not in ("decompose_whole_space", "decompose_ball"):
            continue
        key = (r["name"], r["function"], json.dumps(r["fam"]))
        keyed.setdefault(key, {})[r["resolution"]] = r["constant"]
    for (name, func, fam), series in sorted(keyed.items()):
        for a, b in zip(resolutions, resolutions[1:]):
            ca, cb = series.get(a), series.get(b)
            if ca is None or cb is None or ca == 0.0:
                stable = ca == cb == 0.0
                ratio_ = None
            else:
                ratio_ = cb / ca
                stable = 1.0 / STABILITY_FACTOR <= ratio_ <= STABILITY_FACTOR
            out.append({
                "name": name, "function": func, "fam": json.loads(fam),
                "from": a, "to": b, "ratio": ratio_, "stable": bool(stable),
            })
    return out


def blowup_scan(
    u: SampledFunction,
    p: float,
    s_values: Sequence[float],
    K: int = 256,
    tgrid: TGrid | None = None,
    tail_from: float = 0.7,
) -> BlowupSeries:
    """Trace-estimate constants of ``grad U`` for each ``s``.

    ``increasing_tail`` reports whether the constants increase strictly over
    the values ``s >= tail_from``.
    """
    s_values = tuple(float(s) for s in s_values)
    if any(not 0.0 < s < 1.0 for s in s_values):
        raise ValueError("every s must lie in (0, 1)")
    if not s_values:
        return BlowupSeries((), (), True, tail_from)
    phi = make_bump_mollifier(u.grid.dim)
    G = gradient_field(u, phi, tgrid, K)
    psi = canonical_kernel(phi)
    consts = tuple(trace_estimate_check(psi, G, s, p).constant for s in s_values)
    tail = [c for s, c in sorted(zip(s_values, consts)) if s >= tail_from]
    inc = all(a is not None and b is not None and b > a for a, b in zip(tail, tail[1:]))
    return BlowupSeries(s_values, consts, inc, tail_from)


def run_corpus(
    corpus: Sequence[str],
    fams: Sequence[ExponentFamily] | ExponentFamily,
    resolutions: Sequence[int],
    settings: VerifySettings | None = None,
) -> VerificationReport:
    """Run all checks for every function, family and resolution.

    When the bump is in the corpus and ``settings.blowup_s`` is non-empty the
    trace constant is scanned over ``s`` at the finest resolution.
    """
    st = settings or VerifySettings()
    if isinstance(fams, ExponentFamily):
        fams = [fams]
    unknown = [c for c in corpus if c not in CORPUS]
    if unknown:
        raise ValueError(f"unknown corpus function(s) {unknown}; choose from {list(CORPUS)}")
    resolutions = tuple(int(r) for r in resolutions)
    if any(r < 4 or r % 2 for r in resolutions):
        raise ValueError("resolutions must be even and at least 4")
    report = VerificationReport(tuple(corpus), resolutions, tuple(fams), st)
    if not corpus:
        return report
    for name in corpus:
        for N in resolutions:
            report.records.extend(_function_checks(name, N, fams, st))
    report.stability = _stability(report.records, resolutions)
    if "bump" in corpus and st.blowup_s and resolutions:
        N = max(resolutions)
        u = _sample("bump", Domain.whole(st.dim, st.half_width), N, st.seed)
        report.blowup = blowup_scan(u, st.blowup_p, st.blowup_s, st.K, st.tgrid(u.grid, st.half_width))
    return report


def write_plot_data(report: VerificationReport, out_dir) -> list[Path]:
    """CSV series: constant against resolution, and trace constant against ``s``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    path = out_dir / "constants_vs_resolution.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "function", "fam", "resolution", "constant"])
        for r in report.records:
            if r.get("constant") is None:
                continue
            fam = ";".join(f"{s}:{p}" for s, p in r["fam"]) if r["fam"] else ""
            w.writerow([r["name"], r["function"], fam, r["resolution"], "%.17g" % r["constant"]])
    paths.append(path)
    if report.blowup is not None:
        path = out_dir / "constant_vs_s.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "constant"])
            for s, c in zip(report.blowup.s, report.blowup.constants):
                w.writerow(["%.17g" % s, "" if c is None else "%.17g" % c])
        paths.append(path)
    return paths
