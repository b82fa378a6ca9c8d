"""Command-line front end.

Exit codes: 0 when every requested check holds, 1 when a check fails, 2 on a
usage, configuration or input error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

from . import parallel
from .corpus import CORPUS, get_function
from .decomposition import decompose_ball, decompose_whole_space
from .extension import extend_half_space, extension_energy_check, gradient_field, make_bump_mollifier
from .functionals import CheckResult, gagliardo_seminorm, min_functional
from .grid import Domain, ExponentFamily, SampledFunction, TGrid, default_tgrid
from .io import InputError, read_sampled, write_field, write_sampled
from .reconstruction import canonical_kernel, validate_kernel
from .verify import VerifySettings, _clean, run_corpus, write_plot_data

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DOMAIN_KINDS = ("auto", "whole", "ball", "box")
FUNCTIONS = tuple(CORPUS) + ("linear",)


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))


@dataclass
class RunConfig:
    """All user-settable parameters; every field has a usable default."""

    dim: int = 1
    domain: str = "auto"
    half_width: float = 2.0
    radius: float = 1.0
    bounds: list | None = None
    ball_offset: float = 0.4
    n_cells: int = 256
    levels: int = 64
    K: int = 256
    t_min: float | None = None
    t_max: float | None = None
    families: list = field(default_factory=lambda: ["0.3:1.5,0.7:1.2"])
    corpus: list = field(default_factory=lambda: list(CORPUS))
    resolutions: list = field(default_factory=lambda: [128, 256])
    function: str = "bump"
    input: str | None = None
    s: float = 0.5
    p: float = 2.0
    tol: float = 1e-3
    residual_tol: float = 5e-2
    blowup_s: list = field(default_factory=lambda: [0.5, 0.7, 0.9])
    seed: int = 0
    threads: int | None = None
    out: str = "out"

    def to_dict(self) -> dict:
        return asdict(self)

    def exponent_families(self) -> list[ExponentFamily]:
        return [ExponentFamily.parse(f) if isinstance(f, str) else ExponentFamily(tuple(map(tuple, f))) for f in self.families]


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and math.isfinite(v)


def validate_config(raw: dict) -> RunConfig:
    """Check every field and report all problems at once."""
    problems: list[str] = []
    for key in sorted(raw):
        if key not in _FIELDS:
            problems.append(f"{key}: unknown field")
    v = {k: raw[k] for k in raw if k in _FIELDS}

    def need(name, ok, msg):
        if name in v and not ok(v[name]):
            problems.append(f"{name}: {msg}, got {v[name]!r}")

    need("dim", lambda x: x in (1, 2), "must be 1 or 2")
    need("domain", lambda x: x in DOMAIN_KINDS, f"must be one of {list(DOMAIN_KINDS)}")
    for name in ("half_width", "radius", "tol", "residual_tol"):
        need(name, lambda x: _is_num(x) and x > 0, "must be a positive number")
    need("ball_offset", lambda x: _is_num(x) and 0 <= x < 1, "must lie in [0, 1)")
    need("n_cells", lambda x: _is_int(x) and x >= 4 and x % 2 == 0, "must be an even integer >= 4")
    need("levels", lambda x: _is_int(x) and x >= 2, "must be an integer >= 2")
    need("K", lambda x: _is_int(x) and x >= 2, "must be an integer >= 2")
    for name in ("t_min", "t_max"):
        need(name, lambda x: x is None or (_is_num(x) and x > 0), "must be a positive number or null")
    if _is_num(v.get("t_min")) and _is_num(v.get("t_max")) and v["t_max"] <= v["t_min"]:
        problems.append("t_max: must exceed t_min")
    need("s", lambda x: _is_num(x) and 0 < x < 1, "must lie in (0, 1)")
    need("p", lambda x: _is_num(x) and x >= 1, "must be >= 1")
    need("seed", lambda x: _is_int(x) and x >= 0, "must be a non-negative integer")
    need("threads", lambda x: x is None or (_is_int(x) and x >= 1), "must be a positive integer or null")
    need("function", lambda x: x in FUNCTIONS, f"must be one of {list(FUNCTIONS)}")
    need("input", lambda x: x is None or isinstance(x, str), "must be a path or null")
    need("out", lambda x: isinstance(x, str) and x != "", "must be a non-empty path")
    need("bounds", lambda x: x is None or (isinstance(x, list) and all(
        isinstance(b, list) and len(b) == 2 and all(_is_num(c) for c in b) and b[0] < b[1] for b in x)),
        "must be a list of [lower, upper] pairs or null")
    need("resolutions", lambda x: isinstance(x, list) and len(x) > 0 and all(
        _is_int(r) and r >= 4 and r % 2 == 0 for r in x), "must be a non-empty list of even integers >= 4")
    need("blowup_s", lambda x: isinstance(x, list) and all(_is_num(c) and 0 < c < 1 for c in x),
         "must be a list of numbers in (0, 1)")
    need("corpus", lambda x: isinstance(x, list) and all(c in CORPUS for c in x),
         f"must be a list drawn from {list(CORPUS)}")
    if "families" in v:
        fams = v["families"]
        if not isinstance(fams, list) or not fams:
            problems.append(f"families: must be a non-empty list, got {fams!r}")
        else:
            for i, f in enumerate(fams):
                try:
                    if isinstance(f, str):
                        ExponentFamily.parse(f)
                    elif isinstance(f, list):
                        ExponentFamily(tuple(tuple(pair) for pair in f))
                    else:
                        raise ValueError("expected 's:p,...' or a list of [s, p] pairs")
                except (ValueError, TypeError) as exc:
                    problems.append(f"families[{i}]: {exc}")
    if v.get("bounds") is not None and "dim" in v and isinstance(v["bounds"], list) and len(v["bounds"]) != v["dim"]:
        problems.append("bounds: need one [lower, upper] pair per dimension")
    if problems:
        raise ConfigError(problems)
    return RunConfig(**v)


def load_config(path) -> RunConfig:
    """Read a JSON config file; an empty file gives the defaults."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(path, None, f"cannot read config ({exc.strerror})") from exc
    if not text.strip():
        return RunConfig()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(path, exc.lineno, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(["<root>: the config must be a JSON object"])
    return validate_config(raw)


def echo_config(cfg: RunConfig, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "config.json"
    path.write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# Argument parsing


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _corpus(text: str) -> list[str]:
    return list(CORPUS) if text.strip() == "all" else [x.strip() for x in text.split(",") if x.strip()]


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = p.add_argument_group("global options")
    g.add_argument("--config", help="JSON config file")
    g.add_argument("--out", help="output directory")
    g.add_argument("--threads", type=int, help="worker threads for pair sums")
    g.add_argument("--seed", type=int, help="seed for random inputs and sampling")
    g.add_argument("--emit-plot-data", action="store_true", dest="emit_plot_data", help="write CSV series for plotting")
    return p


def _fields_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = p.add_argument_group("run parameters")
    g.add_argument("--dim", type=int)
    g.add_argument("--domain", choices=DOMAIN_KINDS)
    g.add_argument("--half-width", type=float, dest="half_width")
    g.add_argument("--radius", type=float)
    g.add_argument("--n-cells", type=int, dest="n_cells")
    g.add_argument("--levels", type=int, help="number of t-levels M")
    g.add_argument("--K", type=int, help="points in the ball quadrature rule")
    g.add_argument("--t-min", type=float, dest="t_min")
    g.add_argument("--t-max", type=float, dest="t_max")
    g.add_argument("--fam", action="append", dest="families", help="exponent family 's:p,s:p' (repeatable)")
    g.add_argument("--fn", dest="function", help=f"built-in function: {', '.join(FUNCTIONS)}")
    g.add_argument("--input", help="JSON descriptor of a sampled function")
    g.add_argument("--s", type=float)
    g.add_argument("--p", type=float)
    g.add_argument("--tol", type=float)
    g.add_argument("--residual-tol", type=float, dest="residual_tol")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    params = _fields_parser()
    parser = argparse.ArgumentParser(
        prog="fracsum", parents=[common],
        description="Fractional Sobolev min/max functionals and sum decompositions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("seminorm", parents=[common, params], help="Gagliardo seminorm (p-th power)")
    sub.add_parser("minfun", parents=[common, params], help="min-functional over an exponent family")
    sub.add_parser("extend", parents=[common, params], help="half-space extension and its gradient")
    sub.add_parser("decompose", parents=[common, params], help="split a function into components")
    v = sub.add_parser("verify", parents=[common, params], help="run all checks on the corpus")
    v.add_argument("--corpus", type=_corpus, help="'all' or a comma list of corpus functions")
    v.add_argument("--resolutions", type=_ints, help="comma list of cell counts, e.g. 128,256")
    v.add_argument("--blowup-s", type=_floats, dest="blowup_s", help="s values for the trace-constant scan")
    k = sub.add_parser("kernels", parents=[common, params], help="reconstruction kernel tools")
    k.add_argument("action", choices=["check"])
    return parser


_NON_CONFIG = {"command", "config", "emit_plot_data", "action"}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    base = load_config(args.config).to_dict() if getattr(args, "config", None) else RunConfig().to_dict()
    for key, val in vars(args).items():
        if key not in _NON_CONFIG:
            base[key] = val
    return validate_config(base)


# ---------------------------------------------------------------------------
# Commands


def _domain(cfg: RunConfig) -> Domain:
    kind = cfg.domain
    if kind == "auto":
        kind = "box" if cfg.function == "linear" and cfg.input is None else "whole"
    if kind == "whole":
        return Domain.whole(cfg.dim, cfg.half_width)
    if kind == "ball":
        return Domain.ball(cfg.dim, cfg.radius)
    return Domain.box(cfg.bounds or [[0.0, 1.0]] * cfg.dim)


def _input(cfg: RunConfig) -> SampledFunction:
    if cfg.input is not None:
        return read_sampled(cfg.input)
    dom = _domain(cfg)
    f = get_function(cfg.function, cfg.seed)
    center = None
    if dom.kind == "ball" and cfg.function != "linear":
        center = [cfg.ball_offset] + [0.0] * (cfg.dim - 1)
    return SampledFunction.from_callable(dom, cfg.n_cells, lambda x: f(x, center=center))


def _tgrid(cfg: RunConfig, u: SampledFunction, half_width: float | None = None) -> TGrid:
    if half_width is None:
        half_width = max(max(abs(a), abs(b)) for a, b in u.domain.bounds)
    base = default_tgrid(u.grid, half_width, cfg.levels)
    return TGrid(cfg.t_min or base.t_min, cfg.t_max or base.t_max, cfg.levels)


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def cmd_seminorm(cfg: RunConfig, out: Path, args) -> int:
    u = _input(cfg)
    ext = u.domain.kind == "whole"
    val = gagliardo_seminorm(u, cfg.s, cfg.p, exterior=ext)
    print(f"seminorm^p (s={cfg.s}, p={cfg.p}) = {val:.12g}")
    _write_json(out / "seminorm.json", {"name": "seminorm", "value": val, "s": cfg.s, "p": cfg.p,
                                        "grid": u.grid.to_dict(), "domain": u.domain.to_dict()})
    return EXIT_OK


def cmd_minfun(cfg: RunConfig, out: Path, args) -> int:
    u = _input(cfg)
    ext = u.domain.kind == "whole"
    records, ok = [], True
    for fam in cfg.exponent_families():
        val = min_functional(u, fam, exterior=ext)
        singles = [gagliardo_seminorm(u, s, p, exterior=ext) for s, p in fam.pairs]
        holds = val <= min(singles) * (1 + 1e-12)
        ok &= holds
        print(f"min-functional [{fam}] = {val:.12g}  (single seminorms: {', '.join(f'{x:.6g}' for x in singles)})")
        rec = CheckResult("min_below_seminorms", val, min(singles), holds, None, {"seminorms": singles})
        records.append(rec.to_record(u.grid, fam))
    _write_json(out / "minfun.json", records)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_extend(cfg: RunConfig, out: Path, args) -> int:
    u = _input(cfg)
    if u.domain.kind == "ball":
        raise ValueError("extend works on box domains; use a whole-space domain")
    phi = make_bump_mollifier(u.grid.dim)
    tg = _tgrid(cfg, u)
    U = extend_half_space(u, phi, tg, cfg.K)
    G = gradient_field(u, phi, tg, cfg.K)
    write_field(U, out / "extension")
    write_field(G, out / "gradient")
    records, ok = [], True
    for fam in cfg.exponent_families():
        res = extension_energy_check(u, fam, phi, tg, cfg.K, G=G)
        ok &= bool(res.holds)
        print(f"extension energy [{fam}]: lhs={res.lhs:.6g} rhs={res.rhs:.6g} constant={res.constant}")
        records.append(res.to_record(u.grid, fam))
    _write_json(out / "extension_energy.json", records)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_decompose(cfg: RunConfig, out: Path, args) -> int:
    u = _input(cfg)
    fams = cfg.exponent_families()
    ok = True
    for k, fam in enumerate(fams):
        target = out if len(fams) == 1 else out / f"fam{k}"
        if u.domain.kind == "ball":
            tg = _tgrid(cfg, u, 3 * u.domain.size)
            dec = decompose_ball(u, fam, tgrid=tg, K=cfg.K)
        else:
            dec = decompose_whole_space(u, fam, tgrid=_tgrid(cfg, u), K=cfg.K)
        for i, c in enumerate(dec.components, start=1):
            write_sampled(c, target / f"component_{i}")
        d = dict(dec.diagnostics)
        d.update({"grid": u.grid.to_dict(), "fam": fam.as_list()})
        _write_json(target / "diagnostics.json", d)
        good = d["residual_rel"] <= cfg.residual_tol and d["constant"] is not None and math.isfinite(d["constant"])
        ok &= good
        print(
            f"decompose [{fam}]: residual {d['residual_rel']:.3e} (relative), "
            f"E_max={d['E_max']:.6g}, E_min={d['E_min']:.6g}, constant={d['constant']}"
            + ("" if good else "  FAILED")
        )
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(cfg: RunConfig, out: Path, args) -> int:
    st = VerifySettings(
        dim=cfg.dim, half_width=cfg.half_width, radius=cfg.radius, ball_offset=cfg.ball_offset,
        levels=cfg.levels, K=cfg.K, t_min=cfg.t_min, t_max=cfg.t_max, seed=cfg.seed,
        tol=cfg.tol, residual_tol=cfg.residual_tol, blowup_s=tuple(cfg.blowup_s),
    )
    report = run_corpus(cfg.corpus, cfg.exponent_families(), cfg.resolutions, st)
    path = report.write(out / "report.json")
    if getattr(args, "emit_plot_data", False):
        write_plot_data(report, out)
    n_ok = sum(r["holds"] for r in report.records)
    print(f"{n_ok}/{len(report.records)} checks hold; "
          f"{sum(s['stable'] for s in report.stability)}/{len(report.stability)} constants stable")
    if report.blowup is not None:
        series = ", ".join(f"s={s}: {c:.4g}" for s, c in zip(report.blowup.s, report.blowup.constants) if c is not None)
        print(f"trace constant by s: {series}; increasing on tail: {report.blowup.increasing_tail}")
    for f in report.failures():
        print(f"FAILED: {f}")
    print(f"report written to {path}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_kernels(cfg: RunConfig, out: Path, args) -> int:
    psi = canonical_kernel(make_bump_mollifier(cfg.dim))
    res = validate_kernel(psi, samples=10_000, seed=cfg.seed)
    print(f"kernel identity residual: {res.max_residual:.3e} over {res.samples} points")
    print(f"normalization error |int psi_t - 1|: {res.mass_error:.3e}")
    _write_json(out / "kernels.json", {"name": psi.name, "dim": cfg.dim, "max_residual": res.max_residual,
                                       "mass_error": res.mass_error, "samples": res.samples, "ok": res.ok})
    return EXIT_OK if res.ok else EXIT_FAIL


COMMANDS = {
    "seminorm": cmd_seminorm,
    "minfun": cmd_minfun,
    "extend": cmd_extend,
    "decompose": cmd_decompose,
    "verify": cmd_verify,
    "kernels": cmd_kernels,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = resolve_config(args)
        if cfg.threads is not None:
            parallel.set_default_threads(cfg.threads)
        out = Path(cfg.out)
        echo_config(cfg, out)
        return COMMANDS[args.command](cfg, out, args)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
