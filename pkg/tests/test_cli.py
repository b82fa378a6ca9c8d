import json
import math
import subprocess
import sys

import numpy as np
import pytest

from fracsum.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, RunConfig, echo_config, load_config, main, validate_config
from fracsum.grid import Domain, SampledFunction
from fracsum.io import read_sampled, write_sampled


def run(tmp_path, *argv):
    return main(["--out", str(tmp_path / "out"), *argv])


def test_kernels_check(tmp_path, capsys):
    assert run(tmp_path, "kernels", "check") == EXIT_OK
    data = json.loads((tmp_path / "out" / "kernels.json").read_text())
    assert data["ok"] and data["max_residual"] <= 1e-8
    assert "kernel identity residual" in capsys.readouterr().out


def test_seminorm_of_linear_function(tmp_path):
    assert run(tmp_path, "seminorm", "--fn", "linear", "--s", "0.5", "--p", "2", "--n-cells", "128") == EXIT_OK
    data = json.loads((tmp_path / "out" / "seminorm.json").read_text())
    # |x - y|^2 / |x - y|^2 integrated over the unit square
    assert math.isclose(data["value"], 1.0, rel_tol=1e-9)


def test_minfun_and_extend(tmp_path):
    assert run(tmp_path, "minfun", "--n-cells", "64") == EXIT_OK
    assert run(tmp_path, "extend", "--n-cells", "64", "--levels", "16") == EXIT_OK
    out = tmp_path / "out"
    assert (out / "extension.csv").exists() and (out / "gradient.json").exists()
    assert all(r["holds"] for r in json.loads((out / "extension_energy.json").read_text()))


def test_decompose_from_file(tmp_path):
    u = SampledFunction.from_callable(
        Domain.whole(1, 2.0), 128, lambda x: np.where(np.abs(x[..., 0]) < 1, np.cos(np.pi * x[..., 0] / 2) ** 4, 0.0)
    )
    desc = write_sampled(u, tmp_path / "in" / "u")
    assert run(tmp_path, "decompose", "--input", str(desc), "--levels", "48") == EXIT_OK
    out = tmp_path / "out"
    parts = [read_sampled(out / f"component_{i}.json") for i in (1, 2)]
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["residual_rel"] <= 5e-2
    assert np.max(np.abs(parts[0].values + parts[1].values - u.values)) <= 5e-2


def test_decompose_with_two_families(tmp_path):
    code = run(tmp_path, "decompose", "--n-cells", "64", "--levels", "24",
               "--fam", "0.3:1.5,0.7:1.2", "--fam", "0.5:2")
    assert code == EXIT_OK
    assert (tmp_path / "out" / "fam0" / "component_2.csv").exists()
    assert (tmp_path / "out" / "fam1" / "component_1.csv").exists()


def test_failed_check_exits_one(tmp_path):
    code = run(tmp_path, "decompose", "--n-cells", "64", "--levels", "24", "--residual-tol", "1e-12")
    assert code == EXIT_FAIL


# ---------------------------------------------------------------------------
# Configuration


def test_bad_config_lists_every_problem(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dim": 3, "n_cells": 7, "s": 1.5, "families": ["0.3"], "colour": "red"}))
    assert run(tmp_path, "--config", str(cfg), "seminorm") == EXIT_USAGE
    err = capsys.readouterr().err
    for name in ("dim", "n_cells", "s", "families[0]", "colour"):
        assert f"{name}:" in err


def test_validate_collects_problems():
    with pytest.raises(ValueError) as exc:
        validate_config({"t_min": 1.0, "t_max": 0.5, "resolutions": [5], "corpus": ["nope"]})
    assert len(exc.value.problems) == 3


def test_empty_config_gives_defaults(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("")
    assert load_config(p) == RunConfig()


def test_malformed_json_reports_line(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text('{\n  "dim": 1,\n  "s": ,\n}')
    assert run(tmp_path, "--config", str(p), "seminorm") == EXIT_USAGE
    assert f"{p}:3:" in capsys.readouterr().err


def test_config_echo_roundtrip(tmp_path):
    cfg = validate_config({"dim": 2, "families": ["0.4:2"], "resolutions": [16, 32], "t_max": 3.0})
    path = echo_config(cfg, tmp_path)
    assert load_config(path) == cfg


def test_command_line_overrides_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"s": 0.3, "n_cells": 32}))
    assert run(tmp_path, "--config", str(p), "seminorm", "--s", "0.6") == EXIT_OK
    echoed = json.loads((tmp_path / "out" / "config.json").read_text())
    assert echoed["s"] == 0.6 and echoed["n_cells"] == 32


def test_malformed_csv_reported_with_line(tmp_path, capsys):
    u = SampledFunction.from_callable(Domain.whole(1, 2.0), 8, lambda x: np.zeros(x.shape[:-1]))
    desc = write_sampled(u, tmp_path / "u")
    data = tmp_path / "u.csv"
    lines = data.read_text().splitlines()
    lines[4] = lines[4] + ",9"
    data.write_text("\n".join(lines) + "\n")
    assert run(tmp_path, "seminorm", "--input", str(desc)) == EXIT_USAGE
    assert f"{data}:5:" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["seminorm", "--bogus"], ["nosuch"], ["seminorm", "--dim", "x"], []])
def test_usage_errors(tmp_path, argv):
    assert run(tmp_path, *argv) == EXIT_USAGE


# ---------------------------------------------------------------------------
# Verify


def _verify(tmp_path, name):
    return run(tmp_path / name, "verify", "--corpus", "bump", "--resolutions", "32,64",
               "--levels", "24", "--blowup-s", "", "--emit-plot-data")


def test_verify_is_deterministic(tmp_path):
    assert _verify(tmp_path, "a") == EXIT_OK
    assert _verify(tmp_path, "b") == EXIT_OK
    a = (tmp_path / "a" / "out" / "report.json").read_bytes()
    b = (tmp_path / "b" / "out" / "report.json").read_bytes()
    assert a == b
    assert (tmp_path / "a" / "out" / "constants_vs_resolution.csv").exists()


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "fracsum.cli", "--out", str(tmp_path), "kernels", "check"],
        capture_output=True, text=True,
    )
    assert proc.returncode == EXIT_OK
    assert "normalization error" in proc.stdout
