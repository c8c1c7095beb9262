"""CLI front end: config validation, exit codes, output schema, and
byte-identical determinism across runs and thread counts."""

import json
import subprocess
import sys

import pytest

from uma_bounds import cli

RUN = [sys.executable, "-m", "uma_bounds.cli"]


def _write(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


GOOD = """
[model]
kind = poisson
mean = 3.0

[channel]
n = 300
k_bits = 10

[bound]
mc_samples = 1000
pprime_ratios = 0.9

[sweep]
ebn0_db_grid = 4.0 8.0
"""


def test_unknown_key_rejected(tmp_path):
    cfg = _write(tmp_path, GOOD.replace("mc_samples = 1000",
                                        "mc_samples = 1000\nbogus = 1"))
    with pytest.raises(cli.ConfigError):
        cli.load_config(cfg)


def test_unknown_section_rejected(tmp_path):
    cfg = _write(tmp_path, GOOD + "\n[mystery]\nx = 1\n")
    with pytest.raises(cli.ConfigError):
        cli.load_config(cfg)


def test_missing_required_field(tmp_path):
    cfg = _write(tmp_path, "[model]\nkind = poisson\nmean = 3\n[channel]\nn = 300\n")
    with pytest.raises(cli.ConfigError):
        cli.load_config(cfg)


def test_exit_code_2_on_bad_config(tmp_path):
    cfg = _write(tmp_path, "[model]\nkind = martian\n[channel]\nn = 100\nk_bits = 8\n")
    rc = cli.main(["floors", "--config", cfg, "--out", str(tmp_path / "o")])
    assert rc == 2


def test_exit_code_3_on_infeasible_target(tmp_path):
    cfg = _write(tmp_path, GOOD + "\n[targets]\neps_md = 1e-12\neps_fa = 1e-12\n")
    rc = cli.main(["search", "--config", cfg, "--out", str(tmp_path / "o")])
    assert rc == 3


def test_exit_code_4_on_bad_bracket(tmp_path):
    cfg = _write(tmp_path, GOOD.replace(
        "[sweep]\nebn0_db_grid = 4.0 8.0",
        "[sweep]\nbracket_db = -10 -8") + "\n[targets]\neps_md = 0.08\neps_fa = 0.08\n")
    rc = cli.main(["search", "--config", cfg, "--out", str(tmp_path / "o")])
    assert rc == 4


def test_floors_outputs_schema(tmp_path):
    cfg = _write(tmp_path, GOOD)
    out = tmp_path / "out"
    rc = cli.main(["floors", "--config", cfg, "--out", str(out), "--seed", "1"])
    assert rc == 0
    lines = (out / "floors.csv").read_text().splitlines()
    assert lines[0] == cli.SCHEMA_LINE
    assert lines[1] == "k_lower,k_upper,floor_md,floor_fa"
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["command"] == "floors"
    assert "floor_md" in meta["results"]


def test_bound_command_and_determinism(tmp_path):
    cfg = _write(tmp_path, GOOD)
    outs = []
    for name, threads in (("a", "1"), ("b", "2"), ("c", "1")):
        out = tmp_path / name
        rc = cli.main(["bound", "--config", cfg, "--out", str(out),
                       "--seed", "7", "--threads", threads])
        assert rc == 0
        outs.append((out / "curve.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]
    lines = outs[0].decode().splitlines()
    assert lines[1] == "ebn0_db,eps_md,eps_fa,floor_md,floor_fa"
    assert len(lines) == 4  # schema + header + 2 grid points


def test_selftest_runs_without_config(tmp_path):
    out = tmp_path / "st"
    rc = cli.main(["selftest", "--out", str(out)])
    assert rc == 0
    assert (out / "selftest.csv").exists()


def test_entry_point_subprocess(tmp_path):
    # exercise the installed console path end to end
    res = subprocess.run(RUN + ["selftest", "--out", str(tmp_path / "o")],
                         capture_output=True, text=True, timeout=300)
    assert res.returncode == 0
    assert "selftest: done" in res.stdout


def test_metadata_has_no_volatile_fields(tmp_path):
    cfg = _write(tmp_path, GOOD)
    out1, out2 = tmp_path / "m1", tmp_path / "m2"
    assert cli.main(["floors", "--config", cfg, "--out", str(out1)]) == 0
    assert cli.main(["floors", "--config", cfg, "--out", str(out2)]) == 0
    assert (out1 / "metadata.json").read_bytes() == (out2 / "metadata.json").read_bytes()
