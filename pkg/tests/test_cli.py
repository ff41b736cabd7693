import json

import numpy as np
import pytest

from fracvar import cli
from fracvar import constants as C
from fracvar.grid import load_field

EVAL = """experiment = "eval"
[grid]
n = 1
half_width = 2.0
m = 129
[input]
kind = "{kind}"
[operator]
op = "grad"
alpha = {alpha}
[output]
name = "g"
"""

GAMMA = """experiment = "gamma"
[grid]
n = 1
half_width = 2.0
m = 129
[input]
kind = "intervals"
intervals = [[0.0, 1.0]]
[window]
interval = [-1.0, 2.0]
[operator]
alphas = [0.9, 0.99]
{families}
"""

SWEEP = """experiment = "alpha_sweep"
[grid]
n = 1
half_width = 2.0
m = 129
[input]
kind = "bump"
[operator]
alphas = [0.99]
"""


def _cfg(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _run(*argv):
    return cli.main([str(a) for a in argv])


def test_eval_writes_field_and_meta(tmp_path):
    cfg = _cfg(tmp_path, EVAL.format(kind="bump", alpha=0.5))
    out = tmp_path / "out"
    assert _run("eval", "--config", cfg, "--out", out, "--deterministic") == 0
    meta = json.loads((out / "g.meta.json").read_text())
    assert meta["mu"] == C.mu(1, 0.5)
    assert meta["duality_residual"] <= meta["declared_tolerance"]
    assert "created" not in meta
    f = load_field(out / "g.field")
    assert f.spec.m == 129


def test_eval_zero_input(tmp_path):
    out = tmp_path / "out"
    assert _run("eval", "--config", _cfg(tmp_path, EVAL.format(kind="zero", alpha=0.5)), "--out", out) == 0
    f = load_field(out / "g.field")
    assert all(np.all(c == 0) for c in f.components)


@pytest.mark.parametrize("alpha", [1.0, 0.0, -0.2])
def test_eval_rejects_alpha(tmp_path, alpha):
    assert _run("eval", "--config", _cfg(tmp_path, EVAL.format(kind="bump", alpha=alpha)),
                "--out", tmp_path / "o") == 2


def test_unknown_key_and_missing_file(tmp_path):
    assert _run("eval", "--config", _cfg(tmp_path, "experiment = 'eval'\nbogus = 1\n"), "--out", tmp_path) == 2
    assert _run("eval", "--config", tmp_path / "nope.toml", "--out", tmp_path) == 2


def test_experiment_mismatch(tmp_path):
    assert _run("gamma", "--config", _cfg(tmp_path, SWEEP), "--out", tmp_path / "o") == 2


def test_env_override(tmp_path):
    cfg = cli.RunConfig.load(_cfg(tmp_path, SWEEP), env={"FRACVAR_GRID__M": "65", "FRACVAR_SEED": "3",
                                                         "OTHER": "x"})
    assert cfg.grid["m"] == 65 and cfg.seed == 3


def test_gamma_report(tmp_path):
    out = tmp_path / "out"
    assert _run("gamma", "--config", _cfg(tmp_path, GAMMA.format(families="")), "--out", out) == 0
    rep = json.loads((out / "gamma_falsification.json").read_text())
    assert rep["verdict"] is True
    assert all(r["reference"] == pytest.approx(2.0, rel=1e-12) for r in rep["records"])


def test_gamma_flagged_family_exits_2(tmp_path):
    fams = '[[families]]\nkind = "translate"\nscale = 0.3\nschedule = "fixed"\n'
    out = tmp_path / "out"
    assert _run("gamma", "--config", _cfg(tmp_path, GAMMA.format(families=fams)), "--out", out) == 2
    assert json.loads((out / "gamma_falsification.json").read_text())["verdict"] is None


def test_single_point_sweep(tmp_path):
    out = tmp_path / "out"
    assert _run("sweep", "--config", _cfg(tmp_path, SWEEP), "--out", out) == 0
    rep = json.loads((out / "alpha_to_one.json").read_text())
    assert len(rep["records"]) == 1 and rep["order"] is None
    assert len((out / "alpha_to_one.csv").read_text().splitlines()) == 2


def test_failed_verdict_exits_3(tmp_path):
    text = SWEEP.replace("alpha_sweep", "weakstar").replace("[0.99]", "[0.5]")
    text += "[tolerance]\nweakstar = 1e-6\n[[test_functions]]\ncenter = 0.3\nradius = 1.0\n"
    assert _run("sweep", "--config", _cfg(tmp_path, text), "--out", tmp_path / "o") == 3


def test_report_merge(tmp_path, capsys):
    out = tmp_path / "out"
    _run("sweep", "--config", _cfg(tmp_path, SWEEP), "--out", out)
    _run("gamma", "--config", _cfg(tmp_path, GAMMA.format(families=""), "g.toml"), "--out", out)
    a, b = out / "alpha_to_one.json", out / "gamma_falsification.json"
    m1 = tmp_path / "m1"
    assert _run("report", a, b, "--out", m1) == 0
    n_rows = len((m1 / "summary.csv").read_text().splitlines()) - 1
    assert n_rows == 1 + 6
    # merging a summary with nothing else reproduces it
    m2 = tmp_path / "m2"
    assert _run("report", m1 / "summary.json", "--out", m2) == 0
    assert (m2 / "summary.csv").read_text() == (m1 / "summary.csv").read_text()
    assert "verdict=True" in capsys.readouterr().out


def test_report_empty_and_schema(tmp_path):
    assert _run("report", "--out", tmp_path / "e") == 0
    assert (tmp_path / "e" / "summary.csv").read_text().startswith("schema_version,")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 9, "kind": "alpha_to_one"}))
    assert _run("report", bad) == 4


def test_threads_validation(tmp_path):
    assert _run("sweep", "--config", _cfg(tmp_path, SWEEP), "--threads", "0") == 2
