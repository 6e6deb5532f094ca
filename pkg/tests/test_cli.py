import json
import math
from fractions import Fraction

import numpy as np
import pytest

from bchlab import __version__, report
from bchlab.cli import main

FAST = {
    "hypotheses": ["--grid-n", "60", "--b-set", "3/2,2,3"],
    "qscan": ["--b", "3", "--k-grid", "0.02:0.2:5"],
    "profile": ["--b", "2", "--k", "0.25", "--grid-n", "1024"],
    "simulate": ["--b", "2", "--k", "0.25", "--N", "1024", "--T", "2"],
    "phase": ["--b", "3", "--k", "0.1"],
}
FILES = {
    "hypotheses": ["hypotheses.json", "hypothesis_grid.csv", "hypotheses.png"],
    "qscan": ["qscan.json", "qscan.csv", "qscan_b3.png"],
    "profile": ["profile.json", "profile.csv", "profile_ic.json", "profile.png"],
    "simulate": ["simulate.json", "simulate.csv", "distance.png"],
    "phase": ["phase.json", "phase_homoclinic.csv", "phase_gamma_h.csv", "phase_portrait.png", "gamma_h.png"],
}


def _run(cmd, out, *extra):
    return main([cmd, *FAST[cmd], "--out", str(out), *extra])


@pytest.mark.parametrize("cmd", sorted(FAST))
def test_command_passes_and_writes_outputs(cmd, tmp_path, capsys):
    assert _run(cmd, tmp_path, "--seed", "7") == 0
    printed = capsys.readouterr().out
    assert "[PASS]" in printed and "[FAIL]" not in printed
    for name in FILES[cmd]:
        assert (tmp_path / name).stat().st_size > 0, name
    doc = json.loads((tmp_path / FILES[cmd][0]).read_text())
    meta = doc["meta"]
    assert meta["version"] == __version__ and meta["seed"] == 7 and meta["command"] == cmd
    assert meta["config"]["seed"] == 7 and "timestamp" in meta


@pytest.mark.parametrize("cmd", ["qscan", "phase"])
def test_outputs_deterministic(cmd, tmp_path):
    # rerun the same configuration into the same directory and compare snapshots
    assert _run(cmd, tmp_path) == 0
    first = {name: (tmp_path / name).read_bytes() for name in FILES[cmd]}
    assert _run(cmd, tmp_path) == 0
    for name, data in first.items():
        again = (tmp_path / name).read_bytes()
        if name.endswith(".json"):
            da, db = json.loads(data), json.loads(again)
            da["meta"].pop("timestamp")
            db["meta"].pop("timestamp")
            assert da == db
        else:
            # CSV and PNG files carry no timestamp at all
            assert data == again, name


def test_corrupted_polynomial_exits_one(tmp_path, capsys):
    assert _run("hypotheses", tmp_path, "--corrupt-r") == 1
    assert "[FAIL]" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["profile", "--k", "0.4"],
        ["profile", "--b", "0.5"],
        ["qscan", "--k-grid", "0.1:0.2"],
        ["hypotheses", "--b-set", "2,x"],
        ["profile", "--tol", "-1"],
        ["simulate", "--N", "1000", "--T", "1"],
    ],
)
def test_config_errors_exit_two(argv, tmp_path):
    assert main([*argv, "--out", str(tmp_path)]) == 2


def test_unknown_command_and_config_key(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bee": 2}))
    assert main(["profile", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    cfg.write_text("[1, 2]")
    assert main(["profile", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"b": 3, "k": 0.1, "grid-n": 2048, "seed": 5}))
    assert main(["profile", "--config", str(cfg), "--k", "0.05", "--out", str(tmp_path)]) == 0
    meta = json.loads((tmp_path / "profile.json").read_text())["meta"]["config"]
    assert meta["b"] == 3.0 and meta["k"] == 0.05 and meta["seed"] == 5 and meta["grid_n"] == 2048


# ---------------------------------------------------------------------------
# report writers


def test_plain_conversion():
    out = report._plain({"a": np.float64(1.5), "b": np.arange(3), "c": Fraction(3, 2), "d": math.nan,
                         1: (np.int64(4), math.inf)})
    assert out == {"a": 1.5, "b": [0, 1, 2], "c": "3/2", "d": "nan", "1": [4, "inf"]}
    json.dumps(out)


def test_csv_round_trip(tmp_path):
    rows = [{"x": 0.1, "y": 1 / 3}, {"x": 0.2, "y": 2 / 3}]
    path = report.write_csv(tmp_path / "t.csv", "unit", {"b": 2.0}, 3, rows)
    lines = path.read_text().splitlines()
    assert lines[0].startswith(f"# bchlab {__version__} command=unit seed=3")
    assert lines[1] == '# config={"b": 2.0}'
    header, data = report.read_csv(path)
    assert header == ["x", "y"]
    assert data[0, 1] == 1 / 3 and data.shape == (2, 2)


def test_json_layout(tmp_path):
    path = report.write_json(tmp_path / "t.json", "unit", {"b": 2.0}, 1, {"value": np.float32(0.5)})
    doc = json.loads(path.read_text())
    assert doc["value"] == 0.5
    assert set(doc["meta"]) == {"command", "version", "seed", "config", "timestamp"}
