"""
End-to-end checks of the command-line pipeline: config file -> run -> result file.
"""

import json

import pytest

from src.experiments import runner
from src.experiments.output import COLUMNS
from src.main import main
from src.utils.errors import ConvergenceError

EQUIVALENCE_CONFIG = {
    "command": "equivalence",
    "k_list": [4, 8],
    "R": 2.0,
    "region": {"type": "complement", "region": {"type": "cap", "center": [0, 0], "radius": "1/{k}"}},
    "measure": {"type": "random_atoms", "seed": 2, "count": 5, "mass": 0.05},
    "quad": "24x48",
    "probe_count": 30,
}


def write_config(tmp_path, document, name="experiment.json"):
    path = tmp_path / name
    path.write_text(json.dumps(document))
    return str(path)


def test_equivalence_run_is_reproducible(tmp_path):
    config = write_config(tmp_path, EQUIVALENCE_CONFIG)
    first, second = tmp_path / "first.csv", tmp_path / "second.csv"

    assert main(["equivalence", "--config", config, "--out", str(first), "--threads", "1"]) == 0
    assert main(["equivalence", "--config", config, "--out", str(second), "--threads", "1"]) == 0

    assert first.read_bytes() == second.read_bytes()
    lines = first.read_text().splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert len(lines) == 3


def test_threads_do_not_change_the_file(tmp_path):
    config = write_config(tmp_path, EQUIVALENCE_CONFIG)
    serial, parallel = tmp_path / "serial.csv", tmp_path / "parallel.csv"
    assert main(["equivalence", "--config", config, "--out", str(serial), "--threads", "1"]) == 0
    assert main(["equivalence", "--config", config, "--out", str(parallel), "--threads", "2"]) == 0
    assert serial.read_bytes() == parallel.read_bytes()


def test_flags_override_the_file(tmp_path, capsys):
    config = write_config(tmp_path, {"command": "peak", "k_list": [4], "R": 1.0})
    assert main(["peak", "--config", config, "--k", "9", "--quad", "16x32", "--format", "json"]) == 0
    records = json.loads(capsys.readouterr().out)
    assert [r["k"] for r in records] == [9]
    assert records[0]["R"] == 1.0
    assert records[0]["quad_radial"] == 16


def test_dry_run_prints_plan_only(tmp_path, capsys):
    out = tmp_path / "never.csv"
    config = write_config(tmp_path, EQUIVALENCE_CONFIG)
    assert main(["equivalence", "--config", config, "--dry-run", "--out", str(out)]) == 0
    document = json.loads(capsys.readouterr().out)
    assert [task["k"] for task in document["tasks"]] == [4, 8]
    assert len(document["config_digest"]) == 16
    assert not out.exists()


def test_bad_config_exits_2(tmp_path, capsys):
    config = write_config(tmp_path, {"command": "norming", "k_list": [4], "colour": "red"})
    assert main(["norming", "--config", config]) == 2
    assert "$.colour" in capsys.readouterr().err

    broken = tmp_path / "broken.json"
    broken.write_text("{")
    assert main(["norming", "--config", str(broken)]) == 2
    assert main(["norming", "--config", str(tmp_path / "missing.json")]) == 2


@pytest.mark.parametrize("measure, where", [
    ({"type": "volume", "scale": "abc"}, "$.measure.scale"),
    ({"type": "volume", "scale": [1]}, "$.measure.scale"),
    ({"type": "random_atoms", "seed": 1, "count": 3, "mass": "x"}, "$.measure.mass"),
])
def test_non_numeric_measure_weights_exit_2(measure, where, tmp_path, capsys):
    config = write_config(tmp_path, {"command": "carleson", "k_list": [4], "measure": measure})
    assert main(["carleson", "--config", config, "--dry-run"]) == 2
    assert where in capsys.readouterr().err


def test_empty_random_caps_with_bad_radius_exit_2(tmp_path, capsys):
    config = write_config(tmp_path, {
        "command": "norming", "k_list": [4],
        "region": {"type": "random_caps", "seed": 0, "count": 0, "radius": 9.0},
    })
    assert main(["norming", "--config", config, "--dry-run"]) == 2
    assert "$.region" in capsys.readouterr().err


def test_template_errors_exit_2(tmp_path):
    config = write_config(tmp_path, {
        "command": "norming", "k_list": [4],
        "region": {"type": "cap", "center": [0, 0], "radius": "1/({k}-4)"},
    })
    assert main(["norming", "--config", config, "--quad", "16x32"]) == 2


def test_unknown_command_is_rejected():
    with pytest.raises(SystemExit) as info:
        main(["paint"])
    assert info.value.code == 2


def test_unwritable_output_exits_4(tmp_path):
    out = tmp_path / "missing" / "rows.csv"
    assert main(["lemma34", "--k", "4", "--out", str(out)]) == 4


def test_coarse_quadrature_exits_2():
    assert main(["norming", "--k", "8", "--quad", "4x8"]) == 2


def test_nested_budget_exits_2(monkeypatch):
    monkeypatch.setenv("LAB_NESTED_BUDGET", "1000")
    assert main(["lemma32", "--k", "4", "--quad", "16x32", "--samples", "1"]) == 2


def test_numerical_failure_exits_3(monkeypatch, capsys):
    def diverge(config, rule, k, value):
        raise ConvergenceError(f"no convergence at k={k}")

    monkeypatch.setitem(runner.COMMAND_HANDLERS, "norming", diverge)
    assert main(["norming", "--k", "4", "--quad", "16x32"]) == 3
    assert "no convergence" in capsys.readouterr().err


def test_unexpected_failure_exits_1(monkeypatch):
    def broken(config, rule, k, value):
        raise RuntimeError("boom")

    monkeypatch.setitem(runner.COMMAND_HANDLERS, "norming", broken)
    assert main(["norming", "--k", "4", "--quad", "16x32"]) == 1
