import json
import math

import pytest

from src import __version__
from src.experiments.config import (
    ExperimentConfig,
    apply_overrides,
    from_document,
    parse_quad,
    read_config_file,
    validate,
)
from src.experiments.output import COLUMNS, format_cell, render_csv, write_output
from src.experiments.runner import ResultRow, plan, run, tasks_for
from src.experiments.templates import evaluate, render
from src.utils.errors import ConfigError, OutputError, ParseError, ValidationError


# ---------------------------------------------------------------------------
# Templates


@pytest.mark.parametrize("text,k,expected", [
    ("1/sqrt(k)", 4, 0.5),
    ("2*k", 8, 16),
    ("(1 + 2) * 3", None, 9),
    ("-k + 10", 3, 7),
    ("pi/2", None, math.pi / 2),
    ("1.5e-1 * k", 2, 0.3),
    ("k × 2 ÷ 4", 6, 3.0),
])
def test_evaluate(text, k, expected):
    assert evaluate(text, k=k) == pytest.approx(expected)


def test_integer_expressions_stay_integers():
    assert isinstance(evaluate("2*k", k=3), int)
    assert isinstance(evaluate("k/1", k=3), float)


@pytest.mark.parametrize("text", ["2 +", "sqrt 4", "k k", "(1", "2 $ 3", "foo"])
def test_malformed_expressions(text):
    with pytest.raises(ParseError):
        evaluate(text, k=1)


def test_expression_domain_errors():
    with pytest.raises(ValidationError):
        evaluate("1/(k-4)", k=4)
    with pytest.raises(ValidationError):
        evaluate("sqrt(1-k)", k=4)


def test_render_substitutes_nested_templates():
    doc = {"type": "union", "members": [
        {"type": "cap", "center": "inf", "radius": "1/{k}"},
        {"type": "random_caps", "seed": 3, "count": "{k}", "radius": "{delta}/2"},
    ]}
    out = render(doc, k=8, delta=0.5)
    assert out["members"][0] == {"type": "cap", "center": "inf", "radius": 0.125}
    assert out["members"][1]["count"] == 8
    assert out["members"][1]["radius"] == pytest.approx(0.25)
    with pytest.raises(ParseError) as info:
        render({"radius": "1/{k}+"}, k=2)
    assert info.value.path == "$.radius"
    with pytest.raises(ValidationError):
        render({"radius": "{delta}"}, k=2)


# ---------------------------------------------------------------------------
# Configuration


def test_parse_quad():
    assert parse_quad("128x256") == (128, 256)
    for bad in ("128", "axb", "0x4"):
        with pytest.raises(ConfigError):
            parse_quad(bad)


def test_config_document_errors():
    with pytest.raises(ParseError) as info:
        from_document({"command": "density", "colour": "red"})
    assert info.value.path == "$.colour"
    with pytest.raises(ParseError) as info:
        from_document({"command": "density", "k_list": [4, "8"]})
    assert info.value.path == "$.k_list"
    with pytest.raises(ParseError) as info:
        validate(from_document({"command": "paint"}))
    assert info.value.path == "$.command"


def test_config_file_errors(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ParseError):
        read_config_file(str(broken))
    with pytest.raises(ConfigError):
        read_config_file(str(tmp_path / "missing.json"))


def test_overrides_win():
    class Args:
        k = "4,8"
        R = 1.5
        eps = None
        quad = "16x32"
        seed = 9
        probes = None
        samples = None
        sweep = None
        values = None
        out = None
        format = "json"
        threads = 2

    config = apply_overrides(from_document({"command": "density", "k_list": [2], "R": 3.0}), Args())
    assert config.k_list == [4, 8]
    assert config.R == 1.5
    assert (config.quad_radial, config.quad_azimuthal) == (16, 32)
    assert config.format == "json"
    assert config.threads == 2


def test_digest_tracks_values_not_destination():
    a = ExperimentConfig(command="norming", k_list=[4, 8])
    b = ExperimentConfig(command="norming", k_list=[4, 8], output_path="elsewhere.csv", threads=4)
    c = ExperimentConfig(command="norming", k_list=[4, 16])
    assert a.digest == b.digest
    assert a.digest != c.digest
    assert len(a.digest) == 16


def test_validation_rules():
    with pytest.raises(ValidationError):
        validate(ExperimentConfig(command="density", R=-1.0))
    with pytest.raises(ParseError):
        validate(ExperimentConfig(command="sweep", region={"type": "all"}))
    with pytest.raises(ParseError):
        validate(ExperimentConfig(command="equivalence"))
    with pytest.raises(ConfigError):
        validate(ExperimentConfig(command="density", format="xml"))


# ---------------------------------------------------------------------------
# Runner


def small(command, **values):
    values.setdefault("quad_radial", 24)
    values.setdefault("quad_azimuthal", 48)
    return ExperimentConfig(command=command, **values)


def test_density_on_whole_sphere():
    rows = run(small("density", k_list=[4], region={"type": "all"}, probe_count=20))
    assert rows[0].inf_ratio == pytest.approx(1.0, abs=1e-3)
    assert rows[0].total_mass is None and rows[0].quad_change is None
    assert rows[0].version == __version__


def test_norming_on_empty_region_is_infinite():
    rows = run(small("norming", k_list=[3], region={"type": "empty"}))
    assert rows[0].norming_constant == math.inf
    assert "inf" in render_csv(rows).splitlines()[1].split(",")


def test_norming_rows_report_mass_and_quadrature_change():
    whole = run(small("norming", k_list=[3], region={"type": "all"}))[0]
    assert whole.total_mass == pytest.approx(math.pi, rel=1e-12)
    assert whole.quad_change == pytest.approx(0.0, abs=1e-12)
    holed = run(small("norming", k_list=[3], quad_radial=48, quad_azimuthal=96, region={
        "type": "complement", "region": {"type": "cap", "center": [0, 0], "radius": 1.0}}))[0]
    assert holed.total_mass == pytest.approx(math.pi * (1 - math.sin(1.0) ** 2), rel=5e-2)
    assert 0.0 <= holed.quad_change < 0.1
    empty = run(small("norming", k_list=[3], region={"type": "empty"}))[0]
    assert empty.total_mass == 0.0 and empty.quad_change == 0.0
    record = whole.to_record()
    assert COLUMNS.index("total_mass") < COLUMNS.index("quad_change") < COLUMNS.index("seed")
    assert record["total_mass"] == whole.total_mass


def test_peak_tail_row():
    rows = run(small("peak", k_list=[16], R=2.0))
    assert rows[0].tail_mass == pytest.approx(math.cos(0.5) ** 34, abs=1e-6)


def test_lemma34_rows():
    rows = run(ExperimentConfig(command="lemma34", k_list=[1, 8, 64], eps=1.0))
    assert [r.k for r in rows] == [1, 8, 64]
    assert all(r.kernel_bound >= math.exp(-1) / math.pi for r in rows)


def test_lemma32_rows():
    rows = run(small("lemma32", k_list=[8], R=1.0, eps=0.1, samples=2))
    assert 0.0 <= rows[0].exceptional_ratio <= 1.05


def test_carleson_and_berezin_rows():
    measure = {"type": "volume", "region": {"type": "all"}, "scale": 2.0}
    carleson = run(small("carleson", k_list=[6], measure=measure))[0]
    assert carleson.carleson_constant == pytest.approx(2.0, rel=1e-10)
    assert carleson.total_mass == pytest.approx(2 * math.pi, rel=1e-12)
    assert carleson.quad_change is None
    berezin = run(small("berezin", k_list=[6], measure=measure, probe_count=5))[0]
    assert berezin.berezin_sup == pytest.approx(2.0, rel=1e-10)


def test_equivalence_with_region_and_measure():
    config = small("equivalence", k_list=[4, 8], region={"type": "complement", "region": {
        "type": "cap", "center": [0, 0], "radius": "1/{k}"}},
        measure={"type": "random_atoms", "seed": 1, "count": 4, "mass": 0.1}, probe_count=30)
    rows = run(config)
    assert [r.k for r in rows] == [4, 8]
    for row in rows:
        assert math.isfinite(row.norming_constant)
        assert row.carleson_constant > 0 and row.berezin_sup > 0 and row.ball_mass_sup > 0


def test_sweeps_order_rows_by_k_then_value():
    config = small("sweep", k_list=[4, 8], sweep_axis="delta", sweep_values=[0.25, 0.5],
                   region={"type": "stripes", "period": "1/(2*sqrt({k}))", "fraction": "{delta}"},
                   probe_count=10)
    assert tasks_for(config) == [(4, 0.25), (4, 0.5), (8, 0.25), (8, 0.5)]
    rows = run(config)
    assert [(r.k, r.delta) for r in rows] == [(4, 0.25), (4, 0.5), (8, 0.25), (8, 0.5)]
    radius_sweep = run(small("sweep", k_list=[4], sweep_axis="R", sweep_values=[1.0, 2.0],
                             region={"type": "all"}, probe_count=10))
    assert [r.R for r in radius_sweep] == [1.0, 2.0]
    assert radius_sweep[1].tail_mass == pytest.approx(math.cos(1.0) ** 10)


def test_fock_rows():
    rows = run(ExperimentConfig(command="fock", k_list=[8, 16], region={"type": "bulk"},
                                quad_radial=32, quad_azimuthal=64))
    assert [r.norming_constant for r in rows] == pytest.approx([1.0, 1.0])
    assert rows[1].quad_radial == 32 and rows[1].quad_azimuthal == 64
    assert all(0.0 < r.leak < 1.0 for r in rows)


def test_thread_count_does_not_change_rows():
    base = dict(k_list=[2, 4, 6], region={"type": "cap", "center": [0.2, 0.1], "radius": 0.9})
    serial = run(small("norming", threads=1, **base))
    parallel = run(small("norming", threads=3, **base))
    assert [r.to_record() for r in serial] == [r.to_record() for r in parallel]


def test_plan_validates_without_computing():
    config = small("sweep", k_list=[4], sweep_axis="R", sweep_values=[1.0],
                   region={"type": "stripes", "period": 0.1, "fraction": "{delta}"})
    with pytest.raises(ParseError):
        plan(config)
    good = plan(small("density", k_list=[4, 8], region={"type": "all"}))
    assert good["tasks"] == [{"k": 4, "value": None}, {"k": 8, "value": None}]


# ---------------------------------------------------------------------------
# Output


def row(**values):
    return ResultRow(command="norming", k=4, config_digest="0123456789abcdef", **values)


def test_cell_formatting():
    assert format_cell(None) == ""
    assert format_cell(math.inf) == "inf"
    assert format_cell(1 / 3) == "0.333333333333"
    assert format_cell(7) == "7"


def test_empty_rows_give_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    write_output([], str(path), "csv")
    assert path.read_bytes() == (",".join(COLUMNS) + "\n").encode()


def test_one_row_gives_two_lines(tmp_path):
    path = tmp_path / "one.csv"
    write_output([row(norming_constant=2.5)], str(path), "csv")
    lines = path.read_bytes().split(b"\n")
    assert len(lines) == 3 and lines[-1] == b""
    assert b"\r" not in path.read_bytes()


def test_same_rows_give_identical_files(tmp_path):
    rows = [row(lambda_min=0.5, norming_constant=2.0), row(norming_constant=math.inf)]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_output(rows, str(a), "csv")
    write_output(rows, str(b), "csv")
    assert a.read_bytes() == b.read_bytes()


def test_json_output(tmp_path):
    path = tmp_path / "rows.json"
    write_output([row(norming_constant=math.inf, lambda_min=0.0)], str(path), "json")
    text = path.read_text()
    assert text.endswith("]\n")
    records = json.loads(text)
    assert records[0]["norming_constant"] == "inf"
    assert records[0]["tail_mass"] is None
    assert list(records[0]) == list(COLUMNS)


def test_unwritable_path(tmp_path):
    with pytest.raises(OutputError) as info:
        write_output([row()], str(tmp_path / "missing" / "dir" / "x.csv"), "csv")
    assert info.value.exit_code == 4
