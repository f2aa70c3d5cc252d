import json

import pytest

from gaugelab.cli import main
from gaugelab.errors import ConfigError
from gaugelab.report import Check, Report, Scenario, emit, load_config, order, run_scenario


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_chern_report_passes_and_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["chern", "--out", str(a)]) == 0
    assert main(["chern", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rep = json.loads(a.read_text())
    assert rep["pass"] is True
    assert rep["scenario"]["params"]["resolution"] == 128
    assert "runtime" not in rep
    assert {"name", "measured", "expected", "tolerance", "pass", "basis", "detail"} <= set(rep["checks"][0])


def test_timing_flag_adds_runtime(tmp_path):
    out = tmp_path / "r.json"
    main(["chern", "--resolution", "32", "--timing", "--out", str(out)])
    assert "runtime" in json.loads(out.read_text())


def test_text_format(capsys):
    assert main(["chern", "--format", "text"]) == 0
    text = capsys.readouterr().out
    assert text.startswith("[PASS] chern (chern)")
    assert "chern_charge_-2" in text


def test_failing_tolerance_gives_exit_one(tmp_path, capsys):
    cfg = write(tmp_path, "[tight]\ntarget = chern\nresolution = 32\ntol = 1e-12\n")
    assert main(["chern", "--config", str(cfg)]) == 1
    rep = json.loads(capsys.readouterr().out)
    assert rep["pass"] is False
    assert rep["scenario"]["name"] == "tight"


def test_error_inside_a_target_becomes_failed_check(capsys):
    assert main(["hodge", "--resolution", "3"]) == 1
    rep = json.loads(capsys.readouterr().out)
    assert rep["checks"][0]["pass"] is False
    assert rep["checks"][0]["measured"] == "nan"
    assert "Error" in rep["checks"][0]["detail"]


@pytest.mark.parametrize(
    "argv",
    [
        ["no-such-target"],
        ["chern", "--format", "xml"],
        ["chern", "--seed", "seven"],
    ],
)
def test_bad_arguments_exit_two(argv, capsys):
    assert main(argv) == 2
    assert "configuration error" in capsys.readouterr().err


@pytest.mark.parametrize(
    "text",
    [
        "[a]\ntarget = nonsense\n",
        "[chern]\nbogus = 1\n",
        "[chern]\ntol = -1\n",
        "[chern]\nseed = 1.5\n",
        "not an ini file",
    ],
)
def test_malformed_config_exits_two(tmp_path, text):
    assert main(["suite", "--config", str(write(tmp_path, text))]) == 2


def test_missing_section_for_subcommand(tmp_path):
    cfg = write(tmp_path, "[chern]\nresolution = 32\n")
    assert main(["hodge", "--config", str(cfg)]) == 2


def test_missing_config_file(tmp_path):
    assert main(["chern", "--config", str(tmp_path / "nope.ini")]) == 2


def test_config_keeps_case_and_seed(tmp_path):
    cfg = write(tmp_path, "[defaults]\nseed = 3\n[kk]\ntarget = kk-geodesic\nT = 0.5\n[chern]\nseed = 11\n")
    kk, ch = load_config(cfg)
    assert kk.params == {"T": 0.5} and kk.seed == 3
    assert ch.seed == 11 and ch.get("resolution") == 128


def test_empty_check_list_serialises():
    rep = Report(Scenario("empty", "chern"), [])
    payload = json.loads(emit(rep))
    assert payload["pass"] is True and payload["checks"] == []
    many = json.loads(emit([rep, rep]))
    assert many["pass"] is True and len(many["reports"]) == 2
    assert emit(rep, "text").startswith("[PASS] empty")


def test_single_failing_check_fails_the_report():
    bad = Check("x", float("inf"), 0.0, 1.0, False)
    rep = Report(Scenario("one", "chern"), [bad])
    payload = json.loads(emit(rep))
    assert payload["pass"] is False
    assert payload["checks"][0]["measured"] == "inf"


def test_unknown_format_raises():
    with pytest.raises(ConfigError):
        emit(Report(Scenario("x", "chern")), "yaml")


def test_order_helper():
    assert order(4e-4, 1e-4) == pytest.approx(2.0)
    assert order(1e-3, 1e-13, floor=1e-11) == float("inf")


def test_kk_geodesic_writes_trajectory(tmp_path):
    cfg = write(tmp_path, "[kk-geodesic]\nT = 0.5\nstep = 1e-2\n")
    out = tmp_path / "kk.json"
    assert main(["kk-geodesic", "--config", str(cfg), "--out", str(out)]) == 0
    lines = out.with_suffix(".csv").read_text().splitlines()
    assert lines[0].startswith("t,x0,x1,x2,u0")
    assert len(lines) == 52


def test_scenario_run_matches_cli_payload(tmp_path):
    out = tmp_path / "m.json"
    main(["maxwell", "--resolution", "8", "--out", str(out)])
    direct = run_scenario(Scenario("maxwell", "maxwell", {"resolution": 8}))
    assert json.loads(out.read_text()) == direct.to_dict()
