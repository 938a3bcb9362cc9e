import json

import numpy as np
import pytest

from pbdrem.harness import cli
from pbdrem.harness.io import SCHEMA, csv_columns, load_config_file, read_csv, to_csv, write_csv
from pbdrem.harness.scenarios import ConfigError, ScenarioConfig, get_scenario, simulate

SHORT = get_scenario("open-b-classical").replace(horizon=0.5)

PINNED_HEAD = [
    "t", "q1", "q2", "qd1", "qd2", "tau1", "tau2", "qtilde1", "qtilde2",
    "y_pb", "y_cl1", "y_cl2", "lre_res_pb", "lre_res_cl",
    "energy", "work", "delta", "alpha", "int_delta_sq", "int_abs_alpha_delta",
]
BLOCKS = ["ymix", "phi11", "phi21", "y_new", "u3", "det_phi", "int_phi21_sq", "th_grad", "th_drem", "th_new", "theta"]


@pytest.fixture(scope="module")
def short_result():
    return simulate(SHORT)


def test_schema_is_pinned(short_result):
    cols = csv_columns(short_result)
    assert SCHEMA == "pbdrem.timeseries/1"
    assert cols[: len(PINNED_HEAD)] == PINNED_HEAD
    rest = [f"{b}_{i}" for b in BLOCKS for i in range(1, 6)] + [f"theta_tilde_{i}" for i in range(1, 6)]
    assert cols[len(PINNED_HEAD) :] == rest


def test_csv_round_trip_is_exact(short_result, tmp_path):
    path = write_csv(short_result, tmp_path / "sub" / "a.csv")
    schema, cols, data = read_csv(path)
    assert schema == SCHEMA
    assert cols == csv_columns(short_result)
    assert data.shape == (short_result.t.size, len(cols))
    np.testing.assert_array_equal(data[:, 0], short_result.t)
    np.testing.assert_array_equal(data[:, 1 : 1 + short_result.signals.shape[1]], short_result.signals)


def test_csv_bytes_deterministic(short_result):
    assert to_csv(short_result) == to_csv(simulate(SHORT))


def test_read_csv_requires_schema(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("t,q1\n0,1\n")
    with pytest.raises(ValueError):
        read_csv(p)


def test_ini_sections(tmp_path):
    p = tmp_path / "s.ini"
    p.write_text(
        "[mine]\nbase = track-classical\nhorizon = 2\nm2 = 0.6\nK1 = 5, 5\ndrem_normalized = yes\nrecord_every = 3\n"
        "\n[open-a-power]\ndt = 0.002\n\n[plain]\ninput = tau_c\n"
    )
    mine, cat, plain = load_config_file(p)
    assert mine.name == "mine" and mine.input == "closed_loop_tracking"
    assert mine.horizon == 2.0 and mine.K1 == (5.0, 5.0) and mine.drem_normalized and mine.record_every == 3
    assert mine.geometry.m2 == 0.6 and mine.theta[3] == pytest.approx(0.8 * 0.6)
    assert cat.dt == 0.002 and cat.gamma_drem == 100.0
    assert plain == ScenarioConfig(name="plain", input="tau_c")


def test_ini_errors_are_field_level(tmp_path):
    p = tmp_path / "b.ini"
    p.write_text("[x]\nbogus = 1\nbeta = 0.9\nl1 = -1\ndt = fast\n")
    with pytest.raises(ConfigError) as exc:
        load_config_file(p)
    assert set(exc.value.errors) == {"[x] bogus", "[x] beta", "[x] geometry", "[x] dt"}
    empty = tmp_path / "e.ini"
    empty.write_text("")
    with pytest.raises(ConfigError):
        load_config_file(empty)


def test_cli_list(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 12 and out[0].startswith("open-a-classical")


def test_cli_run_writes_csv_and_summary(tmp_path, capsys):
    out = tmp_path / "r.csv"
    rc = cli.main(["run", "open-b-classical", "--horizon", "0.5", "--dt", "0.002", "--out", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "|theta~_i(T)|" in text and "int Delta^2" in text and "wall time" in text
    _, cols, data = read_csv(out)
    assert data.shape[0] == 26
    assert data[-1, 0] == 0.5


def test_cli_overrides_and_json(tmp_path, capsys):
    rc = cli.main(
        ["run", "reg-known", "--horizon", "0.2", "--estimator", "gradient", "--parameterization", "classical",
         "--out", str(tmp_path), "--json"]
    )
    assert rc == 0
    s = json.loads(capsys.readouterr().out)
    assert s["estimator"] == "gradient" and s["parameterization"] == "classical"
    assert "qtilde_norm" in s
    assert (tmp_path / "reg-known.csv").exists()


def test_cli_input_override(tmp_path, capsys):
    assert cli.main(["run", "open-a-classical", "--input", "tau_c", "--horizon", "0.1", "--out", str(tmp_path), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["input"] == "tau_c"


def test_cli_config_file_many(tmp_path, capsys):
    p = tmp_path / "s.ini"
    p.write_text("[one]\nhorizon = 0.1\n[two]\ninput = tau_c\nhorizon = 0.1\n")
    assert cli.main(["run", str(p), "--out", str(tmp_path / "o"), "--jobs", "2", "--json"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [json.loads(x)["scenario"] for x in lines] == ["one", "two"]
    assert (tmp_path / "o" / "one.csv").exists() and (tmp_path / "o" / "two.csv").exists()


def test_cli_errors_are_machine_readable(tmp_path, capsys):
    assert cli.main(["run", "nope"]) == 2
    err = json.loads(capsys.readouterr().out)
    assert err["status"] == "error" and "scenario" in err["errors"]
    assert cli.main(["run", "open-a-classical", "--dt", "-1", "--out", str(tmp_path)]) == 2
    assert "dt" in json.loads(capsys.readouterr().out)["errors"]
    assert cli.main(["check", "AC99"]) == 2


def test_cli_check_subset(capsys):
    assert cli.main(["check", "ac10"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("AC10  PASS")
    assert json.loads(lines[-1]) == {"failures": [], "passed": 1, "status": "ok"}


def test_cli_check_failure_exit_code(monkeypatch, capsys):
    from pbdrem.harness import checks

    fake = checks.CheckResult("AC1", "forced", False, 1.0, 0.5)
    monkeypatch.setitem(checks.CHECKS, "AC1", lambda: fake)
    assert cli.main(["check", "AC1"]) == 1
    summary = json.loads(capsys.readouterr().out.splitlines()[-1])
    assert summary["status"] == "fail" and summary["failures"][0]["key"] == "AC1"
