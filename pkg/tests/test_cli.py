"""Command-line entry points."""

import json

import pytest

from flocklab.diagnostics import read_csv
from flocklab.harness import scenario, scenario_names
from flocklab.harness.cli import main


def test_scenario_list(capsys):
    assert main(["scenario", "list"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out == scenario_names()


def test_scenario_show(capsys):
    assert main(["scenario", "show", "parallel-lines-R2"]) == 0
    shown = json.loads(capsys.readouterr().out)
    assert shown == scenario("parallel-lines-R2").to_dict()


def test_scenario_show_requires_name(capsys):
    assert main(["scenario", "show"]) == 2
    assert "error" in capsys.readouterr().err


def test_run_library_scenario(tmp_path, capsys):
    out = tmp_path / "lines.csv"
    code = main(["run", "parallel-lines-R2", "--horizon", "3.0", "--out", str(out)])
    assert code == 0
    assert capsys.readouterr().out.strip() == str(out)
    meta, cols = read_csv(out)
    assert meta["scenario"] == "parallel-lines-R2"
    assert cols["t"][-1] == 3.0


def test_run_json_config(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(scenario("two-agent-smooth-collision", horizon=1.0).to_dict()))
    out = tmp_path / "pair.csv"
    assert main(["run", str(cfg_path), "--out", str(out)]) == 0
    _, cols = read_csv(out)
    assert cols["t"][-1] == 1.0


def test_run_unknown_config(capsys):
    assert main(["run", "definitely-not-a-scenario.json"]) == 2
    assert "error" in capsys.readouterr().err


@pytest.fixture(scope="module")
def pair_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("csv") / "pair.csv"
    scenario("two-agent-smooth-collision").run_to_csv(path=str(path))
    return path


def test_rates_command(pair_csv, capsys):
    assert main(["rates", str(pair_csv), "--window", "1", "5"]) == 0
    out = capsys.readouterr().out
    assert "model=powerlaw" in out and "exponent=" in out
    assert main(["rates", str(pair_csv), "--model", "logovert", "--window", "2", "10",
                 "--column", "V1"]) == 0
    assert "column=V1" in capsys.readouterr().out


def test_rates_missing_column(pair_csv, capsys):
    assert main(["rates", str(pair_csv), "--column", "V9"]) == 2
    assert "V9" in capsys.readouterr().err


def test_rates_bad_window(pair_csv, capsys):
    # domain errors surface as one-line messages, not tracebacks
    assert main(["rates", str(pair_csv), "--window", "0.5", "2"]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error:") and "t >= 1" in err


def test_accept_unknown_suite(capsys):
    assert main(["accept", "no-such-suite"]) == 2
    assert "error" in capsys.readouterr().err
