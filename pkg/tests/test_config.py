"""Config parsing, CSV/manifest round trips, and command-line entry points.

Replay fidelity is the load-bearing property here: a manifest written by one
run must parse back to an equivalent config, and re-running from it must
reproduce the original CSV byte for byte.
"""

import dataclasses
import json

import pytest

from spinmem import cli, output
from spinmem.config import (
    ConfigError,
    RunConfig,
    config_echo,
    config_from_manifest,
    load_config,
    parse_config,
)


# ------------------------------------------------------------------ parsing


def test_empty_text_gives_defaults():
    assert parse_config("") == RunConfig()


def test_parse_overrides_and_comments():
    cfg = parse_config(
        """
        # run geometry
        N = 24
        theta = 0.5   # pump asymmetry
        eta_grid = 1.0, 2.0
        t_end = none
        workers = 2
        """
    )
    assert cfg.N == 24
    assert cfg.theta == 0.5
    assert cfg.eta_grid == (1.0, 2.0)
    assert cfg.t_end is None
    assert cfg.workers == 2


def test_parse_collects_every_violation_with_line_numbers():
    text = "N = 10\ntheta = 1.0\neta = 0\nbogus_key = 3\n"
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text)
    message = str(excinfo.value)
    assert "line 2" in message and "theta" in message
    assert "line 3" in message and "eta" in message
    assert "line 4" in message and "bogus_key" in message


def test_parse_rejects_malformed_line():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("just some words\n")


def test_parse_rejects_wrong_scalar_type():
    with pytest.raises(ConfigError, match="n_traj"):
        parse_config("n_traj = 2.5\n")


def test_duplicate_key_is_reported():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("N = 10\nN = 20\n")


# --------------------------------------------------------------- manifests


def test_config_echo_round_trips_through_manifest():
    cfg = parse_config("N = 16\neta_grid = 1.0,4.0\ns = 0.1\nseed = 42\n")
    manifest = json.dumps({"config": config_echo(cfg)})
    assert config_from_manifest(manifest) == cfg


def test_manifest_without_config_section_is_rejected():
    with pytest.raises(ConfigError, match="config"):
        config_from_manifest(json.dumps({"command": "sweep"}))


def test_load_config_detects_json(tmp_path):
    plain = tmp_path / "run.cfg"
    plain.write_text("N = 9\n", encoding="utf-8")
    assert load_config(plain).N == 9
    manifest = tmp_path / "run_manifest.json"
    manifest.write_text(
        json.dumps({"config": config_echo(RunConfig(N=9))}), encoding="utf-8"
    )
    assert load_config(manifest) == load_config(plain)


def test_range_validation_on_construction():
    with pytest.raises(ConfigError, match="burn_in"):
        RunConfig(burn_in=1.5)
    with pytest.raises(ConfigError, match="M"):
        RunConfig(M=0)


# --------------------------------------------------------------------- csv


def test_csv_round_trip_is_bit_exact(tmp_path):
    path = tmp_path / "table.csv"
    rows = [[0.6, 1.0 / 3.0, -1e-17], [2.0 ** 53, 0.1 + 0.2, 15.2]]
    output.write_csv(path, ["a", "b", "c"], rows)
    header, back = output.read_csv(path)
    assert header == ["a", "b", "c"]
    assert back == rows


def test_csv_formats_shortest_repr(tmp_path):
    path = tmp_path / "t.csv"
    output.write_csv(path, ["x"], [[0.6]])
    assert path.read_text(encoding="utf-8") == "x\n0.6\n"


def test_csv_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    output.write_csv(path, ["x", "y"], [])
    assert path.read_text(encoding="utf-8") == "x,y\n"


def test_csv_rejects_ragged_rows(tmp_path):
    with pytest.raises(ValueError, match="row"):
        output.write_csv(tmp_path / "bad.csv", ["x", "y"], [[1.0]])


def test_csv_oserror_names_path(tmp_path):
    missing = tmp_path / "no_such_dir" / "t.csv"
    with pytest.raises(OSError, match="no_such_dir"):
        output.write_csv(missing, ["x"], [[1.0]])


def test_manifest_contents(tmp_path):
    path = tmp_path / "sweep_manifest.json"
    cfg = RunConfig(N=10, seed=7)
    output.write_manifest(
        path, "sweep", cfg, {"master_seed": 7}, {"csv": "sweep.csv"}, 1.25
    )
    manifest = json.loads(path.read_text(encoding="utf-8"))
    assert manifest["command"] == "sweep"
    assert manifest["config"]["N"] == 10
    assert manifest["seeds"] == {"master_seed": 7}
    assert manifest["outputs"] == {"csv": "sweep.csv"}
    assert manifest["version"].startswith("spinmem ")


# ------------------------------------------------------------ command line


def test_main_without_command_fails():
    assert cli.main([]) == 1


def test_main_rejects_unknown_command(capsys):
    assert cli.main(["frobnicate"]) == 1
    assert "invalid choice" in capsys.readouterr().err


def test_main_rejects_unknown_flag():
    assert cli.main(["rates", "--not-a-flag"]) == 1


def test_main_reports_config_violations(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("theta = 2.0\n", encoding="utf-8")
    assert cli.main(["rates", "--config", str(bad)]) == 1
    assert "theta" in capsys.readouterr().err


def test_rates_command_writes_table(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("de_min = -4\nde_max = 4\ngrid_step = 1.0\n", encoding="utf-8")
    code = cli.main(["rates", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    header, rows = output.read_csv(tmp_path / "rates.csv")
    assert header == ["delta_e", "rate"]
    assert rows[0][0] == -4.0 and rows[-1][0] == 4.0
    assert all(r[1] > 0.0 for r in rows)
    # the default parameters pin the zero-gap rate (see test_rates)
    zero_row = min(rows, key=lambda r: abs(r[0]))
    assert zero_row[1] == pytest.approx(0.179099342987495, abs=1e-6)
    manifest = json.loads(
        (tmp_path / "rates_manifest.json").read_text(encoding="utf-8")
    )
    assert manifest["command"] == "rates"


def test_oracle_command_passes_and_reports_tv(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("N = 4\nM = 2\nn_jumps = 40000\n", encoding="utf-8")
    code = cli.main(["oracle", "--config", str(cfg), "--out", str(tmp_path)])
    captured = capsys.readouterr().out
    assert code == 0
    assert "TV distance" in captured
    header, rows = output.read_csv(tmp_path / "oracle.csv")
    assert header == ["state", "exact", "empirical"]
    assert len(rows) == 16
    assert sum(r[1] for r in rows) == pytest.approx(1.0)


def test_oracle_command_rejects_large_system(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("N = 13\n", encoding="utf-8")
    assert cli.main(["oracle", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "N" in capsys.readouterr().err


def test_seed_flag_overrides_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("N = 4\nM = 2\nseed = 5\nn_jumps = 1000\n", encoding="utf-8")
    cli.main(["oracle", "--config", str(cfg), "--seed", "11", "--out", str(tmp_path)])
    manifest = json.loads(
        (tmp_path / "oracle_manifest.json").read_text(encoding="utf-8")
    )
    assert manifest["config"]["seed"] == 11
    assert manifest["seeds"]["master_seed"] == 11


SMALL_SWEEP = (
    "N = 10\nM = 2\neta_grid = 4.0\nn_traj = 4\nn_distr = 2\n"
    "t_end = 40.0\nn_samples = 16\nseed = 3\n"
)


def test_manifest_replay_reproduces_csv(tmp_path):
    first = tmp_path / "first"
    second = tmp_path / "second"
    cfg = tmp_path / "run.cfg"
    cfg.write_text(SMALL_SWEEP, encoding="utf-8")
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(first)]) == 0
    manifest = first / "sweep_manifest.json"
    assert cli.main(["sweep", "--config", str(manifest), "--out", str(second)]) == 0
    assert (first / "sweep.csv").read_bytes() == (second / "sweep.csv").read_bytes()


def test_replayed_config_differs_only_in_out_dir(tmp_path):
    first = tmp_path / "first"
    cfg = tmp_path / "run.cfg"
    cfg.write_text(SMALL_SWEEP, encoding="utf-8")
    cli.main(["sweep", "--config", str(cfg), "--out", str(first)])
    replayed = load_config(first / "sweep_manifest.json")
    original = parse_config(SMALL_SWEEP)
    assert dataclasses.replace(replayed, out_dir=original.out_dir) == original
