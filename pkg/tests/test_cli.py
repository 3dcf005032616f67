import csv
import json
import os

import pytest

from lindblad_egorov import cli
from lindblad_egorov.cli import CSV_HEADER, RunManifest, config_from_dict, main

SMALL = {"mode": "exact_case", "preset": "harmonic_exact", "h": 1 / 16, "T": 0.25,
         "samples": 2, "measure_floor": False}


def _write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(path)


def test_run_writes_csv_and_json(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", _write(tmp_path, SMALL), "--out", str(out)]) == 0
    with open(out / "run.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_HEADER
    assert [float(r[0]) for r in rows[1:]] == [0.0, 0.125, 0.25]
    doc = json.loads((out / "run.json").read_text())
    manifest = RunManifest.from_dict(doc["manifest"])
    assert manifest.command == "run"
    assert manifest.config["preset"] == "harmonic_exact"
    assert manifest.outputs["csv"].endswith("run.csv")
    assert set(manifest.phases) >= {"parse", "compute", "emit"}
    assert doc["report"]["mode"] == "exact_case"
    assert "max hs_distance" in capsys.readouterr().out


def test_manifest_round_trip():
    m = RunManifest("run", {"preset": "anharmonic"}, phases={"parse": 0.1}, seed=3)
    assert RunManifest.from_dict(json.loads(json.dumps(m.to_dict()))) == m


def test_unknown_preset_exits_2(tmp_path, capsys):
    code = main(["run", "--config", _write(tmp_path, {"preset": "quartic"}), "--out", str(tmp_path)])
    assert code == 2
    err = capsys.readouterr().err
    assert "unknown preset 'quartic'" in err and "anharmonic" in err


def test_negative_gamma_names_the_field(tmp_path, capsys):
    doc = dict(SMALL, gamma=-1)
    assert main(["run", "--config", _write(tmp_path, doc), "--out", str(tmp_path)]) == 2
    assert "gamma must be ≥ 0" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path, capsys):
    doc = dict(SMALL, foo=1)
    assert main(["run", "--config", _write(tmp_path, doc), "--out", str(tmp_path)]) == 2
    assert "unknown key(s): foo" in capsys.readouterr().err


def test_parse_error_reports_position(tmp_path, capsys):
    path = _write(tmp_path, '{"preset": "anharmonic",\n  "h": }')
    assert main(["run", "--config", path, "--out", str(tmp_path)]) == 2
    assert "line 2, column" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2
    assert "cannot read config" in capsys.readouterr().err


@pytest.mark.parametrize("doc", [
    dict(SMALL, h_list=[1 / 16]),
    dict(SMALL, h_list=[1 / 16, 1 / 32]),
    dict(SMALL, h_list=[1 / 16, 1 / 32, 1 / 64], gamma_list=[0.5, 1.0, 2.0]),
])
def test_bad_sweeps_are_config_errors(tmp_path, doc, capsys):
    assert main(["sweep", "--config", _write(tmp_path, doc), "--out", str(tmp_path)]) == 2
    assert "sweep" in capsys.readouterr().err


def test_unsorted_h_list_rejected():
    with pytest.raises(cli.ConfigError, match="descending"):
        config_from_dict(dict(SMALL, h_list=[1 / 32, 1 / 16, 1 / 64]))


@pytest.mark.skipif(hasattr(os, "geteuid") and os.geteuid() == 0,
                    reason="root ignores directory permissions")
def test_unwritable_output_exits_1(tmp_path, capsys):
    locked = tmp_path / "locked"
    locked.mkdir()
    locked.chmod(0o500)
    try:
        assert main(["run", "--config", _write(tmp_path, SMALL), "--out", str(locked / "x")]) == 1
    finally:
        locked.chmod(0o700)
    assert "cannot write" in capsys.readouterr().err


def test_output_path_that_is_a_file_exits_1(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--config", _write(tmp_path, SMALL), "--out", str(blocker)]) == 1
    assert "error" in capsys.readouterr().err


def test_threads_env_fallback(monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "3")
    assert cli._threads(None) == 3
    assert cli._threads(2) == 2
    monkeypatch.setenv(cli.THREADS_ENV, "many")
    with pytest.raises(cli.ConfigError):
        cli._threads(None)


def test_run_is_deterministic(tmp_path):
    cfg = _write(tmp_path, SMALL)
    for k in "ab":
        assert main(["run", "--config", cfg, "--out", str(tmp_path / k)]) == 0
    assert (tmp_path / "a" / "run.csv").read_bytes() == (tmp_path / "b" / "run.csv").read_bytes()


def test_validate_passes(tmp_path, capsys):
    assert main(["validate", "--out", str(tmp_path), "--seed", "5"]) == 0
    doc = json.loads((tmp_path / "validate.json").read_text())
    assert all(c["ok"] for c in doc["checks"])
    assert doc["manifest"]["seed"] == 5
    assert "FAIL" not in capsys.readouterr().out


def test_schema_is_a_valid_draft_2020_12_schema():
    import jsonschema
    jsonschema.Draft202012Validator.check_schema(cli.CONFIG_SCHEMA)
