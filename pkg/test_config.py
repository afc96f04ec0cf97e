#!/usr/bin/env python3
"""
Tests for run settings and JSON scenario configs
"""

import json
from pathlib import Path

import pytest

from config import (
    SCENARIO_DEFAULTS,
    SWEEPABLE,
    Config,
    ScenarioConfig,
    config_hash,
    load_scenario_config,
    save_scenario_config,
    scenario_config_from_dict,
)
from errors import ConfigurationError
from main import main


def write_config(tmp_path, payload, name="scenario.json"):
    path = tmp_path / name
    if isinstance(payload, str):
        path.write_text(payload, encoding="utf-8")
    else:
        path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return str(path)


def test_config_defaults():
    settings = Config()
    assert settings.workers == 1
    assert settings.output_directory == "output"
    assert settings.log_level == "INFO"
    assert Config(log_level="debug").log_level == "DEBUG"


@pytest.mark.parametrize(
    "kwargs, field",
    [
        (dict(workers=0), "workers"),
        (dict(log_level="LOUD"), "log_level"),
        (dict(enumeration_cap=0), "enumeration_cap"),
        (dict(dedup_tolerance=0.0), "solver_tolerance"),
    ],
)
def test_config_validation(kwargs, field):
    with pytest.raises(ConfigurationError) as excinfo:
        Config(**kwargs)
    assert excinfo.value.field == field


def test_config_from_env(monkeypatch):
    monkeypatch.setenv("CAL_WORKERS", "3")
    monkeypatch.setenv("CAL_OUTPUT_DIR", "results")
    monkeypatch.setenv("CAL_LOG_LEVEL", "warning")
    settings = Config.from_env()
    assert settings.workers == 3
    assert settings.output_directory == "results"
    assert settings.log_level == "WARNING"
    assert Config.from_env(workers=5, output_directory=None).workers == 5


def test_config_from_env_rejects_bad_worker_count(monkeypatch):
    monkeypatch.setenv("CAL_WORKERS", "many")
    with pytest.raises(ConfigurationError) as excinfo:
        Config.from_env()
    assert excinfo.value.field == "CAL_WORKERS"


def test_every_sweepable_field_has_a_default():
    assert set(SWEEPABLE) == set(SCENARIO_DEFAULTS)
    for kind, names in SWEEPABLE.items():
        for name in names:
            assert name in SCENARIO_DEFAULTS[kind]


def test_load_valid_config(tmp_path):
    path = write_config(tmp_path, {"scenario": "tape", "params": {"generations": 12}, "seed": 9})
    cfg = load_scenario_config(path)
    assert cfg.kind == "tape"
    assert cfg.seed == 9
    assert cfg.merged_params()["generations"] == 12
    assert cfg.merged_params()["alphabet"] == "AB"


@pytest.mark.parametrize(
    "payload, field",
    [
        ({"scenario": "tape", "colour": "red"}, "colour"),
        ({"scenario": "tape", "params": {"bogus": 1}}, "params.bogus"),
        ({"scenario": "tape", "params": {"generations": "ten"}}, "params.generations"),
        ({"scenario": "tape", "params": {"generations": True}}, "params.generations"),
        ({"scenario": "warp-drive"}, "scenario"),
        ({"scenario": "tape", "seed": -1}, "seed"),
        ({"scenario": "tape", "seed": 2**64}, "seed"),
        ({"scenario": "tape", "schema_version": 2}, "schema_version"),
        ({"scenario": "tape", "output_directory": ""}, "output_directory"),
        ({"scenario": "propagator-check", "params": {"n_x": 1}}, "n_x"),
    ],
)
def test_load_rejects_bad_configs(tmp_path, payload, field):
    with pytest.raises(ConfigurationError) as excinfo:
        load_scenario_config(write_config(tmp_path, payload))
    assert excinfo.value.field == field
    assert excinfo.value.exit_code == 2


def test_json_syntax_error_reports_line(tmp_path):
    path = write_config(tmp_path, '{\n  "scenario": "tape",\n  "seed": ,\n}\n')
    with pytest.raises(ConfigurationError, match="line 3"):
        load_scenario_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError, match="cannot read"):
        load_scenario_config(str(tmp_path / "absent.json"))


def test_save_then_load(tmp_path):
    cfg = ScenarioConfig("higgs-toy", {"m2_i": -1.0}, seed=4, output_directory="out")
    path = str(tmp_path / "saved.json")
    save_scenario_config(cfg, path)
    loaded = load_scenario_config(path)
    assert loaded == cfg
    assert json.loads((tmp_path / "saved.json").read_text(encoding="utf-8"))["scenario"] == "higgs-toy"


def test_config_hash():
    cfg = ScenarioConfig("double-slit", {"gap": 1.0}, seed=1)
    assert config_hash(cfg) == config_hash(ScenarioConfig("double-slit", {"gap": 1.0}, seed=1))
    assert len(config_hash(cfg)) == 64
    assert config_hash(cfg) != config_hash(ScenarioConfig("double-slit", {"gap": 1.0}, seed=2))
    assert config_hash(cfg) == config_hash(ScenarioConfig("double-slit", {"gap": 1.0}, seed=1, output_directory="x"))
    # an explicit default is the same run as an omitted one
    assert config_hash(ScenarioConfig("tape")) == config_hash(ScenarioConfig("tape", {"generations": 30}))


def test_with_param_and_merged_params_do_not_share_state():
    cfg = scenario_config_from_dict({"scenario": "measurement"})
    swept = cfg.with_param("n_trials", 10)
    assert cfg.params == {}
    assert swept.merged_params()["n_trials"] == 10
    merged = cfg.merged_params()
    merged["labels"].append("sideways")
    assert SCENARIO_DEFAULTS["measurement"]["labels"] == ["up", "down"]


@pytest.mark.parametrize("path", sorted((Path(__file__).parent / "configs").glob("*.json")), ids=lambda p: p.name)
def test_shipped_configs_are_valid(path):
    cfg = load_scenario_config(str(path))
    assert cfg.output_directory.startswith("output/")


HIGGS_OFF = {"label": "machine-off", "boundary": [0.0, 0.0]}


@pytest.mark.parametrize(
    "kind, params, field",
    [
        ("measurement", {"base_s_i": ["x", 0.0]}, "params.base_s_i.0"),
        ("measurement", {"base_s_i": [0.0, None]}, "params.base_s_i.1"),
        ("measurement", {"amplitudes": [[1.0], [0.0, 1.0]]}, "params.amplitudes.0"),
        ("measurement", {"amplitudes": [[1.0, 0.0], ["one", 0.0]]}, "params.amplitudes.1"),
        ("measurement", {"labels": [1, "down"]}, "params.labels.0"),
        ("measurement", {"noise": {"kind": "gumbel", "location": None}}, "params.noise.location"),
        ("measurement", {"noise": {"kind": "gaussian", "scale": "wide"}}, "params.noise.scale"),
        ("measurement", {"noise": {"kind": 3}}, "params.noise.kind"),
        ("measurement", {"noise": {"kind": "cascade", "n_stages": 2.5}}, "params.noise.n_stages"),
        ("classical-select", {"boundary": ["left", 1.0]}, "params.boundary"),
        ("classical-select", {"boundary": [-1.0]}, "params.boundary"),
        ("higgs-toy", {"branches": [{"label": "on", "boundary": [0.0, "x"]}, HIGGS_OFF]}, "params.branches.0.boundary"),
        ("higgs-toy", {"branches": [HIGGS_OFF, {"label": 5, "boundary": [1.0, 1.0]}]}, "params.branches.1.label"),
    ],
)
def test_bad_parameter_elements_exit_2(tmp_path, capsys, kind, params, field):
    path = write_config(tmp_path, {"scenario": kind, "params": params})
    assert main(["validate", "--config", path]) == 2
    err = capsys.readouterr().err
    assert f"Error: {field}:" in err
    assert "Traceback" not in err
