import json

import pytest

from hypdrift import cli
from hypdrift.config import BUILTIN_CONFIGS, ConfigError, ExperimentConfig


# ------------------------------------------------------------------ configs

def test_builtin_configs_validate():
    for name, raw in BUILTIN_CONFIGS.items():
        cfg = ExperimentConfig.from_dict(raw)
        assert cfg.name == name
        assert cfg.experiment in cli.RUNNERS
        cfg.build_action()
        cfg.build_measure()
        cfg.build_potential()


def test_config_rejects_unknown_field():
    raw = dict(BUILTIN_CONFIGS["geometry-identities"])
    raw["unexpected"] = 1
    with pytest.raises(ConfigError, match=r"\$"):
        ExperimentConfig.from_dict(raw)


def test_config_error_reports_field_path():
    raw = json.loads(json.dumps(BUILTIN_CONFIGS["f2-uniform-equality"]))
    raw["measure"][0][1] = -1.0
    with pytest.raises(ConfigError, match=r"\$\['measure'\]\[0\]\[1\]"):
        ExperimentConfig.from_dict(raw)


def test_config_requires_seed():
    raw = dict(BUILTIN_CONFIGS["geometry-identities"])
    del raw["seed"]
    with pytest.raises(ConfigError, match="seed"):
        ExperimentConfig.from_dict(raw)


def test_fingerprint_stable_and_seed_sensitive():
    raw = dict(BUILTIN_CONFIGS["geometry-identities"])
    a = ExperimentConfig.from_dict(raw).fingerprint
    b = ExperimentConfig.from_dict(json.loads(json.dumps(raw))).fingerprint
    assert a == b
    raw2 = dict(raw)
    raw2["seed"] = raw["seed"] + 1
    assert ExperimentConfig.from_dict(raw2).fingerprint != a


def test_config_from_truncated_file(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text(json.dumps(BUILTIN_CONFIGS["geometry-identities"])[:40])
    with pytest.raises(ConfigError, match="JSON"):
        ExperimentConfig.from_file(p)


# ---------------------------------------------------------------- run / exit

def test_run_writes_report(tmp_path, capsys):
    out = tmp_path / "out"
    rc = cli.main(["run", "geometry-identities", "--out", str(out)])
    assert rc == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["pass"] is True
    assert rep["name"] == "geometry-identities"
    assert rep["fingerprint"]
    assert "timestamp" in rep


def test_run_seed_override_changes_fingerprint(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert cli.main(["run", "geometry-identities", "--out", str(out1)]) == 0
    assert cli.main(["run", "geometry-identities", "--out", str(out2),
                     "--seed", "99"]) == 0
    r1 = json.loads((out1 / "report.json").read_text())
    r2 = json.loads((out2 / "report.json").read_text())
    assert r1["fingerprint"] != r2["fingerprint"]
    assert r2["seed"] == 99


def test_run_unknown_config_exits_1(capsys):
    assert cli.main(["run", "no-such-config"]) == 1
    assert "error" in capsys.readouterr().err


def test_run_truncated_file_exits_1(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text("{\"name\": \"x\",")
    assert cli.main(["run", str(p)]) == 1
    assert "error" in capsys.readouterr().err


def test_run_config_file_roundtrip(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(BUILTIN_CONFIGS["f2-deviation-tail"]))
    out = tmp_path / "out"
    assert cli.main(["run", str(p), "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["pass"] is True


# ------------------------------------------------------------ list / describe

def test_list_configs(capsys):
    assert cli.main(["list", "configs"]) == 0
    out = capsys.readouterr().out
    for name in BUILTIN_CONFIGS:
        assert name in out


def test_list_actions(capsys):
    assert cli.main(["list", "actions"]) == 0
    out = capsys.readouterr().out
    for name in ("free-2", "modular", "schottky"):
        assert name in out


def test_describe_action(capsys):
    assert cli.main(["describe", "modular"]) == 0
    out = capsys.readouterr().out
    assert "plane model" in out
    assert "parabolic letter: t" in out


def test_describe_config(capsys):
    assert cli.main(["describe", "modular-strict"]) == 0
    blob = json.loads(capsys.readouterr().out)
    assert blob["name"] == "modular-strict"


def test_describe_potential(capsys):
    assert cli.main(["describe", "plane-bump"]) == 0
    assert "bump" in capsys.readouterr().out.lower()


def test_describe_unknown_exits_1(capsys):
    assert cli.main(["describe", "nope"]) == 1
