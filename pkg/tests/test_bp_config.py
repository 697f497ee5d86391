import json

import numpy as np
import pytest

from bp_config import (
    BP_DEFAULT_JOBS,
    FLAGS_SOURCE,
    ConfigError,
    list_presets,
    load_json_document,
    resolve_config,
)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_seed_is_mandatory():
    with pytest.raises(ConfigError, match="seed is mandatory"):
        resolve_config("bp")


@pytest.mark.parametrize("seed", [-1, 2**64, 1.5, True])
def test_seed_must_be_unsigned_64_bit(seed):
    with pytest.raises(ConfigError, match="unsigned 64-bit") as info:
        resolve_config("bp", flags={"seed": seed})
    assert str(info.value).startswith(FLAGS_SOURCE)


def test_largest_seed_is_accepted():
    assert resolve_config("bp", flags={"seed": 2**64 - 1}).seed == 2**64 - 1


def test_bad_block_size_reports_file_line(tmp_path):
    filename = write(tmp_path / "exp.json", '{\n  "seed": 1,\n  "d": 3\n}\n')
    with pytest.raises(ConfigError) as info:
        resolve_config("bp", config_path=filename)
    assert info.value.filename == filename
    assert info.value.line == 3
    assert str(info.value).startswith(f"{filename}:3: d must be one of")


def test_json_syntax_error_reports_line(tmp_path):
    filename = write(tmp_path / "broken.json", '{\n  "seed": 1,\n  "d": 2,\n}\n')
    with pytest.raises(ConfigError, match="invalid JSON") as info:
        load_json_document(filename)
    assert info.value.line == 4


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="file not found"):
        resolve_config("bp", config_path=str(tmp_path / "nope.json"), flags={"seed": 1})


def test_unknown_body_kind_points_at_body(tmp_path):
    text = '{\n  "seed": 1,\n  "bodies": {\n    "K": {"kind": "cube"}\n  }\n}\n'
    filename = write(tmp_path / "bodies.json", text)
    with pytest.raises(ConfigError, match="kind must be one of") as info:
        resolve_config("bp", config_path=filename)
    assert info.value.line == 4


def test_schedule_must_decrease(tmp_path):
    filename = write(tmp_path / "sched.json", '{\n  "seed": 1,\n  "schedule": {"eps0": 1e-5}\n}\n')
    with pytest.raises(ConfigError, match="monotone") as info:
        resolve_config("bp", config_path=filename)
    assert info.value.line == 3


def test_negative_tolerance_rejected():
    with pytest.raises(ConfigError, match="tolerance sigma"):
        resolve_config("bp", flags={"seed": 1, "tolerances": {"sigma": -3.0}})


def test_layers_resolve_in_order(tmp_path):
    cfg = resolve_config("bp", preset="r5-counterexample", flags={"seed": 7})
    assert (cfg.d, cfg.n, cfg.seed) == (1, 5, 7)
    assert cfg.bodies["L"] == {"kind": "cigar", "radius": 1.01, "delta": 0.3}
    assert cfg.grid["theta_points"] == 4096
    assert cfg.grid["quadrature"]["resolution"] == 16
    assert cfg.params["mode"] == "counterexample"
    assert cfg.preset == "r5-counterexample"

    filename = write(tmp_path / "override.json", json.dumps({"n": 6, "seed": 3, "params": {"trials": 5}}))
    cfg = resolve_config("bp", preset="r5-counterexample", config_path=filename, flags={"seed": 11})
    assert (cfg.n, cfg.seed) == (6, 11)
    assert cfg.params == {"mode": "counterexample", "convexity_trials": 100000, "require_conclusive": True,
                          "trials": 5}

    cfg = resolve_config("bp", config_path=filename)
    assert (cfg.d, cfg.n, cfg.seed) == (1, 6, 3)
    assert cfg.jobs == BP_DEFAULT_JOBS


def test_preset_must_match_command():
    with pytest.raises(ConfigError, match="belongs to command"):
        resolve_config("transform", preset="r5-counterexample", flags={"seed": 1})
    with pytest.raises(ConfigError, match="unknown preset"):
        resolve_config("bp", preset="r6-counterexample", flags={"seed": 1})


def test_list_presets():
    names = [p["name"] for p in list_presets()]
    assert names == ["krrr-table", "r5-counterexample", "c8-counterexample", "mcors-table"]
    assert all(p["command"] == "bp" and p["description"] for p in list_presets())


def test_experiment_config_helpers():
    cfg = resolve_config("bp", flags={"seed": 4})
    assert cfg.N == 3
    assert cfg.thetas().shape == (1024, 3)
    assert np.array_equal(cfg.thetas(), resolve_config("bp", flags={"seed": 4}).thetas())
    assert cfg.quadrature().N == 3
    K = cfg.body("K")
    L = cfg.body("L")
    assert L(np.eye(3)[:1])[0] == pytest.approx(1.01 * K(np.eye(3)[:1])[0])
    with pytest.raises(ValueError, match="no body"):
        cfg.body("M")
    assert cfg.to_dict()["N"] == 3

    wide = resolve_config("bp", flags={"seed": 4, "n": 5})
    assert wide.quadrature() is None


def test_odd_harmonic_degree_points_at_degree(tmp_path):
    text = ('{\n  "seed": 1,\n  "bodies": {\n    "K": {"kind": "ball",\n'
            '          "perturbations": [{"eps": 0.1,\n                             "degree": 3}]}\n  }\n}\n')
    filename = write(tmp_path / "odd.json", text)
    with pytest.raises(ConfigError, match="even integer") as info:
        resolve_config("bp", config_path=filename)
    assert info.value.line == 6
