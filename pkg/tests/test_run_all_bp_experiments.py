import csv
import json

import pytest

from bp_transforms import load_multiplier_tables
from run_all_bp_experiments import (
    EXIT_CONFIG,
    EXIT_FAILURE,
    EXIT_OK,
    AlgebraAudit,
    exit_status,
    main,
)

SMALL_AUDIT = {"random_inputs": 200, "random_thetas": 20}


def write_config(tmp_path, name, document):
    filename = tmp_path / name
    filename.write_text(json.dumps(document, indent=2), encoding="utf-8")
    return str(filename)


def read_summary(out, command):
    with open(out / f"{command}_summary.json", encoding="utf-8") as f:
        return json.load(f)


def test_algebra_audit_passes(tmp_path):
    config = write_config(tmp_path, "audit.json", {"params": SMALL_AUDIT})
    out = tmp_path / "out"
    assert main(["algebra-audit", "--config", config, "--seed", "0", "--out", str(out)]) == EXIT_OK
    summary = read_summary(out, "algebra-audit")
    assert summary["exit_code"] == EXIT_OK
    assert summary["steps"][0]["failures"] == []
    assert (out / "algebra-audit_scan.csv").exists()


def test_injected_fault_is_caught(tmp_path):
    config = write_config(tmp_path, "fault.json", {"params": dict(SMALL_AUDIT, inject_fault="A2-sign")})
    out = tmp_path / "out"
    assert main(["algebra-audit", "--config", config, "--seed", "0", "--out", str(out)]) == EXIT_FAILURE
    failures = read_summary(out, "algebra-audit")["steps"][0]["failures"]
    assert any("d=4 (left)" in f for f in failures)


def test_unknown_fault_is_rejected():
    with pytest.raises(ValueError, match="unknown fault"):
        AlgebraAudit(inject_fault="A3-sign")


def test_runs_are_reproducible(tmp_path):
    config = write_config(tmp_path, "audit.json", {"params": SMALL_AUDIT})
    first, second = tmp_path / "first", tmp_path / "second"
    assert main(["algebra-audit", "--config", config, "--seed", "42", "--out", str(first)]) == EXIT_OK
    assert main(["algebra-audit", "--config", config, "--seed", "42", "--out", str(second)]) == EXIT_OK
    for name in ("algebra-audit_scan.csv", "algebra-audit_summary.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_multiplier_table_dump(tmp_path):
    config = write_config(tmp_path, "mult.json", {
        "params": {"operation": "multiplier-table", "dimensions": [3, 5], "alphas": [0.5, 1.5], "j_max": 8},
    })
    out = tmp_path / "out"
    assert main(["transform", "--config", config, "--seed", "7", "--out", str(out)]) == EXIT_OK
    tables = load_multiplier_tables(str(out / "transform_multipliers.json"))
    assert [(t.N, t.alpha) for t in tables] == [(3, 0.5), (3, 1.5), (5, 0.5), (5, 1.5)]
    with open(out / "transform_scan.csv", newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 4 * 5
    assert max(float(r["reciprocity_defect"]) for r in rows) < 1e-8


def test_excluded_alpha_exits_with_config_code(tmp_path):
    config = write_config(tmp_path, "cos.json", {"params": {"operation": "cosine", "alpha": 3.0}})
    out = tmp_path / "out"
    assert main(["transform", "--config", config, "--seed", "7", "--out", str(out)]) == EXIT_CONFIG
    assert read_summary(out, "transform")["steps"][0]["status"] == "rejected"


def test_missing_seed_exits_with_config_code(tmp_path):
    assert main(["bp", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_bad_config_exits_with_config_code(tmp_path):
    config = write_config(tmp_path, "bad.json", {"d": 3})
    assert main(["bp", "--config", config, "--seed", "1", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_list_presets(capsys):
    assert main(["--list-presets"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "r5-counterexample" in out
    assert "c8-counterexample" in out


def test_dilated_ball_comparison(tmp_path):
    config = write_config(tmp_path, "bp.json", {"grid": {"theta_points": 16}})
    out = tmp_path / "out"
    assert main(["bp", "--config", config, "--seed", "3", "--out", str(out)]) == EXIT_OK
    report = read_summary(out, "bp")["steps"][0]["report"]
    assert report["verdict"] == "consistent"
    with open(out / "bp_scan.csv", newline="", encoding="utf-8") as f:
        assert len(list(csv.DictReader(f))) == 16


def test_intersection_body_of_ball(tmp_path):
    config = write_config(tmp_path, "ib.json", {
        "grid": {"theta_points": 32},
        "params": {"lambdas": [1.0], "degree_caps": [4, 8], "expect": "member"},
    })
    out = tmp_path / "out"
    assert main(["intersection-test", "--config", config, "--seed", "3", "--out", str(out)]) == EXIT_OK
    # stored rho^1 of the ball is exact, so only the first cap is evaluated
    with open(out / "intersection-test_scan.csv", newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 1
    assert rows[0]["truncation"] == "exact"
    assert rows[0]["degree_cap"] == "4"


def test_weighted_sections_report_route_gap(tmp_path):
    config = write_config(tmp_path, "weighted.json", {
        "grid": {"theta_points": 4},
        "params": {"mode": "weighted", "cases": ["positive-alpha"], "alpha": 0.5},
    })
    out = tmp_path / "out"
    assert main(["sections", "--config", config, "--seed", "2", "--out", str(out)]) == EXIT_OK
    with open(out / "sections_scan.csv", newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert [r["case"] for r in rows] == ["positive-alpha"]
    assert float(rows[0]["route_gap"]) < 1e-8


def test_exit_status_precedence():
    assert exit_status([{"status": "success"}, {"status": "rejected"}, {"status": "failed"}], False) == EXIT_CONFIG
    assert exit_status([{"status": "success"}, {"status": "error"}], False) == EXIT_FAILURE
    assert exit_status([{"status": "inconclusive"}], False) == EXIT_OK
    assert exit_status([{"status": "inconclusive"}], True) == 3
