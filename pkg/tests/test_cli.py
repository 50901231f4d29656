import csv
import io
import json
from pathlib import Path

import pytest

from switchcert.certify import StabilityCertificate
from switchcert.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, text, name="cfg.json"):
    p = tmp_path / name
    p.write_text(text)
    return p


EX3 = {
    "schema_version": 1,
    "kind": "raw_switched",
    "system": {"matrices": [[[0, 1], [0, 0]], [[0, 1], [2, 1]]],
               "bounds": {"lower": [0.52, 0.0], "upper": [1.0, 0.48]}},
    "analysis": {"h": 2, "epsilon": 1e-16},
}


def test_certify_exit_codes(capsys, tmp_path):
    code, out, _ = run(capsys, "certify", "--config", CONFIGS / "example3.json")
    assert code == 2
    assert "Inconclusive" in out
    code, out, _ = run(capsys, "certify", "--config", write(tmp_path, json.dumps(EX3)))
    assert code == 0
    assert "CertifiedStable" in out


def test_certify_json_roundtrip(capsys, tmp_path):
    out_path = tmp_path / "cert.json"
    code, _, _ = run(capsys, "certify", "--config", CONFIGS / "example3.json", "--out", out_path)
    assert code == 2
    d = json.loads(out_path.read_text())
    cert = StabilityCertificate.from_dict(d)
    assert cert.J == pytest.approx(0.804719, abs=1e-6)
    assert cert.h == 2


def test_malformed_matrix_row(capsys, tmp_path):
    text = ('{\n  "schema_version": 1,\n  "kind": "raw_switched",\n  "system": {\n'
            '    "matrices": [[[0, 1], [0, 0]],\n                 [[0, 1], [2]]],\n'
            '    "bounds": {"lower": [0.5, 0], "upper": [1, 0.5]}\n  }\n}\n')
    code, _, err = run(capsys, "certify", "--config", write(tmp_path, text))
    assert code == 1
    assert "cfg.json:6:" in err and "row 2" in err


@pytest.mark.parametrize("text,needle", [
    ('{"schema_version": 1, "kind": "raw_switched", "system": {"matrices": [[[1]]], '
     '"bounds": {"lower": [1], "upper": [1]}, "colour": 3}}', "unknown field 'colour'"),
    ('{"schema_version": 2, "kind": "raw_switched"}', "schema_version"),
    ('{"schema_version": 1, "kind": "rocket"}', "kind"),
    ('{"schema_version": 1,', "invalid JSON"),
    ('{"schema_version": 1, "kind": "raw_switched", "system": {"matrices": [[[1]]], '
     '"bounds": {"lower": [0.7], "upper": [0.9]}}}', "sum"),
])
def test_config_errors(capsys, tmp_path, text, needle):
    code, _, err = run(capsys, "certify", "--config", write(tmp_path, text))
    assert code == 1
    assert err.startswith("error:")
    assert needle in err


def test_missing_file_and_usage(capsys, tmp_path):
    assert run(capsys, "certify", "--config", tmp_path / "nope.json")[0] == 1
    assert run(capsys, "certify")[0] == 1
    assert run(capsys, "certify", "--config", CONFIGS / "example3.json", "--h", "0")[0] == 1


def test_sweep_deterministic(capsys, tmp_path):
    cfg = CONFIGS / "example1.json"
    _, a, _ = run(capsys, "sweep", "--config", cfg, "--h-max", 6)
    _, b, _ = run(capsys, "sweep", "--config", cfg, "--h-max", 6, "--workers", 1)
    assert a == b
    rows = list(csv.DictReader(io.StringIO(a)))
    assert rows[0].keys() >= {"h", "rho", "J", "verdict", "status", "wall_ms"}
    assert len(rows) == 6 * 3
    assert all(r["wall_ms"] == "" for r in rows)
    # full precision output
    assert all(len(r["J"].replace("-", "").replace(".", "").lstrip("0")) >= 15 for r in rows if r["J"])


def test_sweep_timing_and_empty_grid(capsys, tmp_path):
    _, out, _ = run(capsys, "sweep", "--config", CONFIGS / "example3.json", "--timing")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows and float(rows[0]["wall_ms"]) >= 0
    cfg = json.loads((CONFIGS / "example1.json").read_text())
    cfg["sweep"] = {"h": [1, 2], "grid": {"rho": []}}
    code, out, _ = run(capsys, "sweep", "--config", write(tmp_path, json.dumps(cfg)))
    assert code == 0
    assert out.strip().count("\n") == 0 and out.startswith("h,")


def test_attack(capsys):
    code, out, _ = run(capsys, "attack", "--config", CONFIGS / "example3.json")
    plan = json.loads(out)
    assert plan["schedule"] == [2, 1]
    assert plan["monodromy_radius"] == pytest.approx(2.0)
    code, out, _ = run(capsys, "attack", "--config", CONFIGS / "example3.json", "--schedule", "1,1,2")
    assert "radius" in out


def test_oracle(capsys):
    code, out, _ = run(capsys, "oracle", "--config", CONFIGS / "cycle4_oracle.json")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["sequence", "limit"]
    assert {r[0]: float(r[1]) for r in rows[1:]} == {"1 2": 0.5, "2 2": 0.5}


def test_simulate(capsys):
    code, out, _ = run(capsys, "simulate", "--config", CONFIGS / "example1.json", "--T", 100,
                       "--runs", 2, "--stride", 10)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert {r["run"] for r in rows} == {"0", "1"}
    _, again, _ = run(capsys, "simulate", "--config", CONFIGS / "example1.json", "--T", 100,
                      "--runs", 2, "--stride", 10)
    assert out == again


def test_bench(capsys):
    code, out, _ = run(capsys, "bench")
    assert code == 0
    assert "15,3,14348907,136" in out


def test_lp_debug(capsys):
    code, out, _ = run(capsys, "lp-debug", "--config", CONFIGS / "example3.json")
    assert code == 0
    assert "certificate: ok" in out
