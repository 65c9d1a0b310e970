from __future__ import annotations

import csv
import io
import json

import pytest

from pbrkit.cli import main


def run(capsys, *argv) -> tuple[int, str, str]:
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text: str) -> list[dict]:
    body = "\n".join(ln for ln in text.splitlines() if not ln.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


@pytest.fixture(scope="module")
def zoo_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("zoo")
    assert main(["model-zoo", "--out", str(out)]) == 0
    return out


def test_helstrom_zero(capsys):
    code, out, _ = run(capsys, "helstrom", "--overlap2", "0")
    assert code == 0
    assert out.strip().splitlines()[-1] == "0"
    assert out.startswith("# tool: pbrkit")


def test_helstrom_half_json(capsys):
    code, out, _ = run(capsys, "helstrom", "--overlap2", "0.5", "--format", "json")
    assert json.loads(out)["helstrom_error_bound"] == pytest.approx(0.1464466094067262, abs=1e-12)


def test_antidistinguish_half(capsys):
    code, out, _ = run(capsys, "antidistinguish", "--overlap2", "0.5")
    data = json.loads(out)
    assert code == 0 and data["n"] == 2 and data["residual"] <= 1e-12
    assert data["metadata"]["version"] and len(data["effects"]) == 4


def test_zoo_files(zoo_dir):
    names = {p.stem for p in zoo_dir.glob("*.json")}
    assert {"psi_ontic", "overlapping_toy", "factorisable_product", "diagonal_correlated", "measurement_dependent"} <= names


@pytest.mark.parametrize(
    "name,theorem,code,status",
    [
        ("psi_ontic", "1", 0, "overlap_zero"),
        ("psi_ontic", "2", 0, "overlap_zero"),
        ("overlapping_toy", "1", 3, "witness_found"),
        ("diagonal_correlated", "1", 2, "hypotheses_not_met"),
        ("measurement_dependent", "1", 0, "overlap_zero"),
        ("measurement_dependent", "2", 2, "hypotheses_not_met"),
    ],
)
def test_verify_exit_codes(capsys, zoo_dir, name, theorem, code, status):
    got, out, _ = run(
        capsys, "verify", "--model", str(zoo_dir / f"{name}.json"), "--measurement", str(zoo_dir / "pbr_measurement.json"), "--theorem", theorem
    )
    data = json.loads(out)
    assert got == code and data["status"] == status
    assert data["metadata"]["zero_tol"] == 1e-12


def test_verify_local_flag(capsys, zoo_dir):
    code, out, _ = run(capsys, "verify", "--model", str(zoo_dir / "weakly_correlated.json"), "--local")
    assert code == 3 and json.loads(out)["status"] == "witness_found"


def test_verify_validation_error(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"space": {"size": 2}, "preparations": [], "epistemic": {"M": {"P": [0.3, 0.3]}}, "response": {"M": [[1, 0], [0, 1]]}}))
    code, _, err = run(capsys, "verify", "--model", str(bad))
    assert code == 1 and json.loads(err)["error"] == "ModelValidationError"


def test_usage_error_exit_code(capsys):
    code, _, err = run(capsys, "verify")
    assert code == 1 and json.loads(err)["error"] == "UsageError"


def test_maxoverlap_rows(capsys):
    code, out, _ = run(capsys, "maxoverlap", "--epsilon-grid", "0,0.05")
    rows = csv_rows(out)
    assert code == 0 and len(rows) == 2
    assert float(rows[0]["value"]) <= 1e-9 and float(rows[1]["value"]) >= float(rows[0]["value"])


def test_maxoverlap_bad_grid(capsys):
    code, _, err = run(capsys, "maxoverlap", "--epsilon-grid", "0,-1")
    assert code == 1 and "error" in json.loads(err)


def test_simulate_roundtrip(capsys, tmp_path):
    meas = tmp_path / "m.json"
    assert run(capsys, "antidistinguish", "--overlap2", "0.5", "--out", str(meas))[0] == 0
    code, out, _ = run(capsys, "simulate", "--trials", "5000", "--seed", "7", "--correlation", "shared:0.5", "--measurement", str(meas))
    data = json.loads(out)
    assert code == 0 and data["trials"] == 5000 and data["forbidden_count"] == 0
    assert data["metadata"]["seed"] == 7 and data["metadata"]["config"]["strength"] == 0.5
    code, out, _ = run(capsys, "simulate", "--trials", "500", "--format", "csv", "--measurement", str(meas))
    assert len(csv_rows(out)) == 16


def test_simulate_model_file(capsys, zoo_dir):
    code, out, _ = run(capsys, "simulate", "--trials", "2000", "--model", str(zoo_dir / "psi_ontic.json"))
    assert code == 0 and json.loads(out)["forbidden_count"] == 0


def test_simulate_rejects_bad_measurement(capsys, tmp_path):
    from pbrkit.quantum import Measurement

    path = tmp_path / "z.json"
    path.write_text(json.dumps(Measurement.computational(4).to_json()))
    code, _, err = run(capsys, "simulate", "--trials", "10", "--measurement", str(path))
    assert code == 1 and json.loads(err)["error"] == "VerificationError"


def test_output_dir_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("PBRKIT_OUTPUT_DIR", str(tmp_path))
    assert run(capsys, "helstrom", "--overlap2", "0.25")[0] == 0
    assert (tmp_path / "helstrom.txt").exists()


def test_zoo_models_roundtrip_through_verify(capsys, zoo_dir):
    """Every emitted model file is accepted by verify without modification."""
    index = json.loads((zoo_dir / "index.json").read_text())
    for entry in index["models"]:
        args = ["verify", "--model", str(zoo_dir / entry["file"]), "--measurement-id", entry["measurement"]]
        code, out, err = run(capsys, *args)
        assert code in (0, 2, 3), err
        assert json.loads(out)["status"] in ("overlap_zero", "hypotheses_not_met", "witness_found")
