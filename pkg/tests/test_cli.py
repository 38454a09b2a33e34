import json
import subprocess
import sys
from pathlib import Path

import pytest

from seclin.cli import main

SCHEMES = Path(__file__).resolve().parent.parent / "schemes"
EX1 = str(SCHEMES / "example1.json")
EX1_SEC = str(SCHEMES / "example1_secured_int.json")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_example1(capsys):
    code, out, _ = run(capsys, "check", EX1)
    assert code == 0
    assert "δ = 11/24" in out and "γ = 2/3" in out


def test_check_json(capsys):
    code, out, _ = run(capsys, "check", EX1_SEC, "--json")
    doc = json.loads(out)
    assert code == 0
    assert doc["costs"]["delta"] == "11/24"
    assert [u["lemma1_rank"] for u in doc["secrecy"]["per_user"]] == [2, 2, 1, 2]


def test_check_corrupted(tmp_path, capsys):
    doc = json.loads(Path(EX1).read_text())
    doc["F"][1][1] = 9
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "check", str(path))
    assert code == 2 and "inconsistent factorization" in err


def test_check_dense_names_cost_violation(tmp_path, capsys):
    path = tmp_path / "dense.json"
    path.write_text(json.dumps({"field": "gf:5", "F": [[1, 1, 1], [1, 2, 3]],
                                "D": [[1, 1, 1], [1, 2, 3]], "E": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}))
    code, out, _ = run(capsys, "check", str(path))
    assert code == 3 and "theorem2 (cost converse) violated" in out


def test_missing_file(capsys):
    code, _, err = run(capsys, "check", "/nonexistent.json")
    assert code == 2


def test_factorize_and_secure(tmp_path, capsys):
    req = tmp_path / "req.json"
    req.write_text(json.dumps({"field": "gf:7", "F": [[1, 2, 3], [4, 5, 6]], "P": [[1, 2], [3, 1]]}))
    out_s = tmp_path / "s.json"
    assert run(capsys, "factorize", str(req), "--form", "systematic", "-o", str(out_s))[0] == 0
    sdoc = json.loads(out_s.read_text())
    assert sdoc["D"] == [[1, 0, 1, 2], [0, 1, 3, 1]]
    out_sec = tmp_path / "sec.json"
    assert run(capsys, "secure", str(out_s), "-o", str(out_sec))[0] == 0
    assert len(json.loads(out_sec.read_text())["C"][0]) == 2
    code, out, _ = run(capsys, "audit-exact", str(out_sec), "--json")
    assert code == 0 and all(u["exact_zero"] for u in json.loads(out)["per_user"])


def test_factorize_identity(tmp_path, capsys):
    req = tmp_path / "req.json"
    req.write_text(json.dumps({"field": "real", "F": [[1, 2], [3, 4]]}))
    code, out, _ = run(capsys, "factorize", str(req), "--form", "identity", "--json")
    assert code == 0 and json.loads(out)["D"] == [[1, 0], [0, 1]]


def test_secure_refuses_insecure(tmp_path, capsys):
    path = tmp_path / "dense.json"
    path.write_text(json.dumps({"field": "gf:5", "F": [[1, 1, 1], [1, 2, 3]],
                                "D": [[1, 1, 1], [1, 2, 3]], "E": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}))
    code, _, err = run(capsys, "secure", str(path))
    assert code == 3 and "insecure factorization" in err


def test_simulate_csv_and_seed_env(tmp_path, capsys, monkeypatch):
    csv_path = tmp_path / "t.csv"
    code, out, _ = run(capsys, "simulate", EX1_SEC, "--trials", "50", "--seed", "4", "--csv", str(csv_path), "--json")
    assert code == 0 and json.loads(out)["seed"] == 4
    assert csv_path.read_text().startswith("trial,user,expected,recovered,match")
    monkeypatch.setenv("SECLIN_SEED", "17")
    code, out, _ = run(capsys, "simulate", EX1_SEC, "--trials", "5", "--json")
    assert json.loads(out)["seed"] == 17


def test_audit_exact_unsecured_fails(capsys):
    code, out, _ = run(capsys, "audit-exact", EX1, "--modulus", "11", "--user", "3")
    assert code == 3 and "3.45943" in out


def test_audit_exact_infeasible(capsys):
    code, _, err = run(capsys, "audit-exact", EX1, "--modulus", "11", "--secure", "--max-states", "1000")
    assert code == 4 and "infeasible" in err


def test_audit_exact_needs_gf(capsys):
    assert run(capsys, "audit-exact", EX1)[0] == 2


def test_audit_bound_and_gaussian(capsys):
    code, out, _ = run(capsys, "audit-bound", EX1_SEC, "--user", "1", "--json")
    u = json.loads(out)["per_user"][0]
    assert code == 0 and u["M_k"] == pytest.approx(14.0064880917, rel=1e-9)
    code, out, _ = run(capsys, "audit-gaussian", EX1_SEC, "--json")
    doc = json.loads(out)
    assert all(u["exact_leakage"] <= u["bound"] for u in doc["per_user"])


def test_epsilon(capsys):
    code, out, _ = run(capsys, "epsilon", EX1_SEC, "--eps", "0.01", "--json")
    doc = json.loads(out)
    assert code == 0 and len(doc["per_user"]) == 4
    assert all(u["bound"] == pytest.approx(0.01, abs=1e-9) for u in doc["per_user"])


def test_pipeline_example1_bundle(tmp_path, capsys):
    out = tmp_path / "b"
    code, text, _ = run(capsys, "pipeline", EX1_SEC, "-o", str(out), "--trials", "20", "--eps", "0.01",
                        "--audit-modulus", "11")
    assert code == 0
    assert {p.name for p in out.iterdir()} == {
        "scheme.json", "secured.json", "check.json", "simulation.json", "audit.json", "summary.txt"}
    check = json.loads((out / "check.json").read_text())
    assert check["costs"]["delta"] == "11/24" and check["costs"]["gamma"] == "2/3"
    assert [u["dred_rank"] for u in check["secrecy"]["per_user"]] == [3, 3, 3, 3]
    aud = json.loads((out / "audit.json").read_text())
    u1 = aud["per_user"][0]
    assert u1["lambda_max(X_k X_k^T)"] == pytest.approx(19.66, abs=0.01)
    assert u1["lambda_min(Y_k Y_k^T)"] == pytest.approx(1.40, abs=0.01)
    assert all(u["sigma_c_for_eps"] > 0 for u in aud["per_user"])
    assert all(u["exact_zero"] for u in aud["gf_audit"]["per_user"])


def test_pipeline_is_byte_reproducible(tmp_path, capsys):
    for name in ("a", "b"):
        run(capsys, "pipeline", EX1, "-o", str(tmp_path / name), "--trials", "30", "--seed", "5")
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_pipeline_systematic_gf7(tmp_path, capsys):
    req = tmp_path / "req.json"
    req.write_text(json.dumps({"field": "gf:7", "F": [[3, 1, 4], [1, 5, 2]], "P": [[2, 6], [1, 3]]}))
    code, _, _ = run(capsys, "pipeline", str(req), "-o", str(tmp_path / "b"), "--trials", "50")
    assert code == 0
    aud = json.loads((tmp_path / "b" / "audit.json").read_text())
    assert all(u["exact_zero"] for u in aud["per_user"])


def test_pipeline_stage_failure(tmp_path, capsys):
    path = tmp_path / "dense.json"
    path.write_text(json.dumps({"field": "gf:5", "F": [[1, 1, 1], [1, 2, 3]],
                                "D": [[1, 1, 1], [1, 2, 3]], "E": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}))
    code, _, err = run(capsys, "pipeline", str(path), "-o", str(tmp_path / "b"))
    assert code == 3 and "stage 'secure'" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "seclin", "check", EX1, "--json"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["costs"]["delta"] == "11/24"
