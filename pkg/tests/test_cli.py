import json
import subprocess
import sys

import pytest

from regevkit.cli import _int, main


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_int_parser():
    assert _int("10**4") == 10_000
    assert _int("1e4") == 10_000
    assert _int(" 42 ") == 42


def test_factor_command(capsys, tmp_path):
    code, out, _ = _run(capsys, "factor", "--modulus", "105", "--seed", "7", "--output-dir", str(tmp_path))
    assert code == 0
    summary = json.loads(out)
    assert summary["status"] == "success" and 105 % summary["witness"] == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["config"]["seed"] == 7
    assert (tmp_path / "trials.csv").exists()


def test_factor_rejects_prime_power(capsys):
    code, out, _ = _run(capsys, "factor", "--modulus", "9", "--seed", "1")
    assert code == 2
    assert json.loads(out)["status"] == "invalid-input"


def test_dlog_command(capsys):
    code, out, _ = _run(capsys, "dlog", "--modulus", "7", "--base", "3", "--target", "6", "--seed", "1")
    assert code == 0 and json.loads(out)["witness"] == 3
    code, _, _ = _run(capsys, "dlog", "--modulus", "15", "--base", "2", "--target", "7", "--seed", "1")
    assert code == 2


def test_order_command(capsys):
    code, out, _ = _run(capsys, "order", "--modulus", "15", "--element", "2", "--seed", "3")
    assert code == 0 and json.loads(out)["witness"] == 4


def test_retry_exhaustion_exit_code(capsys):
    code, out, _ = _run(capsys, "order", "--modulus", "30", "--element", "7", "--X", "5", "--retries", "2", "--seed", "0")
    assert code == 3
    assert json.loads(out)["status"] == "retryable-failure"


def test_resource_exit_code(capsys):
    code, _, err = _run(capsys, "factor", "--modulus", str(10**13 + 1), "--seed", "1", "--factor-budget", "1000")
    assert code == 4 and "budget" in err


def test_missing_seed_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["factor", "--modulus", "15"])
    assert exc.value.code == 2


def test_toy_rsa_rejects_unsafe_modulus(capsys):
    code, _, err = _run(capsys, "toy-rsa", "--modulus", "15", "--seed", "1", "--trials", "1")
    assert code == 2 and "safe" in err


def test_small_experiments_via_cli(capsys, tmp_path):
    code, out, _ = _run(capsys, "cube-lemma", "--seed", "1", "--normals", "100", "--dims", "2,3", "--sides", "1,2")
    assert code == 0 and json.loads(out)["total_violations"] == 0
    code, out, _ = _run(
        capsys, "bench-mulexp", "--seed", "1", "--instances", "20", "--ds", "16,32", "--ms", "64",
        "--format", "jsonl", "--output-dir", str(tmp_path),
    )
    assert code == 0 and json.loads(out)["mismatches"] == 0
    assert (tmp_path / "trials.jsonl").exists()
    code, out, _ = _run(capsys, "verify-identities", "--seed", "2", "--max-modulus", "15")
    assert code == 0 and json.loads(out)["total_violations"] == 0
    code, out, _ = _run(capsys, "toy-rsa", "--seed", "1", "--trials", "5", "--workers", "1")
    assert code == 0
    code, out, _ = _run(capsys, "char-diagnostics", "--modulus", "35", "--X", "500", "--seed", "1", "--trials", "10")
    assert code == 0 and json.loads(out)["principal_average_exact"] == "1"
    code, out, _ = _run(
        capsys, "short-basis", "--seed", "1", "--trials", "2", "--X", "10**5", "--workers", "1", "--enum-budget", "20000"
    )
    assert code == 0 and json.loads(out)["invariant_violations"] == 0


def test_output_dir_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("REGEVKIT_OUTPUT_DIR", str(tmp_path))
    code, _, _ = _run(capsys, "order", "--modulus", "7", "--element", "3", "--seed", "1")
    assert code == 0
    assert (tmp_path / "report.json").exists()


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "regevkit", "order", "--modulus", "15", "--element", "2", "--seed", "1"],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["witness"] == 4
