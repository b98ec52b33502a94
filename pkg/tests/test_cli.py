import json
import math
import subprocess
import sys

import pytest

from bargmann_circuits import cli
from bargmann_circuits.teleport import xi


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def pair(strength, **extra):
    doc = {
        "modes": [{"name": "a", "pol": "none"}, {"name": "b", "pol": "none"}],
        "components": [
            {"kind": "down_converter", "modes": ["a", "b"], "params": {"strength": {"re": strength, "im": 0.0}}}
        ],
    }
    doc.update(extra)
    return doc


# --- exit codes --------------------------------------------------------------


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["simulate"])
    assert info.value.code == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        cli.main(["example", "teleport", "--tau", "a,b,c"])
    assert info.value.code == cli.EXIT_USAGE
    code, _, err = run(capsys, "simulate", "/nonexistent/file.circ.json")
    assert code == cli.EXIT_USAGE and "error" in err


def test_invalid_circuit_exits_two(capsys, tmp_path):
    bad = pair(0.2)
    bad["components"].append({"kind": "beam_splitter", "modes": ["a", "e_x"], "params": {}})
    code, out, err = run(capsys, "simulate", write(tmp_path, "bad.json", bad))
    assert code == cli.EXIT_INVALID and out == ""
    assert "e_x" in err
    path = tmp_path / "broken.json"
    path.write_text("{ not json")
    assert run(capsys, "simulate", str(path))[0] == cli.EXIT_INVALID


def test_non_symmetric_matrix_exits_two(capsys, tmp_path):
    path = write(tmp_path, "m.json", {"matrix": [[1, 0.2], [0.3, 1]]})
    assert run(capsys, "mdhp", "--matrix", path, "--order", "1,1")[0] == cli.EXIT_INVALID


def test_precision_loss_exits_three(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", write(tmp_path, "big.json", pair(25.0)))
    assert code == cli.EXIT_NUMERIC and "numerical failure" in err


def test_failed_oracle_check_exits_three(capsys, tmp_path):
    # strong squeezing leaves most of the norm above the cutoff
    code, out, _ = run(capsys, "simulate", "--verify", write(tmp_path, "mid.json", pair(3.0)))
    assert code == cli.EXIT_NUMERIC and "[FAIL]" in out


# --- simulate ----------------------------------------------------------------


def test_empty_circuit_is_vacuum(capsys, tmp_path):
    path = write(tmp_path, "empty.json", {"modes": [{"name": "a", "pol": "none"}]})
    code, out, _ = run(capsys, "simulate", path, "--emit", "json")
    assert code == 0
    d = json.loads(out)
    assert d["modes"] == ["a"]
    assert d["exponent"] == [[{"re": 0.0, "im": 0.0}]]
    assert d["norm_squared"] == 1.0 and d["branches"] == []


def test_json_is_deterministic(capsys):
    first = run(capsys, "simulate", "heralded_photon", "--emit", "json")[1]
    second = run(capsys, "simulate", "heralded_photon", "--emit", "json")[1]
    assert first == second
    json.loads(first)


def test_heralded_photon_branches(capsys):
    code, out, _ = run(capsys, "simulate", "heralded_photon", "--verify", "--emit", "json")
    assert code == 0
    d = json.loads(out)
    weights = [b["weight"] for b in d["branches"]]
    assert weights[0] > 0.98
    assert sum(weights) == pytest.approx(1.0, abs=1e-9)
    assert d["branches"][0]["prefactor"].endswith("*b")
    assert all(c["passed"] for c in d["checks"])


def test_text_output_sections(capsys):
    code, out, _ = run(capsys, "simulate", "two_mode_squeezer", "--verify")
    assert code == 0
    assert out.startswith("modes: a b\n")
    assert "takagi values: " in out and "[ok] lowered state vs direct evolution" in out


def test_confusion_from_file(capsys, tmp_path):
    doc = pair(0.2, detect={"signature": {"a": 1}, "detectors": {"confusion": {"a": {"1": 0.7, "2": 0.3}}}})
    code, out, _ = run(capsys, "simulate", write(tmp_path, "c.json", doc), "--verify", "--emit", "json")
    assert code == 0
    d = json.loads(out)
    # the row gives the weights of the true counts behind the indicated one
    assert [b["weight"] for b in d["branches"]] == [0.7, 0.3]
    assert [b["event"] for b in d["branches"]] == ["a=1", "a=2"]
    lam = math.tanh(0.2)
    assert d["branches"][1]["probability"] / d["branches"][0]["probability"] == pytest.approx(lam**2, rel=1e-9)
    assert all(c["passed"] for c in d["checks"])


# --- verify, mdhp, example -----------------------------------------------------


@pytest.mark.parametrize("name", ["two_mode_squeezer", "heralded_photon", "teleport"])
def test_verify_bundled(capsys, name):
    code, out, _ = run(capsys, "verify", name, "--cutoff", "6")
    assert code == 0
    assert "[ok] Fock amplitudes vs Hermite values at zero" in out


def test_mdhp_check(capsys, tmp_path):
    path = write(tmp_path, "m.json", {"matrix": [[1, 0.2], [0.2, 0.5]]})
    code, out, _ = run(capsys, "mdhp", "--matrix", path, "--order", "2,1", "--check")
    assert code == 0
    assert out.startswith("H_[2, 1] = (0.2+0i)*x0^3 + (0.58+0i)*x0^2*x1")
    assert out.count("[ok]") == 4


def test_mdhp_bare_list_and_partial_order(capsys, tmp_path):
    path = write(tmp_path, "m.json", [[0.5, 0.1, 0], [0.1, 0.5, 0.2], [0, 0.2, 0.5]])
    code, out, _ = run(capsys, "mdhp", "--matrix", path, "--order", "1", "--method", "genfunc")
    assert code == 0 and out == "H_[1] = (0.5+0i)*x0 + (0.1+0i)*x1\n"


@pytest.mark.parametrize("theta, live", [(0.0, "d_y"), (math.pi / 2, "d_x")])
def test_example_teleport_axes(capsys, theta, live):
    code, out, _ = run(capsys, "example", "teleport", "--theta", repr(theta), "--emit", "json")
    assert code == 0
    branch = json.loads(out)["branches"][0]
    assert branch["modes"] == ["d_x", "d_y"]
    assert branch["prefactor"].endswith(f"*{live}") and branch["prefactor"].count("*") == 1
    coeff = complex(branch["prefactor"].split(")*")[0].strip("(").replace("i", "j"))
    assert coeff == pytest.approx(-xi(0.1) ** 2, rel=1e-10)


def test_example_teleport_complex_tau(capsys):
    code, out, _ = run(capsys, "example", "teleport", "--tau", "0.1,0.05")
    assert code == 0 and "[FAIL]" not in out


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "bargmann_circuits.cli", "example", "teleport", "--emit", "json"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["ok"] is True
