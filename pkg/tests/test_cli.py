import json
import subprocess
import sys

import pytest
from conftest import GOLDEN

from cmchierarchy.cli import main


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_compute_order0_seeds_only(capsys):
    code, out, _ = run(["compute", "--order", "0"], capsys)
    data = json.loads(out)
    assert code == 0
    assert len(data["a"]) == 1 and len(data["b"]) == 1
    assert data["gamma"] == "symbolic"


def test_compute_order1_has_z3(capsys):
    code, out, _ = run(["compute", "--order", "1"], capsys)
    data = json.loads(out)
    assert code == 0 and len(data["a"]) == 2
    assert data["spectral_weights"][:2] == [None, 1]


def test_compute_rational_gamma(capsys):
    code, out, _ = run(["compute", "-N", "1", "--gamma", "3/2"], capsys)
    assert code == 0 and json.loads(out)["gamma"] == "3/2"


@pytest.mark.parametrize("argv", [
    ["compute", "--order", "-1"],
    ["compute", "--gamma", "-2"],
    ["flow", "--degree", "4", "--m", "2"],
    ["flow", "--dt", "0"],
    ["pde", "--gamma", "0", "--vacuum"],
    ["verify", "--suite", "nope"],
    ["frobnicate"],
])
def test_invalid_input_exit_2(argv, capsys):
    code, _, _ = run(argv, capsys)
    assert code == 2


def test_compute_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["compute", "-N", "3", "--out", a], capsys)[0] == 0
    assert run(["compute", "-N", "3", "--out", b], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("suite", ["killing", "tangency", "series", "b0"])
def test_verify_suites(suite, capsys):
    code, out, _ = run(["verify", "--suite", suite, "--order", "3"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["ok"] and rep["n_failed"] == 0 and rep["n_checks"] > 0


def test_verify_golden_input(capsys):
    code, out, _ = run(["verify", "--suite", "killing", "--input", GOLDEN / "tower_order3.json"], capsys)
    assert code == 0 and json.loads(out)["order"] == 3


def test_verify_corrupted_golden_exit_1(capsys, tmp_path):
    data = json.loads((GOLDEN / "tower_order3.json").read_text())
    bad = json.loads((GOLDEN / "tower_order2.json").read_text())
    # swap in a term from another entry so the file stays well formed
    data["c"][1] = bad["b"][1]
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(data))
    code, out, _ = run(["verify", "--suite", "killing", "--input", p], capsys)
    rep = json.loads(out)
    assert code == 1 and not rep["ok"] and rep["n_failed"] > 0


def test_verify_unreadable_input_exit_2(capsys, tmp_path):
    p = tmp_path / "junk.json"
    p.write_text("{not json")
    assert run(["verify", "--input", p], capsys)[0] == 2


def test_verify_text_format(capsys):
    code, out, _ = run(["verify", "--suite", "conservation", "-N", "2", "--format", "text"], capsys)
    assert code == 0 and out.strip().endswith("3/3 checks passed")


def test_flow_summary(capsys):
    code, out, _ = run(["flow", "-D", "6", "--m", "1", "--steps", "20", "--seed", "3"], capsys)
    s = json.loads(out)
    assert code == 0 and s["ok"] and s["params"]["seed"] == 3


def test_flow_csv_and_tower_init(capsys):
    code, out, _ = run(["flow", "-D", "5", "--steps", "4", "--init", "tower", "--format", "csv"], capsys)
    assert code == 0 and "# init=tower" in out


def test_flow_tolerance_failure_exit_1(capsys):
    code, _, _ = run(["flow", "-D", "6", "--steps", "10", "--dt", "0.3", "--tolerance", "1e-300"], capsys)
    assert code == 1


def test_pde(capsys):
    code, out, _ = run(["pde", "--gamma", "1", "--vacuum"], capsys)
    assert code == 0 and json.loads(out)["max_residual"] == 0.0
    code, out, _ = run(["pde", "--gamma", "2", "--T", "1", "--dt", "1e-2"], capsys)
    assert code == 0 and json.loads(out)["mode"] == "ode"


def test_export_variants(capsys, tmp_path):
    for what in ("tower", "Y", "X", "mc"):
        code, out, _ = run(["export", "--what", what, "-N", "2"], capsys)
        assert code == 0 and json.loads(out)
    assert run(["export", "--what", "golden"], capsys)[0] == 2
    assert run(["export", "--what", "golden", "-N", "1", "--out", tmp_path], capsys)[0] == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["tower_order0.json", "tower_order1.json"]


def test_export_golden_matches_frozen(capsys, tmp_path):
    run(["export", "--what", "golden", "-N", "3", "--out", tmp_path], capsys)
    for n in range(4):
        name = f"tower_order{n}.json"
        assert (tmp_path / name).read_bytes() == (GOLDEN / name).read_bytes()


def test_manifest(capsys, tmp_path):
    m = tmp_path / "run.manifest"
    m.write_text("command = flow\n# comment\ndegree = 6\nsteps = 10\nseed = 9\n")
    code, out, _ = run(["flow", "--manifest", m], capsys)
    s = json.loads(out)
    assert code == 0 and s["params"]["D"] == 6 and s["params"]["seed"] == 9
    # explicit flags win
    code, out, _ = run(["flow", "--manifest", m, "--steps", "5"], capsys)
    assert json.loads(out)["params"]["steps"] == 5


@pytest.mark.parametrize("text", [
    "degree = 6\nbogus = 1\n",
    "command = pde\n",
    "degree = six\n",
    "init = sideways\n",
    "just words\n",
])
def test_manifest_rejects_bad_entries(text, capsys, tmp_path):
    m = tmp_path / "bad.manifest"
    m.write_text(text)
    assert run(["flow", "--manifest", m], capsys)[0] == 2


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "cmchierarchy.cli", "compute", "-N", "0"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["gamma"] == "symbolic"
