import json
import subprocess
import sys

from corrwalk.cli import run


def test_decompose_worked_example_csv(capsysbinary):
    assert run(["decompose", "--from-table1"]) == 0
    out = capsysbinary.readouterr().out.decode().splitlines()
    assert out[0] == "n,B,W,T,S,alpha,beta,X,Y"
    assert out[1] == "1,1,-1,0,1,4,1,-1,1"
    assert out[10] == "10,2,0,3,7,,,,"


def test_decompose_json(capsysbinary):
    assert run(["decompose", "--from-table1", "--format", "json"]) == 0
    doc = json.loads(capsysbinary.readouterr().out)
    assert doc["X"] == [-1, 0, 1] and doc["alpha"][3] is None


def test_decompose_input_file(tmp_path, capsysbinary):
    f = tmp_path / "p.csv"
    f.write_text("xi,eta\n1,-1\n1,1\n")
    assert run(["decompose", "--input", str(f), "--format", "json"]) == 0
    doc = json.loads(capsysbinary.readouterr().out)
    assert doc["Y"] == [1] and doc["X"] == [1]


def test_simulate_requires_seed(capsys):
    try:
        run(["simulate", "--model", "constant:1/4", "--N", "5"])
    except SystemExit as exc:
        assert exc.code == 2
    else:
        raise AssertionError("missing --seed accepted")


def test_simulate_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out, threads in ((a, "1"), (b, "4")):
        assert run(["simulate", "--model", "adversarial", "--N", "20", "--reps", "50", "--seed", "7",
                    "--threads", threads, "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_invalid_model_exit_2(capsys):
    assert run(["simulate", "--model", "constant:0.6", "--N", "5", "--seed", "1"]) == 2
    assert "outside" in capsys.readouterr().err


def test_oracle_check_negative_control_is_ok(capsysbinary):
    assert run(["oracle-check", "--model", "adversarial", "--N", "4", "--check", "c1"]) == 0
    doc = json.loads(capsysbinary.readouterr().out)
    assert any(not r["pass"] and r["ok"] for r in doc["exact"])


def test_oracle_check_cap(capsys):
    assert run(["oracle-check", "--model", "constant:1/4", "--N", "12"]) == 2
    assert "cap" in capsys.readouterr().err


def test_oracle_check_rejects_float_model(capsys):
    assert run(["oracle-check", "--model", "gaussian:0.5", "--N", "3"]) == 2


def test_mc_delta_t(capsysbinary):
    assert run(["mc-test", "delta-t", "--rho", "0.5", "--reps", "100000", "--seed", "1"]) == 0
    doc = json.loads(capsysbinary.readouterr().out)
    assert abs(doc["tests"][0]["target"] - 2 / 3) < 1e-15


def test_mc_block_pmf_undersampled_exit_2(capsys):
    assert run(["mc-test", "block-pmf", "--model", "constant:1/4", "--reps", "100", "--seed", "1"]) == 2
    assert "< 5" in capsys.readouterr().err


def test_mc_block_pmf_plotdata(tmp_path):
    out = tmp_path / "plot.csv"
    assert run(["mc-test", "block-pmf", "--model", "constant:1/4", "--k", "1", "--l", "1", "--N", "16",
                "--reps", "20000", "--seed", "2", "--emit", "plotdata", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 5


def test_analyze(tmp_path, capsysbinary):
    f = tmp_path / "prices.csv"
    f.write_text("timestamp,A,B\n1,10,20\n2,11,21\n3,10,22\n4,11,21\n")
    assert run(["analyze", "--csv", str(f), "--format", "json"]) == 0
    doc = json.loads(capsysbinary.readouterr().out)
    full = doc["trends"][0]["full"]
    assert (full["T"], full["S"]) == (1, 2)


def test_analyze_bad_input_exit_2(tmp_path, capsys):
    f = tmp_path / "prices.csv"
    f.write_text("timestamp,A,B\n2,10,20\n1,11,21\n")
    assert run(["analyze", "--csv", str(f)]) == 2
    assert "row 3" in capsys.readouterr().err


def test_config_env_defaults(tmp_path, monkeypatch, capsysbinary):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"format": "table"}))
    monkeypatch.setenv("CORRWALK_CONFIG", str(cfg))
    assert run(["oracle-check", "--model", "constant:1/4", "--N", "2", "--check", "symmetry"]) == 0
    assert capsysbinary.readouterr().out.decode().startswith("type")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "corrwalk", "decompose", "--from-table1", "--format", "table"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("n\tB\tW")
