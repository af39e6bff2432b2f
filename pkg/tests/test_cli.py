"""End-to-end command-line interface tests."""

import json
import subprocess
import sys

import pytest

CLI = [sys.executable, "-m", "faultbp.cli"]


def run_cli(*args):
    return subprocess.run(CLI + list(args), capture_output=True, text=True)


@pytest.fixture(scope="module")
def instance_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "instance.json"
    proc = run_cli("gen", "--m", "8", "--n", "12", "--p", "0.12", "--q", "0.4",
                   "--sigma", "1.0", "--seed", "5", "--out", str(path))
    assert proc.returncode == 0, proc.stderr
    return path


class TestSolve:
    def test_nbp_solve_outputs_json(self, instance_file, tmp_path):
        trace = tmp_path / "trace.jsonl"
        proc = run_cli("solve", "--instance", str(instance_file), "--algo", "nbp",
                       "--pipeline", "round+local", "--bins", "512",
                       "--trace", str(trace))
        assert proc.returncode == 0, proc.stderr
        out = json.loads(proc.stdout)
        assert out["algorithm"] == "nbp"
        assert len(out["pattern"]) == 12
        assert set(out["pattern"]) <= {0, 1}
        assert "exact_match" in out  # instance carries its truth
        lines = [json.loads(l) for l in trace.read_text().splitlines()]
        assert lines and lines[0]["iteration"] == 1

    @pytest.mark.parametrize("algo", ["maxprod", "sumprod", "oracle"])
    def test_other_algorithms(self, instance_file, algo):
        proc = run_cli("solve", "--instance", str(instance_file), "--algo", algo,
                       "--pipeline", "round")
        assert proc.returncode == 0, proc.stderr
        out = json.loads(proc.stdout)
        assert len(out["soft"]) == 12

    def test_oracle_beats_or_ties_everyone(self, instance_file):
        losses = {}
        for algo in ("nbp", "maxprod", "oracle"):
            proc = run_cli("solve", "--instance", str(instance_file), "--algo", algo,
                           "--pipeline", "none")
            losses[algo] = json.loads(proc.stdout)["loss"]
        assert losses["oracle"] <= losses["nbp"] + 1e-9
        assert losses["oracle"] <= losses["maxprod"] + 1e-9

    def test_missing_file_gives_machine_readable_error(self):
        proc = run_cli("solve", "--instance", "/nonexistent.json")
        assert proc.returncode == 1
        err = json.loads(proc.stderr.strip().splitlines()[-1])
        assert "error" in err and "message" in err

    def test_bad_nu_rejected(self, instance_file):
        proc = run_cli("solve", "--instance", str(instance_file), "--nu", "-3")
        assert proc.returncode == 2  # argparse usage error


class TestSweep:
    def test_byte_identical_reruns(self, tmp_path):
        args = ["sweep", "--param", "p", "--values", "0.08,0.2", "--m", "8", "--n", "10",
                "--q", "0.4", "--trials", "3", "--seed", "11", "--bins", "256",
                "--algos", "nbp,maxprod", "--no-timing"]
        out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
        assert run_cli(*args, "--out", str(out1)).returncode == 0
        assert run_cli(*args, "--out", str(out2)).returncode == 0
        assert out1.read_bytes() == out2.read_bytes()
        header = out1.read_text().splitlines()[0]
        assert header == ("param_name,param_value,algorithm,pipeline,trials,wer,"
                          "wer_ci,precision,recall,mean_runtime_s,mean_iters")

    def test_timing_column_populated_by_default(self, tmp_path):
        out = tmp_path / "timed.csv"
        proc = run_cli("sweep", "--param", "sigma", "--values", "0.5", "--m", "6",
                       "--n", "8", "--trials", "2", "--seed", "1", "--bins", "256",
                       "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        rows = out.read_text().splitlines()
        assert len(rows) == 1 + 3  # header + one point x three pipelines
        assert rows[1].split(",")[9] != ""

    def test_invalid_param_rejected(self, tmp_path):
        proc = run_cli("sweep", "--param", "frobnitz", "--values", "1",
                       "--out", str(tmp_path / "x.csv"))
        assert proc.returncode == 2


class TestTheory:
    def test_curve_csv(self, tmp_path):
        out = tmp_path / "theory.csv"
        proc = run_cli("theory", "--p", "0.12", "--delta", "0.5",
                       "--gamma-grid", "0.1,1,10", "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        lines = out.read_text().splitlines()
        assert lines[0] == "gamma,eta,multiple_fixed_points,distortion_square,distortion_hamming"
        assert len(lines) == 4
        etas = [float(l.split(",")[1]) for l in lines[1:]]
        assert all(0 < e <= 1 for e in etas)


class TestGen:
    def test_seed_reproducibility(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            proc = run_cli("gen", "--m", "5", "--n", "7", "--seed", "9",
                           "--out", str(path))
            assert proc.returncode == 0
        assert a.read_bytes() == b.read_bytes()

    def test_invalid_probability_fails_cleanly(self, tmp_path):
        proc = run_cli("gen", "--m", "5", "--n", "7", "--p", "1.5", "--seed", "1",
                       "--out", str(tmp_path / "x.json"))
        assert proc.returncode == 1
        err = json.loads(proc.stderr.strip().splitlines()[-1])
        assert err["error"] == "ValueError"
