import csv
import json
import subprocess
import sys

import pytest

from climbsim.cli import main
from climbsim.traceio import load_trace


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def usage(capsys, *argv):
    with pytest.raises(SystemExit) as info:
        main([str(a) for a in argv])
    capsys.readouterr()
    return info.value.code


@pytest.fixture
def small_trace(tmp_path, capsys):
    path = tmp_path / "t.csv"
    assert run(capsys, "generate", "--zipf-n", 100, "--length", 3000, "--seed", 3, "--out", path)[0] == 0
    return path


class TestGenerate:
    def test_binary_count(self, tmp_path, capsys):
        out = tmp_path / "t.bin"
        code, text, _ = run(capsys, "generate", "--zipf-n", 1000, "--alpha", "1.0", "--length",
                            100_000, "--seed", 7, "--out", out, "--format", "bin")
        assert code == 0 and "100000 records" in text
        assert out.read_bytes()[:4] == b"CCT1"
        assert len(load_trace(out)) == 100_000

    def test_deterministic(self, tmp_path, capsys):
        for name in ("a.bin", "b.bin"):
            run(capsys, "generate", "--zipf-n", 50, "--length", 1000, "--seed", 7,
                "--out", tmp_path / name)
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()

    def test_negative_alpha_is_usage_error(self, tmp_path, capsys):
        assert usage(capsys, "generate", "--alpha", "-1", "--out", tmp_path / "x.bin") == 2

    def test_phases(self, tmp_path, capsys):
        out = tmp_path / "p.csv"
        run(capsys, "generate", "--zipf-n", 20, "--length", 100, "--phases", 2,
            "--disjoint-phases", "--out", out)
        keys = load_trace(out).keys
        assert keys[:100].max() <= 20 < keys[100:].min()

    def test_unknown_extension(self, tmp_path, capsys):
        code, _, err = run(capsys, "generate", "--length", 10, "--out", tmp_path / "x.dat")
        assert code == 2 and "format" in err

    def test_unknown_flag(self, tmp_path, capsys):
        assert usage(capsys, "generate", "--out", tmp_path / "x.bin", "--bogus") == 2


class TestSimulate:
    def test_summary_and_json_report(self, small_trace, tmp_path, capsys):
        rep = tmp_path / "r.json"
        code, out, _ = run(capsys, "simulate", "--policy", "LRU", "--capacity", "10%",
                           "--trace", small_trace, "--report", rep)
        assert code == 0
        assert out.startswith("policy=LRU capacity=") and "requests=3000" in out
        data = json.loads(rep.read_text())
        assert data["config"]["policy"] == "LRU"
        assert data["workload"]["path"] == str(small_trace)
        assert data["trajectory"] == {}

    def test_epsilon_only_for_dynamic(self, capsys):
        code, _, err = run(capsys, "simulate", "--policy", "LRU", "--capacity", 5,
                           "--epsilon", "0.5", "--length", 10)
        assert code == 2 and "--epsilon" in err

    def test_dynamic_resizes(self, tmp_path, capsys):
        from climbsim.traceio import save_trace
        from climbsim.workload import generate_loop_stream
        trace = tmp_path / "loop.bin"
        save_trace(generate_loop_stream(64, 2000), trace)
        rep = tmp_path / "r.json"
        code, _, _ = run(capsys, "simulate", "--policy", "DynamicAdaptiveClimb", "--capacity", 8,
                         "--epsilon", "0.5", "--kmin", 2, "--trace", trace, "--report", rep)
        assert code == 0
        data = json.loads(rep.read_text())
        assert any(e["kind"] == "grow" for e in data["resize_events"])
        assert data["config"]["k_min"] == 2

    def test_synthetic_workload_echoed(self, tmp_path, capsys):
        rep = tmp_path / "r.csv"
        code, _, _ = run(capsys, "simulate", "--policy", "ac", "--capacity", 10, "--zipf-n", 100,
                         "--length", 500, "--seed", 9, "--report", rep)
        assert code == 0
        row = next(csv.DictReader(rep.open()))
        assert row["policy"] == "AdaptiveClimb" and row["requests"] == "500"

    def test_missing_trace_is_runtime_error(self, tmp_path, capsys):
        missing = tmp_path / "nope.bin"
        code, _, err = run(capsys, "simulate", "--policy", "LRU", "--capacity", 5,
                           "--trace", missing)
        assert code == 1 and str(missing) in err

    def test_unknown_policy(self, capsys):
        assert run(capsys, "simulate", "--policy", "ARC", "--capacity", 5)[0] == 2


class TestSweep:
    def test_rows_with_mrr(self, tmp_path, capsys):
        rep = tmp_path / "s.csv"
        code, out, err = run(capsys, "sweep", "--policies", "LRU,CLIMB,LRU", "--capacities", "5,10",
                             "--zipf-n", 100, "--length", 2000, "--report", rep)
        assert code == 0 and "duplicate" in err
        rows = list(csv.DictReader(rep.open()))
        assert [r["policy"] for r in rows] == ["FIFO", "LRU", "CLIMB"] * 2
        assert all(r["mrr_vs_fifo"] for r in rows if r["policy"] != "FIFO")
        assert "policy" in out.splitlines()[0]

    def test_single_point(self, tmp_path, capsys):
        rep = tmp_path / "s.json"
        run(capsys, "sweep", "--policies", "FIFO", "--capacities", "5", "--length", 100,
            "--report", rep)
        assert len(json.loads(rep.read_text())) == 1

    def test_alpha_sweep_needs_capacity(self, capsys):
        assert run(capsys, "sweep", "--policies", "LRU", "--alphas", "0.5,1")[0] == 2

    def test_alpha_sweep(self, capsys):
        code, out, _ = run(capsys, "sweep", "--policies", "LRU", "--alphas", "0.5,1",
                           "--capacity", 5, "--zipf-n", 50, "--length", 500)
        assert code == 0 and "0.500000" in out

    def test_axes_are_exclusive(self, capsys):
        assert usage(capsys, "sweep", "--policies", "LRU", "--alphas", "1", "--capacities", "5") == 2


class TestAnalyze:
    def test_uniform_lru(self, capsys):
        code, out, _ = run(capsys, "analyze", "--model", "lru", "--zipf-n", 3, "--alpha", 0, "--k", 2)
        assert code == 0
        probs = [float(l.split("\t")[1]) for l in out.splitlines()[1:7]]
        assert probs == pytest.approx([1 / 6] * 6)

    def test_climb_with_oracle(self, tmp_path, capsys):
        p = tmp_path / "p.csv"
        p.write_text("0.5\n0.3\n0.2\n")
        code, out, _ = run(capsys, "analyze", "--model", "climb", "--probs", p, "--k", 2, "--oracle")
        assert code == 0
        lines = dict(l.split("\t") for l in out.splitlines())
        assert float(lines["1,2"]) == pytest.approx(0.3409, abs=1e-4)
        assert float(lines["oracle_max_abs_deviation"]) < 1e-9

    def test_hit_ratio_k1(self, tmp_path, capsys):
        p = tmp_path / "p.txt"
        p.write_text("0.7,0.3")
        _, out, _ = run(capsys, "analyze", "--model", "lru", "--probs", p, "--k", 1)
        assert "expected_hit_ratio\t0.580000000000" in out

    def test_oracle_guard(self, capsys):
        code, _, err = run(capsys, "analyze", "--model", "lru", "--zipf-n", 8, "--k", 2, "--oracle")
        assert code == 2 and "N <= 7" in err

    def test_degenerate_vector(self, tmp_path, capsys):
        p = tmp_path / "p.csv"
        p.write_text("1,0,0")
        assert run(capsys, "analyze", "--model", "lru", "--probs", p, "--k", 2)[0] == 2

    def test_bad_sum(self, tmp_path, capsys):
        p = tmp_path / "p.csv"
        p.write_text("0.5,0.4")
        assert run(capsys, "analyze", "--model", "climb", "--probs", p, "--k", 1)[0] == 2


class TestConvert:
    def test_csv_bin_csv(self, small_trace, tmp_path, capsys):
        b, c = tmp_path / "t.bin", tmp_path / "back.csv"
        assert run(capsys, "convert", "--in", small_trace, "--out", b)[0] == 0
        assert run(capsys, "convert", "--in", b, "--out", c)[0] == 0
        assert c.read_bytes() == small_trace.read_bytes()

    def test_corrupt_magic(self, tmp_path, capsys):
        bad = tmp_path / "bad.bin"
        bad.write_bytes(b"XXXX" + bytes(10))
        code, _, err = run(capsys, "convert", "--in", bad, "--out", tmp_path / "o.csv")
        assert code == 1 and "offset 0" in err
        assert not (tmp_path / "o.csv").exists()

    def test_empty_csv(self, tmp_path, capsys):
        src = tmp_path / "e.csv"
        src.write_text("")
        run(capsys, "convert", "--in", src, "--out", tmp_path / "e.bin")
        assert (tmp_path / "e.bin").stat().st_size == 14

    def test_explicit_formats(self, small_trace, tmp_path, capsys):
        out = tmp_path / "t.dat"
        assert run(capsys, "convert", "--in", small_trace, "--out", out, "--to", "bin")[0] == 0
        assert out.read_bytes()[:4] == b"CCT1"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "climbsim", "--version"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
