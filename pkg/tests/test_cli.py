import json

import pytest

from isct.cli import main
from isct.graph import load_graph

from conftest import FIXTURES, GOLDEN

PLATFORM = ["--platform", str(FIXTURES / "platform.txt")]


def run(capsys, *argv):
    try:
        code = main([str(a) for a in argv])
    except SystemExit as exc:  # argparse rejects the flags before main's handlers run
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


def test_gen_writes_graph(capsys, tmp_path):
    path = tmp_path / "g.txt"
    code, out, _ = run(capsys, "gen", "--tasks", 7, "--seed", 1, "--period", "8ms", "-o", path)
    assert code == 0
    g = load_graph(path.read_text())
    assert g.n == 7 and g.period == pytest.approx(8e-3)
    assert f"total_workload {g.total_workload} cycles" in out


def test_gen_is_repeatable(capsys, tmp_path):
    run(capsys, "gen", "--tasks", 7, "--seed", 1, "-o", tmp_path / "a.txt")
    run(capsys, "gen", "--tasks", 7, "--seed", 1, "-o", tmp_path / "b.txt")
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    assert (tmp_path / "a.txt").read_text() == (FIXTURES / "tgff7.txt").read_text()


def test_gen_bad_flags(capsys):
    code, _, err = run(capsys, "gen", "--tasks", "many")
    assert code == 1 and "error" in err
    assert run(capsys, "gen")[0] == 1


@pytest.mark.parametrize("method", ["exact", "heuristic"])
def test_solve_single_task(capsys, tmp_path, method):
    out_path = tmp_path / "s.txt"
    code, out, _ = run(capsys, "solve", FIXTURES / "single_task.txt", "--method", method, "-K", 1,
                       "-o", out_path, *PLATFORM)
    assert code == 0
    assert "energy 1.674804 mJ" in out
    code, out, _ = run(capsys, "eval", out_path, FIXTURES / "single_task.txt", "--format", "json", *PLATFORM)
    assert code == 0 and json.loads(out)["total_mJ"] == pytest.approx(1.67480, abs=1e-5)


def test_solve_export_lp(capsys, tmp_path):
    path = tmp_path / "m.lp"
    code, _, _ = run(capsys, "solve", FIXTURES / "single_task.txt", "--method", "export-lp", "-K", 1,
                     "--lp", path, *PLATFORM)
    assert code == 0
    assert path.read_text() == (GOLDEN / "single_task_K1.lp").read_text()
    code, out, _ = run(capsys, "solve", FIXTURES / "two_independent.txt", "--method", "export-lp", "-K", 2,
                       "--objective", "isc-plus-t", *PLATFORM)
    assert out == (GOLDEN / "two_independent_K2_baseline.lp").read_text()


def test_solve_baseline_objective(capsys, tmp_path):
    path = tmp_path / "b.txt"
    code, _, _ = run(capsys, "solve", FIXTURES / "single_task.txt", "--objective", "isc-plus-t", "-K", 1,
                     "-o", path, *PLATFORM)
    assert code == 0
    assert "switch 1 0 1" in path.read_text()


def test_solve_infeasible(capsys):
    code, _, err = run(capsys, "solve", FIXTURES / "infeasible.txt", "-K", 2, *PLATFORM)
    assert code == 2 and "infeasible" in err
    assert run(capsys, "solve", FIXTURES / "infeasible.txt", "--method", "heuristic", "-K", 2, *PLATFORM)[0] == 2


def test_solve_caps(capsys, tmp_path):
    path = tmp_path / "big.txt"
    run(capsys, "gen", "--tasks", 12, "--seed", 3, "--period", "40ms", "-o", path)
    code, _, err = run(capsys, "solve", path, "-K", 2, *PLATFORM)
    assert code == 1 and "caps" in err


def test_solve_budget(capsys, tmp_path):
    code, _, err = run(capsys, "solve", FIXTURES / "tgff7.txt", "-K", 3, "--node-budget", 2,
                       "-o", tmp_path / "x.txt", *PLATFORM)
    assert code == 3 and "budget" in err


def test_eval_golden_schedule_and_gantt(capsys, tmp_path):
    svg = tmp_path / "g.svg"
    code, out, _ = run(capsys, "eval", GOLDEN / "two_independent_K2.schedule.txt", FIXTURES / "two_independent.txt",
                       "--gantt", svg, *PLATFORM)
    assert code == 0
    assert "total 2.964608 mJ" in out
    assert "used processors 1 of 2" in out
    assert svg.read_text().startswith("<svg")


def test_eval_corrupted_start(capsys, tmp_path):
    text = (GOLDEN / "two_independent_K2.schedule.txt").read_text().splitlines()
    bad = [line.split(" start ")[0] + " start 0.0079" if line.startswith("task 2") else line for line in text]
    path = tmp_path / "bad.txt"
    path.write_text("\n".join(bad) + "\n")
    code, _, err = run(capsys, "eval", path, FIXTURES / "two_independent.txt", *PLATFORM)
    assert code == 2 and "violation" in err


def test_compare_manifest(capsys):
    code, out, _ = run(capsys, "compare", FIXTURES / "manifest.txt", "--format", "jsonl", *PLATFORM)
    assert code == 0
    records = [json.loads(line) for line in out.splitlines()]
    rows, avg = records[:-1], records[-1]["average"]
    assert [r["name"] for r in rows] == ["single", "pair", "tgff7"]
    assert avg["saving_mean"] == pytest.approx(sum(r["saving"] for r in rows) / 3)
    assert all(r["isct_energy"] <= r["baseline_energy"] * (1 + 1e-9) for r in rows)


def test_compare_text_table(capsys):
    code, out, _ = run(capsys, "compare", FIXTURES / "manifest.txt", "--isct-method", "heuristic", *PLATFORM)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("graph") and lines[-1].startswith("average saving")
    assert len(lines) == 5


def test_compare_empty_manifest(capsys, tmp_path):
    path = tmp_path / "empty.txt"
    path.write_text("manifest v1\n")
    code, out, _ = run(capsys, "compare", path, *PLATFORM)
    assert code == 0 and out.splitlines()[0].startswith("graph") and len(out.splitlines()) == 1


def test_compare_bad_manifest(capsys, tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("instances!\n")
    assert run(capsys, "compare", path, *PLATFORM)[0] == 1


def test_missing_file(capsys):
    assert run(capsys, "solve", "/nonexistent/graph.txt")[0] == 1


def test_platform_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("ISCT_PLATFORM", str(FIXTURES / "platform.txt"))
    code, _, err = run(capsys, "solve", FIXTURES / "single_task.txt", "-K", 1)
    assert code == 0 and "1.674804" in err


def test_suite_small(capsys, tmp_path):
    code, out, _ = run(capsys, "suite", "--count", 2, "--out", tmp_path, "--no-svg", *PLATFORM)
    assert code == 0
    assert (tmp_path / "report.txt").read_text() == out
    assert (tmp_path / "s01.exact.schedule.txt").exists()
    assert not list(tmp_path.glob("*.svg"))
