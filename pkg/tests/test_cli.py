import csv
import json

import pytest

from mixsearch.cli import main
from mixsearch.solvers import RECORD_FIELDS


def write_grid(tmp_path, rows, name="grid.json"):
    path = tmp_path / name
    path.write_text(json.dumps(rows))
    return str(path)


TINY_GRID = [{"name": "rastrigin", "N": 3, "m": 1}, {"name": "ackley", "N": 3, "m": 1}]


# --- solve -------------------------------------------------------------------


def test_solve_reports_run_summary(tmp_path, capsys):
    trace = tmp_path / "trace.jsonl"
    code = main(
        [
            "solve",
            "--problem", "rastrigin",
            "--n", "3",
            "--m", "1",
            "--algo", "dfndfl",
            "--max-evals", "100",
            "--trace", str(trace),
        ]
    )
    out = capsys.readouterr().out
    assert code == 0
    assert "f_star" in out and "stop_reason" in out
    assert trace.exists()
    first = json.loads(trace.read_text().splitlines()[0])
    assert first["k"] == 0


def test_solve_is_deterministic_across_processes(tmp_path, capsys):
    argv = ["solve", "--problem", "ackley", "--n", "4", "--m", "2",
            "--algo", "gdfl+", "--max-evals", "300", "--seed", "7"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    second = capsys.readouterr().out

    def stable(text):
        return [ln for ln in text.splitlines() if not ln.startswith("time")]

    assert stable(first) == stable(second)


def test_solve_unknown_problem_is_a_usage_error(capsys):
    code = main(["solve", "--problem", "nosuch", "--n", "3", "--m", "1"])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_missing_required_flag_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--problem", "rastrigin"])
    assert exc.value.code == 1


def test_unknown_subcommand_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["tune"])
    assert exc.value.code == 1


# --- bench -----------------------------------------------------------------


def test_bench_writes_record_files(tmp_path, capsys):
    grid = write_grid(tmp_path, TINY_GRID)
    out = tmp_path / "bench"
    code = main(
        [
            "bench",
            "--grid", grid,
            "--algos", "dfndfl,dfndfl-c",
            "--seeds", "2",
            "--max-evals", "60",
            "--out", str(out),
        ]
    )
    assert code == 0
    raw = out / "records_raw.csv"
    avg = out / "records_avg.csv"
    assert raw.exists() and avg.exists()
    assert not (out / "failures.csv").exists()
    with open(raw, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == RECORD_FIELDS
    assert len(rows) - 1 == 2 * 2 * 2  # problems x algorithms x seeds
    with open(avg, newline="") as fh:
        avg_rows = list(csv.DictReader(fh))
    assert len(avg_rows) == 4
    assert {r["algorithm"] for r in avg_rows} == {"dfndfl", "dfndfl-c"}


def test_bench_failed_runs_exit_two(tmp_path, capsys):
    grid = write_grid(
        tmp_path, [{"name": "rastrigin", "N": 3, "m": 1}, {"name": "nosuch", "N": 3, "m": 1}]
    )
    out = tmp_path / "bench"
    code = main(
        ["bench", "--grid", grid, "--algos", "dfndfl", "--seeds", "1",
         "--max-evals", "40", "--out", str(out)]
    )
    assert code == 2
    fail_path = out / "failures.csv"
    assert fail_path.exists()
    with open(fail_path, newline="") as fh:
        failures = list(csv.DictReader(fh))
    assert len(failures) == 1
    assert failures[0]["problem"] == "nosuch_N3_m1"
    assert "unknown problem" in failures[0]["error"]
    # the good instance still produced records
    with open(out / "records_raw.csv", newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 1


def test_bench_table_grid_with_filters(tmp_path):
    out = tmp_path / "bench"
    code = main(
        ["bench", "--grid", "table1", "--problems", "rastrigin",
         "--max-total-vars", "100", "--algos", "dfndfl", "--seeds", "1",
         "--max-evals", "40", "--out", str(out)]
    )
    assert code == 0
    with open(out / "records_raw.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    # the table keeps six m values at N = 100
    assert len(rows) == 6
    assert {r["problem"] for r in rows} == {
        f"rastrigin_N100_m{m}" for m in (2, 5, 7, 10, 20, 40)
    }


def test_bench_bad_algorithm_exits_one(tmp_path, capsys):
    grid = write_grid(tmp_path, TINY_GRID)
    code = main(["bench", "--grid", grid, "--algos", "sgd", "--out", str(tmp_path / "b")])
    assert code == 1
    assert "unknown algorithm" in capsys.readouterr().err


def test_bench_empty_filter_exits_one(tmp_path, capsys):
    grid = write_grid(tmp_path, TINY_GRID)
    code = main(
        ["bench", "--grid", grid, "--max-total-vars", "1", "--out", str(tmp_path / "b")]
    )
    assert code == 1
    assert "empty" in capsys.readouterr().err


# --- profile ----------------------------------------------------------------


@pytest.fixture()
def bench_records(tmp_path):
    grid = write_grid(tmp_path, TINY_GRID)
    out = tmp_path / "bench"
    assert main(
        ["bench", "--grid", grid, "--algos", "dfndfl,dfndfl-c", "--seeds", "2",
         "--max-evals", "60", "--out", str(out)]
    ) == 0
    return str(out / "records_raw.csv")


def test_profile_writes_curve_and_figure(tmp_path, bench_records, capsys):
    out = tmp_path / "prof"
    code = main(
        ["profile", "--records", bench_records, "--metric", "Nf",
         "--cap-missing", "--out", str(out)]
    )
    assert code == 0
    csv_path = out / "profile_Nf.csv"
    assert csv_path.exists()
    assert (out / "profile_Nf.png").exists()
    with open(csv_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["tau", "dfndfl", "dfndfl-c"]
    assert float(rows[1][0]) == 1.0
    # every curve ends at a fraction in [0, 1]
    assert all(0.0 <= float(v) <= 1.0 for v in rows[-1][1:])


def test_profile_gap_cdf_for_metric_f(tmp_path, bench_records):
    out = tmp_path / "prof"
    code = main(["profile", "--records", bench_records, "--metric", "f", "--out", str(out)])
    assert code == 0
    assert (out / "gap_cdf_f.csv").exists()
    assert (out / "gap_cdf_f.png").exists()


def test_profile_needs_two_solvers(tmp_path, bench_records, capsys):
    code = main(
        ["profile", "--records", bench_records, "--solvers", "dfndfl",
         "--out", str(tmp_path / "p")]
    )
    assert code == 1
    assert "two solvers" in capsys.readouterr().err


def test_profile_missing_file_exits_one(tmp_path, capsys):
    code = main(
        ["profile", "--records", str(tmp_path / "none.csv"), "--out", str(tmp_path / "p")]
    )
    assert code == 1


# --- cost-ratio -----------------------------------------------------------------


def test_cost_ratio_writes_all_artifacts(tmp_path):
    out = tmp_path / "cost"
    code = main(
        ["cost-ratio", "--problems", "rastrigin,ackley", "--sizes", "4,8",
         "--points", "10", "--out", str(out)]
    )
    assert code == 0
    for name in ("cost_ratio.csv", "cost_ratio_summary.csv", "weights.csv", "cost_ratio.png"):
        assert (out / name).exists(), name
    with open(out / "cost_ratio_summary.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["n"]) for r in rows] == [4, 8]
    with open(out / "weights.csv", newline="") as fh:
        weights = list(csv.DictReader(fh))
    for srow, wrow in zip(rows, weights):
        assert float(wrow["weight"]) == float(srow["max"])


def test_cost_ratio_unknown_problem_exits_one(tmp_path, capsys):
    code = main(
        ["cost-ratio", "--problems", "nosuch", "--sizes", "4", "--points", "5",
         "--out", str(tmp_path / "c")]
    )
    assert code == 1
