"""Command-line interface.

Subcommands: ``solve`` (one run), ``bench`` (run matrix to record files),
``profile`` (performance profiles / gap CDFs from record files, as CSV plus
rendered figures), ``cost-ratio`` (regenerate the gradient weight table).

Exit codes: 0 on success, 1 on usage errors, 2 when a benchmark matrix
contains failed runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .bench import (
    WeightTable,
    average_records,
    build_cost_matrix,
    cost_ratio_study,
    load_records,
    performance_profile,
    relative_gap_cdf,
    run_matrix,
    save_average_rows,
    save_records,
)
from .core import SolverConfig
from .problems import ProblemSpec, available_problems, config_grid, make_problem
from .solvers import ALGORITHMS, run

PROFILE_METRICS = ("T", "Tbest", "Nf", "Nfbest", "Nit", "Nitbest", "f")


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="mixsearch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one solver on one instance")
    p_solve.add_argument("--problem", required=True, help="registered problem name")
    p_solve.add_argument("--n", type=int, required=True, help="total number of variables N")
    p_solve.add_argument("--m", type=int, required=True, help="number of trailing integer variables")
    p_solve.add_argument("--algo", default="gdfl+", choices=ALGORITHMS)
    p_solve.add_argument("--engine", default="lbfgsb", choices=("lbfgsb", "pg", "fw"))
    p_solve.add_argument("--seed", type=int, default=0)
    p_solve.add_argument("--budget-seconds", type=float, default=None)
    p_solve.add_argument("--max-evals", type=float, default=None, help="weighted evaluation budget")
    p_solve.add_argument("--max-dirs", type=int, default=300)
    p_solve.add_argument("--xi0", type=float, default=1.0)
    p_solve.add_argument("--eta", type=float, default=0.5)
    p_solve.add_argument("--gamma", type=float, default=1e-4)
    p_solve.add_argument("--delta", type=float, default=0.5)
    p_solve.add_argument("--eps-stat", type=float, default=1e-7)
    p_solve.add_argument("--trace", default=None, help="write per-iteration JSON lines here")

    p_bench = sub.add_parser("bench", help="run a benchmark matrix to record files")
    p_bench.add_argument("--grid", default="table1",
                         help="'table1' or a JSON file with [{name, N, m}, ...]")
    p_bench.add_argument("--algos", default="gdfl+,dfndfl",
                         help="comma-separated algorithm list")
    p_bench.add_argument("--seeds", type=int, default=5)
    p_bench.add_argument("--workers", type=int, default=1)
    p_bench.add_argument("--budget-seconds", type=float, default=10.0)
    p_bench.add_argument("--max-evals", type=float, default=None)
    p_bench.add_argument("--engine", default="lbfgsb", choices=("lbfgsb", "pg", "fw"))
    p_bench.add_argument("--problems", default=None,
                         help="comma-separated filter on problem names")
    p_bench.add_argument("--max-total-vars", type=int, default=None,
                         help="drop grid instances with N above this")
    p_bench.add_argument("--out", default="bench_out")

    p_prof = sub.add_parser("profile", help="profiles / gap CDFs from record files")
    p_prof.add_argument("--records", nargs="+", required=True, help="record CSV file(s)")
    p_prof.add_argument("--metric", default="Nf", choices=PROFILE_METRICS)
    p_prof.add_argument("--solvers", default=None,
                        help="comma-separated algorithm subset (default: all found)")
    p_prof.add_argument("--cap-missing", action="store_true",
                        help="keep problems where a solver missed the best value, "
                             "charging it infinite cost (default: drop them)")
    p_prof.add_argument("--out", default="profile_out")

    p_cost = sub.add_parser("cost-ratio", help="time gradients against objectives")
    p_cost.add_argument("--problems", default=None,
                        help="comma-separated problem names (default: all registered)")
    p_cost.add_argument("--sizes", default="100,200,500",
                        help="comma-separated continuous dimensions n")
    p_cost.add_argument("--points", type=int, default=500)
    p_cost.add_argument("--seed", type=int, default=0)
    p_cost.add_argument("--out", default="cost_ratio_out")
    return parser


def _cmd_solve(args: argparse.Namespace) -> int:
    cfg = SolverConfig(
        gamma=args.gamma,
        delta=args.delta,
        eta=args.eta,
        xi0=args.xi0,
        eps_stat=args.eps_stat,
        max_discrete_dirs=args.max_dirs,
        budget_seconds=args.budget_seconds,
        max_weighted_evals=args.max_evals,
        engine=args.engine,
    )
    prob = make_problem(ProblemSpec(args.problem, args.n, args.m))
    rec = run(prob, cfg, args.algo, seed=args.seed, trace_path=args.trace)
    print(f"problem      {rec.problem}")
    print(f"algorithm    {rec.algorithm} (engine={args.engine}, seed={rec.seed})")
    print(f"f_star       {rec.f_star:.12g}")
    print(f"stop_reason  {rec.stop_reason}")
    print(f"iterations   {rec.N_it}")
    print(f"evals        n_f={rec.n_f} n_g={rec.n_g}")
    print(f"time         T={rec.T:.3f}s T_best={rec.T_best:.3f}s")
    if args.trace:
        print(f"trace        {args.trace}")
    return 0


def _load_grid(args: argparse.Namespace) -> list[ProblemSpec]:
    if args.grid == "table1":
        specs = config_grid()
    else:
        with open(args.grid, encoding="utf-8") as fh:
            raw = json.load(fh)
        specs = [ProblemSpec(r["name"], int(r["N"]), int(r["m"])) for r in raw]
    if args.problems:
        keep = {p.strip() for p in args.problems.split(",")}
        unknown = keep - set(available_problems())
        if unknown:
            raise ValueError(f"unknown problem(s): {', '.join(sorted(unknown))}")
        specs = [s for s in specs if s.name in keep]
    if args.max_total_vars is not None:
        specs = [s for s in specs if s.N <= args.max_total_vars]
    if not specs:
        raise ValueError("the grid is empty after filtering")
    return specs


def _cmd_bench(args: argparse.Namespace) -> int:
    algorithms = [a.strip() for a in args.algos.split(",") if a.strip()]
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}; choices: {', '.join(ALGORITHMS)}")
    specs = _load_grid(args)
    cfg = SolverConfig(
        budget_seconds=args.budget_seconds,
        max_weighted_evals=args.max_evals,
        engine=args.engine,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run_matrix(specs, algorithms, cfg, seeds=args.seeds, workers=args.workers)
    raw_path = out / "records_raw.csv"
    avg_path = out / "records_avg.csv"
    save_records(str(raw_path), result.records)
    save_average_rows(str(avg_path), average_records(result.records))
    print(f"{len(result.records)} runs -> {raw_path}")
    print(f"averages -> {avg_path}")
    if result.failures:
        fail_path = out / "failures.csv"
        with open(fail_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=["problem", "algorithm", "seed", "error"])
            writer.writeheader()
            writer.writerows(result.failures)
        print(f"{len(result.failures)} failed runs -> {fail_path}", file=sys.stderr)
        return 2
    return 0


def _cmd_profile(args: argparse.Namespace) -> int:
    records = []
    for path in args.records:
        records.extend(load_records(path))
    if not records:
        raise ValueError("no records found")
    rows = average_records(records)
    if args.solvers:
        solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    else:
        solvers = sorted({r["algorithm"] for r in rows})
    if len(solvers) < 2:
        raise ValueError("profiles need at least two solvers")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    from .plots import gap_cdf_figure, profile_figure

    if args.metric == "f":
        by_problem: dict[str, dict[str, float]] = {}
        for row in rows:
            if row["algorithm"] in solvers:
                by_problem.setdefault(row["problem"], {})[row["algorithm"]] = row["f_star"]
        problems = sorted(p for p, per in by_problem.items() if set(per) == set(solvers))
        if not problems:
            raise ValueError("no problem has records for every requested solver")
        values = np.array([[by_problem[p][s] for s in solvers] for p in problems])
        result = relative_gap_cdf(values)
        csv_path = out / "gap_cdf_f.csv"
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["gap", *solvers])
            for i, level in enumerate(result.levels):
                writer.writerow([level, *result.cdf[i].tolist()])
        fig_path = gap_cdf_figure(result, solvers, str(out / "gap_cdf_f.png"))
        print(f"{len(problems)} problems, solvers: {', '.join(solvers)}")
        print(f"data -> {csv_path}")
        print(f"figure -> {fig_path}")
        return 0

    problems, costs = build_cost_matrix(rows, solvers, args.metric, args.cap_missing)
    result = performance_profile(costs, cap_missing=args.cap_missing)
    csv_path = out / f"profile_{args.metric}.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau", *solvers])
        for i, tau in enumerate(result.taus):
            writer.writerow([tau, *result.rho[i].tolist()])
    fig_path = profile_figure(result, solvers, args.metric, str(out / f"profile_{args.metric}.png"))
    print(f"{result.n_problems} problems, solvers: {', '.join(solvers)}")
    print(f"data -> {csv_path}")
    print(f"figure -> {fig_path}")
    return 0


def _cmd_cost_ratio(args: argparse.Namespace) -> int:
    names = (
        [p.strip() for p in args.problems.split(",")]
        if args.problems
        else available_problems()
    )
    sizes = [int(s) for s in args.sizes.split(",")]
    problems = []
    for n in sizes:
        for name in names:
            # One pinned integer variable: ratios measure the continuous block.
            problems.append(make_problem(ProblemSpec(name, n + 1, 1), cache=False))
    per_problem, summary = cost_ratio_study(problems, n_points=args.points, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    detail_path = out / "cost_ratio.csv"
    with open(detail_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["problem", "n", "ratio"])
        writer.writerows(per_problem)
    summary_path = out / "cost_ratio_summary.csv"
    with open(summary_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "min", "median", "max"])
        writer.writerows(summary)
    weights_path = out / "weights.csv"
    table = WeightTable.from_ratios(summary)
    with open(weights_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "weight"])
        writer.writerows(table.entries)
    from .plots import cost_ratio_figure

    fig_path = cost_ratio_figure(per_problem, str(out / "cost_ratio.png"))
    print(f"data -> {detail_path}")
    print(f"summary -> {summary_path}")
    print(f"weights -> {weights_path}")
    print(f"figure -> {fig_path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "solve": _cmd_solve,
        "bench": _cmd_bench,
        "profile": _cmd_profile,
        "cost-ratio": _cmd_cost_ratio,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"mixsearch: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
