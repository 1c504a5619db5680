"""Benchmark harness: run matrices, weighted evaluation counts,
performance profiles, relative-gap CDFs and the gradient-cost study.

Gradient calls are more expensive than objective calls, so comparisons
between gradient-based and derivative-free solvers charge each gradient a
dimension-dependent weight: ``N_f = n_f + w(n) * n_g``.  The default
weight table can be regenerated on local hardware with
:func:`cost_ratio_study`.
"""

from __future__ import annotations

import concurrent.futures
import csv
import statistics
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import MixedPoint, Problem, SolverConfig
from .problems import ProblemSpec, make_problem
from .solvers import RECORD_FIELDS, RunRecord, run

__all__ = [
    "CdfResult",
    "MatrixResult",
    "ProfileResult",
    "WeightTable",
    "average_records",
    "cost_ratio_study",
    "load_records",
    "performance_profile",
    "relative_gap_cdf",
    "run_matrix",
    "same_solution_tol",
    "save_records",
    "weighted_evals",
]

SAME_SOLUTION_RTOL = 1e-6


@dataclass(frozen=True)
class WeightTable:
    """Gradient-call weight as a step function of the continuous dimension.

    ``entries`` maps tabulated dimensions to weights; a query resolves to
    the nearest tabulated dimension at or above it and queries beyond the
    table use the largest entry.
    """

    entries: tuple[tuple[int, float], ...] = (
        (95, 2.47),
        (195, 2.852),
        (495, 4.999),
        (995, 7.543),
        (1995, 10.908),
        (4995, 44.513),
    )

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("weight table needs at least one entry")
        ns = [n for n, _ in self.entries]
        if ns != sorted(ns) or len(set(ns)) != len(ns):
            raise ValueError("weight table dimensions must be strictly increasing")
        if any(w <= 0 for _, w in self.entries):
            raise ValueError("weights must be positive")

    def weight(self, n: int) -> float:
        for dim, w in self.entries:
            if n <= dim:
                return w
        return self.entries[-1][1]

    @classmethod
    def from_ratios(cls, rows: list[tuple[int, float, float, float]]) -> "WeightTable":
        """Build a table from (n, min, median, max) ratio rows, using the
        max column as the weight for each dimension."""
        entries = tuple(sorted((int(n), float(mx)) for n, _, _, mx in rows))
        return cls(entries=entries)


def weighted_evals(n_f: int, n_g: int, n: int, table: WeightTable | None = None) -> float:
    """Weighted evaluation count ``n_f + w(n) * n_g``."""
    if n_f < 0 or n_g < 0:
        raise ValueError("counters must be nonnegative")
    table = table or WeightTable()
    return float(n_f) + table.weight(n) * float(n_g)


def same_solution_tol(f_best: float) -> float:
    return SAME_SOLUTION_RTOL * max(1.0, abs(f_best))


# --- run matrix --------------------------------------------------------------


@dataclass
class MatrixResult:
    records: list[RunRecord]
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _one_run(spec: ProblemSpec, algorithm: str, cfg: SolverConfig, seed: int) -> RunRecord:
    prob = make_problem(spec, cache=cfg.cache)
    return run(prob, cfg, algorithm, seed=seed)


def _one_run_packed(args: tuple) -> RunRecord:
    return _one_run(*args)


def run_matrix(
    specs: list[ProblemSpec],
    algorithms: list[str],
    cfg: SolverConfig,
    seeds: int = 5,
    workers: int = 1,
) -> MatrixResult:
    """Run every (problem, algorithm, seed) combination.

    Failed runs are recorded with their error message and the matrix keeps
    going; ``workers > 1`` distributes runs over processes, which restricts
    the matrix to registry problems (specs must be reconstructible by
    name in the worker).
    """
    if seeds < 1:
        raise ValueError("seeds must be at least 1")
    if workers < 1:
        raise ValueError("workers must be at least 1")
    jobs = [
        (spec, algorithm, cfg, seed)
        for spec in specs
        for algorithm in algorithms
        for seed in range(seeds)
    ]
    result = MatrixResult(records=[])
    if workers == 1:
        for job in jobs:
            try:
                result.records.append(_one_run_packed(job))
            except Exception as exc:  # noqa: BLE001 - matrix must keep going
                spec, algorithm, _, seed = job
                result.failures.append(
                    {
                        "problem": spec.instance,
                        "algorithm": algorithm,
                        "seed": seed,
                        "error": f"{type(exc).__name__}: {exc}",
                    }
                )
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_one_run_packed, job): job for job in jobs}
            for fut in concurrent.futures.as_completed(futures):
                spec, algorithm, _, seed = futures[fut]
                try:
                    result.records.append(fut.result())
                except Exception as exc:  # noqa: BLE001
                    result.failures.append(
                        {
                            "problem": spec.instance,
                            "algorithm": algorithm,
                            "seed": seed,
                            "error": f"{type(exc).__name__}: {exc}",
                        }
                    )
    # Completion order depends on the scheduler; records come out sorted so
    # both execution modes write identical files.
    result.records.sort(key=lambda r: (r.problem, r.algorithm, r.seed))
    result.failures.sort(key=lambda f: (f["problem"], f["algorithm"], f["seed"]))
    return result


_NUMERIC_FIELDS = [
    "f_star",
    "T",
    "N_it",
    "n_f",
    "n_g",
    "T_best",
    "N_it_best",
    "n_f_best",
    "n_g_best",
]


def average_records(records: list[RunRecord]) -> list[dict]:
    """Average numeric telemetry over seeds per (problem, algorithm) and tag
    problems where all averaged solvers agree on the solution value.

    The tag is true when the spread of averaged ``f_star`` across solvers
    stays within ``1e-6 * max(1, |best|)``.
    """
    groups: dict[tuple[str, str], list[RunRecord]] = {}
    for rec in records:
        groups.setdefault((rec.problem, rec.algorithm), []).append(rec)
    rows: list[dict] = []
    for (problem, algorithm), recs in sorted(groups.items()):
        row: dict = {
            "problem": problem,
            "algorithm": algorithm,
            "seeds": len(recs),
            "n": recs[0].n,
            "m": recs[0].m,
        }
        for name in _NUMERIC_FIELDS:
            row[name] = statistics.fmean(getattr(r, name) for r in recs)
        rows.append(row)
    by_problem: dict[str, list[dict]] = {}
    for row in rows:
        by_problem.setdefault(row["problem"], []).append(row)
    for problem_rows in by_problem.values():
        values = [r["f_star"] for r in problem_rows]
        best = min(values)
        tag = (max(values) - best) <= same_solution_tol(best)
        for r in problem_rows:
            r["same_solution"] = tag
    return rows


AVERAGE_FIELDS = [
    "problem",
    "algorithm",
    "seeds",
    "n",
    "m",
    *_NUMERIC_FIELDS,
    "same_solution",
]


def save_records(path: str, records: list[RunRecord]) -> None:
    """Raw per-run records as a UTF-8 CSV with a fixed column order."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RECORD_FIELDS)
        writer.writeheader()
        for rec in records:
            writer.writerow({name: getattr(rec, name) for name in RECORD_FIELDS})


def load_records(path: str) -> list[RunRecord]:
    records: list[RunRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            records.append(
                RunRecord(
                    problem=row["problem"],
                    algorithm=row["algorithm"],
                    seed=int(row["seed"]),
                    n=int(row["n"]),
                    m=int(row["m"]),
                    f_star=float(row["f_star"]),
                    T=float(row["T"]),
                    N_it=int(float(row["N_it"])),
                    n_f=int(float(row["n_f"])),
                    n_g=int(float(row["n_g"])),
                    T_best=float(row["T_best"]),
                    N_it_best=int(float(row["N_it_best"])),
                    n_f_best=int(float(row["n_f_best"])),
                    n_g_best=int(float(row["n_g_best"])),
                    stop_reason=row["stop_reason"],
                )
            )
    return records


def save_average_rows(path: str, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=AVERAGE_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({name: row[name] for name in AVERAGE_FIELDS})


# --- comparison curves --------------------------------------------------------


@dataclass(frozen=True)
class ProfileResult:
    """Solver performance profile: step functions ``rho_s(tau)`` giving the
    fraction of problems solved within a factor ``tau`` of the best cost."""

    taus: np.ndarray
    rho: np.ndarray  # shape (len(taus), n_solvers)
    n_problems: int
    dropped: int

    def rho_at(self, tau: float, solver: int) -> float:
        mask = self.taus <= tau
        if not np.any(mask):
            return 0.0
        return float(self.rho[np.flatnonzero(mask)[-1], solver])


def performance_profile(costs: np.ndarray, cap_missing: bool = True) -> ProfileResult:
    """Dolan-More performance profile of a (problems x solvers) cost matrix.

    Infinite costs mark runs that missed the target.  With ``cap_missing``
    they stay in: their ratio is infinite, so the affected solver's curve
    never reaches 1 while finite competitors are unaffected.  Without it,
    any problem containing an infinite cost is dropped, restricting the
    comparison to problems every solver finished.  Rows where every solver
    is infinite are always dropped with a warning.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.ndim != 2 or costs.shape[1] < 2:
        raise ValueError("costs must be a (problems x solvers>=2) matrix")
    if np.any(np.nan_to_num(costs, nan=-1.0, posinf=1.0) < 0.0):
        raise ValueError("costs must be nonnegative (inf allowed, nan not)")
    all_inf = np.all(np.isinf(costs), axis=1)
    if np.any(all_inf):
        warnings.warn(
            f"dropping {int(np.sum(all_inf))} problem(s) where every solver failed",
            stacklevel=2,
        )
        costs = costs[~all_inf]
    if not cap_missing:
        costs = costs[~np.any(np.isinf(costs), axis=1)]
    dropped = int(np.sum(all_inf))
    if costs.shape[0] == 0:
        raise ValueError("no problems left to profile")
    # Zero costs (e.g. sub-resolution timings) are lifted to a tiny positive
    # value so ratios stay defined; ties at the minimum then have ratio 1.
    floored = np.maximum(costs, 1e-12)
    best = np.min(floored, axis=1, keepdims=True)
    ratios = floored / best
    finite = ratios[np.isfinite(ratios)]
    taus = np.unique(finite)
    rho = np.vstack([
        np.mean(ratios <= tau, axis=0) for tau in taus
    ])
    return ProfileResult(taus=taus, rho=rho, n_problems=costs.shape[0], dropped=dropped)


@dataclass(frozen=True)
class CdfResult:
    """Per-solver empirical CDF of relative gaps to the best solver value."""

    gaps: np.ndarray  # shape (problems, solvers)
    levels: np.ndarray
    cdf: np.ndarray  # shape (len(levels), n_solvers)

    def cdf_at(self, gap: float, solver: int) -> float:
        return float(np.mean(self.gaps[:, solver] <= gap))


def relative_gap_cdf(f_values: np.ndarray) -> CdfResult:
    """Relative-gap CDFs of a (problems x solvers) matrix of attained values.

    The reference per problem is the best solver value; gaps are
    ``(f - f_best) / max(1, |f_best|)``, guarding tiny references.
    """
    f_values = np.asarray(f_values, dtype=float)
    if f_values.ndim != 2 or f_values.shape[1] < 2:
        raise ValueError("f_values must be a (problems x solvers>=2) matrix")
    best = np.min(f_values, axis=1, keepdims=True)
    guard = np.maximum(1.0, np.abs(best))
    gaps = (f_values - best) / guard
    levels = np.unique(gaps[np.isfinite(gaps)])
    cdf = np.vstack([np.mean(gaps <= lv, axis=0) for lv in levels])
    return CdfResult(gaps=gaps, levels=levels, cdf=cdf)


# --- gradient cost study ------------------------------------------------------


def _random_feasible(prob: Problem, rng: np.random.Generator) -> MixedPoint:
    box = prob.box
    x = rng.uniform(box.lx, box.ux) if box.n else np.zeros(0)
    z = rng.integers(box.lz, box.uz + 1) if box.m else np.zeros(0, dtype=np.int64)
    return MixedPoint(x, z)


def cost_ratio_study(
    problems: list[Problem], n_points: int = 500, seed: int = 0
) -> tuple[list[tuple[str, int, float]], list[tuple[int, float, float, float]]]:
    """Time gradient calls against objective calls at random feasible points.

    Returns per-problem rows ``(name, n, ratio)`` and per-dimension summary
    rows ``(n, min, median, max)`` suitable for
    :meth:`WeightTable.from_ratios`.
    """
    if n_points < 1:
        raise ValueError("n_points must be at least 1")
    rng = np.random.default_rng(seed)
    per_problem: list[tuple[str, int, float]] = []
    for prob in problems:
        if not prob.has_gradient:
            raise ValueError(f"problem {prob.name!r} has no gradient to time")
        points = [_random_feasible(prob, rng) for _ in range(n_points)]
        values = [(p.x, p.z) for p in points]
        t0 = time.perf_counter()
        for x, z in values:
            prob._objective(x, z)
        t_f = time.perf_counter() - t0
        t0 = time.perf_counter()
        for x, z in values:
            prob._gradient(x, z)
        t_g = time.perf_counter() - t0
        per_problem.append((prob.name, prob.n, t_g / max(t_f, 1e-12)))
    by_n: dict[int, list[float]] = {}
    for _, n, ratio in per_problem:
        by_n.setdefault(n, []).append(ratio)
    summary = [
        (n, min(rs), statistics.median(rs), max(rs)) for n, rs in sorted(by_n.items())
    ]
    return per_problem, summary


def build_cost_matrix(
    avg_rows: list[dict],
    solvers: list[str],
    metric: str,
    cap_missing: bool,
    table: WeightTable | None = None,
) -> tuple[list[str], np.ndarray]:
    """Assemble the (problems x solvers) cost matrix for one profile metric.

    Solvers that missed the per-problem best value (outside the
    same-solution tolerance) get infinite cost; how those entries are
    treated is up to :func:`performance_profile` via ``cap_missing``.
    """
    metrics = {
        "T": lambda r: r["T"],
        "Tbest": lambda r: r["T_best"],
        "Nit": lambda r: r["N_it"],
        "Nitbest": lambda r: r["N_it_best"],
        "Nf": lambda r: weighted_evals(r["n_f"], r["n_g"], r["n"], table),
        "Nfbest": lambda r: weighted_evals(r["n_f_best"], r["n_g_best"], r["n"], table),
    }
    if metric not in metrics:
        raise ValueError(f"metric must be one of {sorted(metrics)}, got {metric!r}")
    cost_of = metrics[metric]
    by_problem: dict[str, dict[str, dict]] = {}
    for row in avg_rows:
        if row["algorithm"] in solvers:
            by_problem.setdefault(row["problem"], {})[row["algorithm"]] = row
    problems = sorted(
        p for p, per in by_problem.items() if set(per) == set(solvers)
    )
    if not problems:
        raise ValueError("no problem has records for every requested solver")
    matrix = np.empty((len(problems), len(solvers)))
    for i, problem in enumerate(problems):
        per = by_problem[problem]
        best = min(per[s]["f_star"] for s in solvers)
        tol = same_solution_tol(best)
        for j, s in enumerate(solvers):
            row = per[s]
            solved = row["f_star"] <= best + tol
            matrix[i, j] = cost_of(row) if solved else np.inf
    return problems, matrix
