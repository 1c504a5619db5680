"""Alternating solvers over the mixed box: discrete sweeps plus a
continuous phase, gradient-based (gdfl) or derivative-free (dfndfl).

Both solvers are strictly monotone in the objective and deterministic for
a fixed (problem, config, algorithm, seed) tuple; all randomness flows
through seed-offset low-discrepancy cursors.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .continuous import (
    LbfgsMemory,
    armijo_backtrack,
    df_linesearch_continuous,
    fw_direction,
    lbfgsb_direction,
    lbfgsb_run,
    pg_direction,
)
from .core import MixedPoint, Problem, SolverConfig, project_box, stationarity_residual
from .discrete import DsOutcome, discrete_search
from .qmc import PrimitiveSet, SobolCursor, initial_direction_set

__all__ = [
    "ALGORITHMS",
    "RunRecord",
    "SolverState",
    "StopReason",
    "default_start",
    "dfndfl_iterate",
    "gdfl_iterate",
    "run",
    "write_trace",
]

ALGORITHMS = ("gdfl", "gdfl+", "dfndfl", "dfndfl-c")

_WOLFE_C2 = 0.9

Hook = Callable[[Problem, MixedPoint], MixedPoint]


class StopReason(str, Enum):
    budget_time = "budget_time"
    budget_evals = "budget_evals"
    converged = "converged"
    dirs_exhausted = "dirs_exhausted"


@dataclass
class SolverState:
    """Mutable per-run state shared by the iterate functions."""

    point: MixedPoint
    f: float
    dirs: PrimitiveSet
    alpha_c: float
    k: int = 0
    coord_index: int = 0
    dense: SobolCursor | None = None
    last_ds: DsOutcome | None = None
    last_residual: float = float("inf")
    moved: bool = False


@dataclass
class RunRecord:
    """Telemetry of one solver run.

    The ``*_best`` fields snapshot time, iteration and counter values at
    the moment the incumbent last improved strictly.
    """

    problem: str
    algorithm: str
    seed: int
    n: int
    m: int
    f_star: float
    T: float
    N_it: int
    n_f: int
    n_g: int
    T_best: float
    N_it_best: int
    n_f_best: int
    n_g_best: int
    stop_reason: str
    x_star: np.ndarray | None = None
    z_star: np.ndarray | None = None
    trace: list[dict] | None = None


# Column order of the delimited record files written by the bench harness.
RECORD_FIELDS = [
    "problem",
    "algorithm",
    "seed",
    "n",
    "m",
    "f_star",
    "T",
    "N_it",
    "n_f",
    "n_g",
    "T_best",
    "N_it_best",
    "n_f_best",
    "n_g_best",
    "stop_reason",
]


def default_start(box, seed: int, name: str = "") -> MixedPoint:
    """Deterministic starting point: box midpoint perturbed by up to 10% of
    each variable's range, keyed by a hash of (problem name, seed)."""
    digest = hashlib.sha256(f"{name}|{seed}".encode()).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    mid_x, mid_z = box.midpoint()
    x0 = mid_x + 0.1 * (box.ux - box.lx) * rng.uniform(-1.0, 1.0, box.n)
    x0 = project_box(x0, box.lx, box.ux)
    z_raw = mid_z + 0.1 * (box.uz - box.lz).astype(float) * rng.uniform(-1.0, 1.0, box.m)
    z0 = np.clip(np.round(z_raw), box.lz, box.uz).astype(np.int64)
    return MixedPoint(x0, z0)


def _engine_direction(
    prob: Problem, p: MixedPoint, engine: str, mem: LbfgsMemory | None
) -> np.ndarray:
    if engine == "lbfgsb":
        return lbfgsb_direction(prob, p, mem)
    if engine == "pg":
        return pg_direction(prob, p, 1.0)
    if engine == "fw":
        return fw_direction(prob, p)
    raise ValueError(f"unknown engine {engine!r}")


def _armijo_step(
    prob: Problem,
    p: MixedPoint,
    cfg: SolverConfig,
    mem: LbfgsMemory | None,
) -> tuple[MixedPoint, float, bool]:
    """One engine direction plus Armijo acceptance; feeds the quasi-Newton
    memory when the curvature condition holds.  Returns (point, f, moved)."""
    g = prob.grad(p)
    v = _engine_direction(prob, p, cfg.engine, mem)
    if not np.any(v):
        return p, prob.f(p), False
    slope = float(g @ v)
    if slope >= 0.0:
        return p, prob.f(p), False
    ls = armijo_backtrack(
        prob, p, v, cfg.gamma, cfg.delta, cfg.alpha0_c, cfg.max_backtracks
    )
    if not ls.success:
        return p, ls.f_new, False
    nxt = p.with_x(ls.x_new)
    if mem is not None:
        g_new = prob.grad(nxt)
        if float(g_new @ v) >= _WOLFE_C2 * slope:
            mem.push(ls.x_new - p.x, g_new - g)
    return nxt, ls.f_new, True


def _apply_hook(
    prob: Problem, hook: Hook, p: MixedPoint, f_ref: float, what: str
) -> tuple[MixedPoint, float]:
    cand = hook(prob, p)
    if not isinstance(cand, MixedPoint):
        raise ValueError(f"{what} hook must return a MixedPoint")
    f_cand = prob.f(cand)
    if f_cand > f_ref:
        raise ValueError(f"{what} hook returned a worse point ({f_cand} > {f_ref})")
    return cand, f_cand


def gdfl_iterate(
    state: SolverState,
    prob: Problem,
    cfg: SolverConfig,
    plus: bool = False,
    discrete_improvement: Hook | None = None,
) -> SolverState:
    """One gradient-based outer iteration: discrete sweep first, then a
    stationarity-gated continuous phase at the new integer assignment.

    In "+" mode the continuous phase runs up to ``p_steps`` engine steps
    instead of one, reusing the quasi-Newton memory built by the first
    Armijo step; the memory is discarded when the iteration ends because
    the next sweep may change the integer block.
    """
    before = state.point.key()
    ds = discrete_search(prob, state.point, state.dirs, cfg.eta)
    cur, f_cur = ds.point, ds.f
    if discrete_improvement is not None:
        cand, f_cand = _apply_hook(prob, discrete_improvement, cur, f_cur, "discrete improvement")
        if not np.array_equal(cand.x, cur.x):
            raise ValueError("discrete improvement hook must keep x fixed")
        cur, f_cur = cand, f_cand
    residual = stationarity_residual(prob, cur) if prob.n > 0 else 0.0
    if prob.n > 0 and residual > cfg.eps_stat:
        mem = LbfgsMemory() if cfg.engine == "lbfgsb" else None
        cur, f_cur, _ = _armijo_step(prob, cur, cfg, mem)
        if plus:
            steps = cfg.resolve_p_steps(prob.n + prob.m) - 1
            if cfg.engine == "lbfgsb":
                cur = lbfgsb_run(
                    prob,
                    cur,
                    steps,
                    cfg.eps_stat,
                    cfg.gamma,
                    cfg.delta,
                    cfg.alpha0_c,
                    cfg.max_backtracks,
                    mem=mem,
                )
                f_cur = prob.f(cur)
            else:
                for _ in range(steps):
                    if stationarity_residual(prob, cur) <= cfg.eps_stat:
                        break
                    cur, f_cur, stepped = _armijo_step(prob, cur, cfg, None)
                    if not stepped:
                        break
    state.point = cur
    state.f = f_cur
    state.k += 1
    state.last_ds = ds
    state.last_residual = residual
    state.moved = state.point.key() != before
    return state


def dfndfl_iterate(
    state: SolverState,
    prob: Problem,
    cfg: SolverConfig,
    coordinate: bool = False,
    refinement: Hook | None = None,
) -> SolverState:
    """One derivative-free outer iteration: a continuous line search along
    the next dense (or cycled coordinate) direction, then a discrete sweep
    from the updated continuous block, then an optional refinement hook."""
    before = state.point.key()
    p = state.point
    if prob.n > 0:
        if coordinate:
            v = np.zeros(prob.n)
            v[state.coord_index % prob.n] = 1.0
            state.coord_index += 1
        else:
            v = state.dense.next_unit_direction()
        ls = df_linesearch_continuous(
            prob, p, v, state.alpha_c, cfg.gamma, cfg.delta, cfg.eta
        )
        state.alpha_c = max(float(ls.alpha), np.finfo(float).tiny)
        p = p.with_x(ls.x_new)
    ds = discrete_search(prob, p, state.dirs, cfg.eta)
    cur, f_cur = ds.point, ds.f
    if refinement is not None:
        cur, f_cur = _apply_hook(prob, refinement, cur, f_cur, "refinement")
    state.point = cur
    state.f = f_cur
    state.k += 1
    state.last_ds = ds
    state.last_residual = float("inf")
    state.moved = state.point.key() != before
    return state


def _check_self_stop(
    state: SolverState, cfg: SolverConfig, gradient_based: bool
) -> StopReason | None:
    """Self-stop test after one iteration.

    Requires a failed sweep on the ``xi``-reduction path with no room left
    to enrich and ``xi`` at its floor.  The gradient solvers then stop as
    converged when the continuous block is stationary, or report direction
    exhaustion when fully stalled; the derivative-free solvers stop only
    when fully stalled with the continuous stepsize at its floor.
    """
    ds = state.last_ds
    if ds is None or not ds.xi_reduced or ds.grew > 0:
        return None
    if not state.dirs.saturated or state.dirs.xi > cfg.xi_min:
        return None
    if gradient_based:
        if state.last_residual <= cfg.eps_stat:
            return StopReason.converged
        if not state.moved:
            return StopReason.dirs_exhausted
        return None
    if not state.moved and state.alpha_c <= cfg.alpha_c_min:
        return StopReason.dirs_exhausted
    return None


def run(
    prob: Problem,
    cfg: SolverConfig,
    algorithm: str = "gdfl+",
    seed: int = 0,
    x0: np.ndarray | None = None,
    z0: np.ndarray | None = None,
    collect_trace: bool = False,
    trace_path: str | None = None,
    discrete_improvement: Hook | None = None,
    refinement: Hook | None = None,
) -> RunRecord:
    """Run one solver to a stop reason and return its telemetry.

    The wall-clock and weighted-evaluation budgets are checked once per
    outer iteration, so runs overshoot a boundary by at most one iteration.
    Counters and the evaluation cache of ``prob`` are reset at entry:
    records always describe exactly one run.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
    gradient_based = algorithm.startswith("gdfl")
    if gradient_based and not prob.has_gradient:
        raise ValueError(f"{algorithm} requires a problem with a gradient oracle")
    if seed < 0:
        raise ValueError("seed must be nonnegative")

    prob.reset_counters()
    prob.clear_cache()
    start = default_start(prob.box, seed, prob.name)
    if x0 is not None:
        start = MixedPoint(x0, start.z)
    if z0 is not None:
        start = MixedPoint(start.x, z0)
    if not prob.box.contains(start.x, start.z):
        raise ValueError("starting point lies outside the box")

    t0 = time.perf_counter()
    f0 = prob.f(start)
    state = SolverState(
        point=start,
        f=f0,
        dirs=initial_direction_set(
            prob.m, cfg.max_discrete_dirs, xi0=cfg.xi0, seed=seed
        ),
        # With no continuous block the stepsize never updates; seeding it at
        # zero keeps the derivative-free stall test meaningful for n = 0.
        alpha_c=cfg.alpha0_c if prob.n > 0 else 0.0,
        dense=SobolCursor(prob.n, 1 + seed) if prob.n > 0 else None,
    )
    best_f = state.f
    best_point = state.point
    best = {"t": 0.0, "k": 0, "n_f": prob.n_f, "n_g": prob.n_g}
    trace: list[dict] = []

    def trace_row() -> dict:
        return {
            "k": state.k,
            "f": state.f,
            "xi": state.dirs.xi,
            "alpha_c": state.alpha_c,
            "n_f": prob.n_f,
            "n_g": prob.n_g,
            "t": time.perf_counter() - t0,
        }

    trace.append(trace_row())
    stop: StopReason | None = None
    while stop is None:
        elapsed = time.perf_counter() - t0
        if cfg.budget_seconds is not None and elapsed >= cfg.budget_seconds:
            stop = StopReason.budget_time
            break
        if cfg.max_weighted_evals is not None:
            spent = prob.n_f + cfg.gradient_weight * prob.n_g
            if spent >= cfg.max_weighted_evals:
                stop = StopReason.budget_evals
                break
        if algorithm == "gdfl":
            gdfl_iterate(state, prob, cfg, plus=False, discrete_improvement=discrete_improvement)
        elif algorithm == "gdfl+":
            gdfl_iterate(state, prob, cfg, plus=True, discrete_improvement=discrete_improvement)
        elif algorithm == "dfndfl":
            dfndfl_iterate(state, prob, cfg, coordinate=False, refinement=refinement)
        else:
            dfndfl_iterate(state, prob, cfg, coordinate=True, refinement=refinement)
        if state.f < best_f:
            best_f = state.f
            best_point = state.point
            best = {
                "t": time.perf_counter() - t0,
                "k": state.k,
                "n_f": prob.n_f,
                "n_g": prob.n_g,
            }
        trace.append(trace_row())
        stop = _check_self_stop(state, cfg, gradient_based)

    elapsed = time.perf_counter() - t0
    record = RunRecord(
        problem=prob.name,
        algorithm=algorithm,
        seed=seed,
        n=prob.n,
        m=prob.m,
        f_star=best_f,
        T=elapsed,
        N_it=state.k,
        n_f=prob.n_f,
        n_g=prob.n_g,
        T_best=best["t"],
        N_it_best=best["k"],
        n_f_best=best["n_f"],
        n_g_best=best["n_g"],
        stop_reason=stop.value,
        x_star=best_point.x.copy(),
        z_star=best_point.z.copy(),
        trace=trace if (collect_trace or trace_path) else None,
    )
    if trace_path:
        write_trace(trace_path, trace)
    return record


def write_trace(path: str, trace: list[dict]) -> None:
    """Write per-iteration records as UTF-8 JSON lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in trace:
            fh.write(json.dumps(row) + "\n")


def read_trace(path: str) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
