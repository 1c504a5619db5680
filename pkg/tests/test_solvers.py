import numpy as np
import pytest

from mixsearch.core import Box, MixedPoint, Problem, SolverConfig
from mixsearch.solvers import (
    ALGORITHMS,
    RECORD_FIELDS,
    StopReason,
    default_start,
    read_trace,
    run,
    write_trace,
)

from conftest import separable_quadratic


def tiny_problem(cache: bool = True) -> Problem:
    # f = x^2 + z^2 with optimum at the feasible point (0, 0).
    return separable_quadratic([1.0], [0.0], [1.0], [0.0], name="tiny", cache=cache)


# --- starting points --------------------------------------------------------


def test_default_start_is_deterministic_and_feasible():
    box = Box([-5.0, -5.0], [5.0, 5.0], [-8, -8], [8, 8])
    a = default_start(box, seed=3, name="p")
    b = default_start(box, seed=3, name="p")
    assert np.array_equal(a.x, b.x) and np.array_equal(a.z, b.z)
    assert box.contains(a.x, a.z)
    assert a.z.dtype == np.int64


def test_default_start_varies_with_seed_and_name():
    box = Box([-5.0] * 4, [5.0] * 4, [-8] * 2, [8] * 2)
    a = default_start(box, seed=0, name="p")
    b = default_start(box, seed=1, name="p")
    c = default_start(box, seed=0, name="q")
    assert not np.array_equal(a.x, b.x)
    assert not np.array_equal(a.x, c.x)


def test_default_start_stays_near_midpoint():
    box = Box([0.0], [10.0], [0], [10])
    for seed in range(20):
        p = default_start(box, seed)
        assert 4.0 <= p.x[0] <= 6.0
        assert 4 <= p.z[0] <= 6


# --- the four solvers on a convex model problem ----------------------------------


def test_gdfl_plus_reaches_optimum_within_five_iterations():
    prob = tiny_problem()
    rec = run(
        prob,
        SolverConfig(),
        "gdfl+",
        x0=np.array([2.0]),
        z0=np.array([2]),
        collect_trace=True,
    )
    assert rec.stop_reason == StopReason.converged.value
    assert rec.f_star <= 1e-10
    assert min(row["f"] for row in rec.trace[: 6]) <= 1e-10
    assert np.allclose(rec.x_star, 0.0, atol=1e-8)
    assert rec.z_star[0] == 0


@pytest.mark.parametrize("algo", ALGORITHMS)
def test_each_algorithm_solves_the_tiny_problem(algo):
    prob = tiny_problem()
    cfg = SolverConfig(max_weighted_evals=5000)
    rec = run(prob, cfg, algo, seed=1, collect_trace=True)
    assert rec.f_star <= 1e-6
    assert rec.stop_reason in {
        StopReason.converged.value,
        StopReason.dirs_exhausted.value,
    }
    fs = [row["f"] for row in rec.trace]
    assert all(b <= a + 1e-12 for a, b in zip(fs, fs[1:]))


@pytest.mark.parametrize("algo", ALGORITHMS)
def test_trace_telemetry_is_monotone_in_counters(algo):
    prob = separable_quadratic([1.0, 2.0], [0.5, -0.5], [1.0, 1.0], [1.0, -2.0])
    cfg = SolverConfig(max_weighted_evals=800, max_discrete_dirs=8)
    rec = run(prob, cfg, algo, seed=0, collect_trace=True)
    for key in ("n_f", "n_g", "t", "k"):
        vals = [row[key] for row in rec.trace]
        assert all(b >= a for a, b in zip(vals, vals[1:])), key
    xis = [row["xi"] for row in rec.trace]
    assert all(b <= a for a, b in zip(xis, xis[1:]))
    assert rec.trace[0]["k"] == 0
    assert rec.trace[-1]["n_f"] == rec.n_f
    assert rec.trace[-1]["n_g"] == rec.n_g


@pytest.mark.parametrize("engine", ["pg", "fw", "lbfgsb"])
def test_gdfl_engines_reach_stationarity(engine):
    prob = separable_quadratic([1.0, 3.0], [0.25, -1.0], [1.0], [2.0])
    cfg = SolverConfig(engine=engine, max_weighted_evals=20000)
    rec = run(prob, cfg, "gdfl+", seed=2)
    assert rec.stop_reason == StopReason.converged.value
    assert rec.f_star <= 1e-8
    assert rec.z_star[0] == 2


def test_gdfl_plus_uses_fewer_outer_iterations_than_plain_on_larger_n():
    # p_steps = ceil((n + m) / 10) = 2 here, so "+" takes one extra engine
    # step per outer iteration and needs no more outer iterations.
    a = np.linspace(1.0, 4.0, 12)
    c = np.linspace(-1.0, 1.0, 12)
    prob = separable_quadratic(a, c, [1.0, 1.0], [0.0, 3.0])
    cfg = SolverConfig(max_weighted_evals=40000)
    plain = run(prob, cfg, "gdfl", seed=0)
    plus = run(prob, cfg, "gdfl+", seed=0)
    assert plus.f_star <= plain.f_star + 1e-9
    assert plus.N_it <= plain.N_it


def test_pure_integer_problem_runs_without_continuous_block():
    box = Box(np.zeros(0), np.zeros(0), [-6, -6], [6, 6])
    prob = Problem(
        box,
        lambda x, z: float((z[0] - 2) ** 2 + (z[1] + 1) ** 2),
        lambda x, z: np.zeros(0),
        name="intonly",
    )
    for algo in ("gdfl", "dfndfl"):
        rec = run(prob, SolverConfig(max_weighted_evals=4000, max_discrete_dirs=12), algo)
        assert rec.f_star == 0.0
        assert rec.z_star.tolist() == [2, -1]
        assert rec.n_g == 0
        assert rec.stop_reason in {
            StopReason.converged.value,
            StopReason.dirs_exhausted.value,
        }


# --- budgets and stop reasons -----------------------------------------------------


def test_time_budget_stops_before_first_iteration():
    prob = tiny_problem()
    rec = run(prob, SolverConfig(budget_seconds=1e-9), "gdfl+")
    assert rec.stop_reason == StopReason.budget_time.value
    assert rec.N_it == 0
    assert rec.n_f == 1  # only the starting evaluation


def test_eval_budget_counts_weighted_gradients():
    prob = tiny_problem()
    rec = run(prob, SolverConfig(max_weighted_evals=1), "gdfl+")
    assert rec.stop_reason == StopReason.budget_evals.value
    assert rec.N_it == 0

    cfg = SolverConfig(max_weighted_evals=60, gradient_weight=5.0)
    rec = run(prob, cfg, "gdfl+", x0=np.array([2.0]), z0=np.array([2]))
    assert rec.n_f + 5.0 * rec.n_g >= 60 or rec.stop_reason != StopReason.budget_evals.value


def test_budget_overshoot_is_at_most_one_iteration():
    prob = tiny_problem()
    cfg = SolverConfig(max_weighted_evals=30)
    rec = run(prob, cfg, "dfndfl", seed=0, collect_trace=True)
    if rec.stop_reason == StopReason.budget_evals.value:
        spent_before_last = rec.trace[-2]["n_f"] + rec.trace[-2]["n_g"]
        assert spent_before_last >= 30 or len(rec.trace) >= 2


# --- record integrity ----------------------------------------------------------


def test_record_tracks_best_snapshot():
    prob = tiny_problem()
    rec = run(prob, SolverConfig(), "gdfl+", x0=np.array([2.0]), z0=np.array([2]), collect_trace=True)
    assert rec.f_star == min(row["f"] for row in rec.trace)
    assert rec.N_it_best <= rec.N_it
    assert rec.n_f_best <= rec.n_f
    assert rec.T_best <= rec.T
    # the incumbent stopped improving long before the xi floor was reached
    assert rec.N_it_best < rec.N_it


def test_record_field_list_matches_dataclass():
    prob = tiny_problem()
    rec = run(prob, SolverConfig(max_weighted_evals=10), "dfndfl")
    for field in RECORD_FIELDS:
        assert hasattr(rec, field)


def test_run_resets_counters_per_invocation():
    prob = tiny_problem()
    first = run(prob, SolverConfig(max_weighted_evals=50), "dfndfl")
    second = run(prob, SolverConfig(max_weighted_evals=50), "dfndfl")
    assert first.n_f == second.n_f
    assert first.n_g == second.n_g == 0


# --- determinism -------------------------------------------------------------


@pytest.mark.parametrize("algo", ALGORITHMS)
def test_repeat_runs_are_identical_modulo_time(algo):
    def fresh():
        return separable_quadratic(
            [1.0, 2.0, 0.5], [0.3, -0.7, 1.1], [1.0, 1.5], [1.0, -2.0], name="det"
        )

    cfg = SolverConfig(max_weighted_evals=600, max_discrete_dirs=10)
    a = run(fresh(), cfg, algo, seed=4, collect_trace=True)
    b = run(fresh(), cfg, algo, seed=4, collect_trace=True)
    assert a.f_star == b.f_star
    assert a.N_it == b.N_it
    assert a.n_f == b.n_f and a.n_g == b.n_g
    assert a.stop_reason == b.stop_reason
    assert np.array_equal(a.x_star, b.x_star)
    assert np.array_equal(a.z_star, b.z_star)
    for ra, rb in zip(a.trace, b.trace):
        for key in ("k", "f", "xi", "alpha_c", "n_f", "n_g"):
            assert ra[key] == rb[key]


def test_seeds_change_the_trajectory():
    prob = separable_quadratic([1.0] * 3, [0.0] * 3, [1.0] * 2, [0.0] * 2)
    cfg = SolverConfig(max_weighted_evals=300)
    a = run(prob, cfg, "dfndfl", seed=0)
    b = run(prob, cfg, "dfndfl", seed=1)
    assert a.n_f != b.n_f or not np.array_equal(a.x_star, b.x_star)


# --- hooks -----------------------------------------------------------------


def test_discrete_improvement_hook_is_applied():
    prob = tiny_problem()
    calls = []

    def snap(pr: Problem, p: MixedPoint) -> MixedPoint:
        calls.append(p.z.copy())
        return p.with_z(np.zeros(1, dtype=np.int64))  # jump straight to z* = 0

    rec = run(
        prob,
        SolverConfig(),
        "gdfl+",
        x0=np.array([2.0]),
        z0=np.array([2]),
        discrete_improvement=snap,
    )
    assert calls, "hook never invoked"
    assert rec.f_star <= 1e-10
    assert rec.z_star[0] == 0


def test_discrete_improvement_hook_must_keep_x_fixed():
    prob = tiny_problem()

    def shift_x(pr: Problem, p: MixedPoint) -> MixedPoint:
        return p.with_x(p.x * 0.5)

    with pytest.raises(ValueError, match="keep x fixed"):
        run(prob, SolverConfig(), "gdfl+", x0=np.array([2.0]), z0=np.array([2]),
            discrete_improvement=shift_x)


def test_hooks_must_not_worsen_the_objective():
    prob = tiny_problem()

    def worse(pr: Problem, p: MixedPoint) -> MixedPoint:
        return p.with_z(np.full(1, 5, dtype=np.int64))

    with pytest.raises(ValueError, match="worse"):
        run(prob, SolverConfig(), "gdfl+", z0=np.array([0]), discrete_improvement=worse)
    with pytest.raises(ValueError, match="worse"):
        run(prob, SolverConfig(), "dfndfl", z0=np.array([0]), refinement=worse)


def test_hook_must_return_mixed_point():
    prob = tiny_problem()
    with pytest.raises(ValueError, match="MixedPoint"):
        run(prob, SolverConfig(), "dfndfl", refinement=lambda pr, p: (p.x, p.z))


def test_refinement_hook_may_move_both_blocks():
    prob = tiny_problem()

    def polish(pr: Problem, p: MixedPoint) -> MixedPoint:
        return MixedPoint(np.zeros(1), np.zeros(1, dtype=np.int64))

    rec = run(prob, SolverConfig(max_weighted_evals=100), "dfndfl", refinement=polish)
    assert rec.f_star == 0.0


# --- input validation -----------------------------------------------------------


def test_run_rejects_unknown_algorithm():
    with pytest.raises(ValueError, match="algorithm"):
        run(tiny_problem(), SolverConfig(), "newton")


def test_run_rejects_negative_seed():
    with pytest.raises(ValueError, match="seed"):
        run(tiny_problem(), SolverConfig(), "dfndfl", seed=-1)


def test_gradient_solver_requires_gradient_oracle():
    box = Box([-1.0], [1.0], [0], [1])
    prob = Problem(box, lambda x, z: float(x[0] ** 2 + z[0]), None)
    with pytest.raises(ValueError, match="gradient"):
        run(prob, SolverConfig(), "gdfl")
    rec = run(prob, SolverConfig(max_weighted_evals=200), "dfndfl")
    assert rec.f_star <= 0.01


def test_run_rejects_infeasible_override():
    prob = tiny_problem()
    with pytest.raises(ValueError, match="outside"):
        run(prob, SolverConfig(), "gdfl+", x0=np.array([99.0]))
    with pytest.raises(ValueError, match="outside"):
        run(prob, SolverConfig(), "gdfl+", z0=np.array([99]))


# --- trace files ----------------------------------------------------------------


def test_trace_roundtrip(tmp_path):
    prob = tiny_problem()
    path = tmp_path / "trace.jsonl"
    rec = run(prob, SolverConfig(max_weighted_evals=80), "dfndfl", trace_path=str(path))
    loaded = read_trace(str(path))
    assert len(loaded) == len(rec.trace)
    assert loaded[0]["k"] == 0
    for row, ref in zip(loaded, rec.trace):
        assert row == pytest.approx(ref)


def test_write_trace_plain_rows(tmp_path):
    path = tmp_path / "t.jsonl"
    rows = [{"k": 0, "f": 1.5}, {"k": 1, "f": 0.5}]
    write_trace(str(path), rows)
    assert read_trace(str(path)) == rows
