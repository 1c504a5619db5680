"""Problem containers and shared primitives for mixed-integer box-constrained search.

A problem holds an objective ``f(x, z)`` over a box, where ``x`` is the
continuous block and ``z`` the integer block.  The objective is smooth in
``x`` for every fixed ``z``, but it is only ever evaluated at integer
feasible ``z``: there is no relaxation anywhere in the package.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Box",
    "EvaluationError",
    "MixedPoint",
    "Problem",
    "SolverConfig",
    "project_box",
    "stationarity_residual",
]

ENGINES = ("lbfgsb", "pg", "fw")


class EvaluationError(RuntimeError):
    """Raised when an oracle returns a non-finite value or is called infeasibly."""


def _as_float_vector(a, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(a, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def _as_int_vector(a, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(a))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        rounded = np.round(arr)
        if not np.all(np.isfinite(arr)) or np.any(arr != rounded):
            raise ValueError(f"{name} must hold exact integer values, got {arr!r}")
        arr = rounded
    return arr.astype(np.int64)


@dataclass(frozen=True)
class Box:
    """Bound box for the continuous block (``lx <= x <= ux``) and the
    integer block (``lz <= z <= uz``).

    All bounds are finite; ``n = len(lx)`` may be zero (pure-integer
    problems) while ``m = len(lz)`` must be at least one.
    """

    lx: np.ndarray
    ux: np.ndarray
    lz: np.ndarray
    uz: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "lx", _as_float_vector(self.lx, "lx"))
        object.__setattr__(self, "ux", _as_float_vector(self.ux, "ux"))
        object.__setattr__(self, "lz", _as_int_vector(self.lz, "lz"))
        object.__setattr__(self, "uz", _as_int_vector(self.uz, "uz"))
        if self.lx.shape != self.ux.shape:
            raise ValueError("lx and ux must have matching shapes")
        if self.lz.shape != self.uz.shape:
            raise ValueError("lz and uz must have matching shapes")
        if self.m == 0:
            raise ValueError("the integer block must be nonempty (m >= 1)")
        if not (np.all(np.isfinite(self.lx)) and np.all(np.isfinite(self.ux))):
            raise ValueError("continuous bounds must be finite")
        if np.any(self.lx > self.ux):
            raise ValueError("lx must be <= ux componentwise")
        if np.any(self.lz > self.uz):
            raise ValueError("lz must be <= uz componentwise")

    @property
    def n(self) -> int:
        return self.lx.size

    @property
    def m(self) -> int:
        return self.lz.size

    def contains(self, x: np.ndarray, z: np.ndarray) -> bool:
        """Exact membership test for a candidate pair of blocks."""
        ok_x = x.size == self.n and bool(
            np.all(x >= self.lx) and np.all(x <= self.ux)
        )
        ok_z = z.size == self.m and bool(
            np.all(z >= self.lz) and np.all(z <= self.uz)
        )
        return ok_x and ok_z

    def midpoint(self) -> tuple[np.ndarray, np.ndarray]:
        """Box midpoint, with the integer block rounded to the nearest
        feasible integer."""
        x = 0.5 * (self.lx + self.ux)
        z = np.clip(np.round(0.5 * (self.lz + self.uz)), self.lz, self.uz)
        return x, z.astype(np.int64)


@dataclass(frozen=True)
class MixedPoint:
    """One feasible candidate: continuous block ``x`` and integer block ``z``.

    Arrays are copied on construction; ``z`` is stored as int64 and never as
    rounded floats.
    """

    x: np.ndarray
    z: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", _as_float_vector(self.x, "x").copy())
        object.__setattr__(self, "z", _as_int_vector(self.z, "z").copy())

    def key(self) -> tuple[bytes, bytes]:
        """Hashable identity used by the evaluation cache."""
        return (self.x.tobytes(), self.z.tobytes())

    def with_x(self, x: np.ndarray) -> "MixedPoint":
        return MixedPoint(x, self.z)

    def with_z(self, z: np.ndarray) -> "MixedPoint":
        return MixedPoint(self.x, z)


def project_box(x: np.ndarray, lx: np.ndarray, ux: np.ndarray) -> np.ndarray:
    """Componentwise projection onto ``[lx, ux]``.

    Idempotent and nonexpansive; inputs are not modified.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != np.shape(lx) or x.shape != np.shape(ux):
        raise ValueError("project_box: shape mismatch between point and bounds")
    return np.minimum(np.maximum(x, lx), ux)


class _LruCache:
    """Small bounded mapping used to serve repeated oracle evaluations."""

    def __init__(self, maxsize: int) -> None:
        self.maxsize = maxsize
        self._data: OrderedDict = OrderedDict()

    def get(self, key):
        try:
            value = self._data[key]
        except KeyError:
            return None
        self._data.move_to_end(key)
        return value

    def put(self, key, value) -> None:
        self._data[key] = value
        self._data.move_to_end(key)
        if len(self._data) > self.maxsize:
            self._data.popitem(last=False)


class Problem:
    """Objective oracle over a box, with evaluation counters.

    Parameters
    ----------
    box : Box
        Feasible region.  Fixes the block sizes ``n`` and ``m``.
    objective : callable
        ``objective(x, z) -> float``; smooth in ``x`` for each fixed ``z``.
    gradient : callable or None
        ``gradient(x, z) -> ndarray`` of shape ``(n,)``: the derivative of
        the objective with respect to the continuous block only.  ``None``
        for problems consumed by derivative-free solvers alone.
    name : str
        Identifier used in records and for seeding the starting point.
    cache : bool
        Serve repeated evaluations at identical points without invoking the
        oracle again.  Counters count true oracle calls only.

    Notes
    -----
    Both oracles reject infeasible input and non-finite output: every solver
    in this package evaluates only at feasible points with exactly-integer
    ``z``, and that contract is enforced here rather than trusted.
    """

    def __init__(
        self,
        box: Box,
        objective: Callable[[np.ndarray, np.ndarray], float],
        gradient: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
        name: str = "problem",
        cache: bool = True,
        cache_size: int = 8192,
    ) -> None:
        self.box = box
        self.name = name
        self._objective = objective
        self._gradient = gradient
        self.n_f = 0
        self.n_g = 0
        self._f_cache = _LruCache(cache_size) if cache else None
        self._g_cache = _LruCache(cache_size) if cache else None

    @property
    def n(self) -> int:
        return self.box.n

    @property
    def m(self) -> int:
        return self.box.m

    @property
    def has_gradient(self) -> bool:
        return self._gradient is not None

    def reset_counters(self) -> None:
        self.n_f = 0
        self.n_g = 0

    def clear_cache(self) -> None:
        if self._f_cache is not None:
            self._f_cache = _LruCache(self._f_cache.maxsize)
        if self._g_cache is not None:
            self._g_cache = _LruCache(self._g_cache.maxsize)

    def _check_feasible(self, p: MixedPoint) -> None:
        if not self.box.contains(p.x, p.z):
            raise EvaluationError(
                f"oracle called outside the box: x={p.x!r}, z={p.z!r}"
            )

    def f(self, p: MixedPoint) -> float:
        """Objective value at a feasible point; counts one oracle call per
        distinct point when caching is on."""
        self._check_feasible(p)
        key = p.key()
        if self._f_cache is not None:
            hit = self._f_cache.get(key)
            if hit is not None:
                return hit
        value = float(self._objective(p.x, p.z))
        self.n_f += 1
        if not np.isfinite(value):
            raise EvaluationError(
                f"objective returned non-finite value {value!r} at x={p.x!r}, z={p.z!r}"
            )
        if self._f_cache is not None:
            self._f_cache.put(key, value)
        return value

    def grad(self, p: MixedPoint) -> np.ndarray:
        """Gradient of the objective with respect to ``x`` at fixed ``z``."""
        if self._gradient is None:
            raise EvaluationError(f"problem {self.name!r} exposes no gradient oracle")
        self._check_feasible(p)
        key = p.key()
        if self._g_cache is not None:
            hit = self._g_cache.get(key)
            if hit is not None:
                return hit.copy()
        g = np.asarray(self._gradient(p.x, p.z), dtype=float).reshape(self.n)
        self.n_g += 1
        if not np.all(np.isfinite(g)):
            raise EvaluationError(
                f"gradient returned non-finite values at x={p.x!r}, z={p.z!r}"
            )
        if self._g_cache is not None:
            self._g_cache.put(key, g.copy())
        return g


def stationarity_residual(prob: Problem, p: MixedPoint) -> float:
    """Projected-gradient residual ``||project(x - grad) - x||_inf`` of the
    continuous block at fixed ``z``.

    Zero exactly at points satisfying the box first-order condition; for a
    pure-integer problem (``n = 0``) it is zero by convention.
    """
    if prob.n == 0:
        return 0.0
    g = prob.grad(p)
    moved = project_box(p.x - g, prob.box.lx, prob.box.ux)
    return float(np.max(np.abs(moved - p.x)))


@dataclass
class SolverConfig:
    """Tunable knobs shared by the solvers.

    Attributes
    ----------
    gamma : sufficient-decrease coefficient of both line searches.
    delta : backtracking / expansion factor of the continuous searches.
    eta : reduction factor applied to the discrete threshold ``xi`` and to
        the derivative-free continuous stepsize on failure.
    xi0 : initial discrete sufficient-decrease threshold.
    alpha0_c : initial continuous stepsize.
    eps_stat : stationarity residual tolerance of the gradient-based solver.
    max_discrete_dirs : cap on the primitive direction set.
    p_steps : continuous engine steps per outer iteration in "+" mode;
        ``None`` applies the rule ``ceil((n + m) / 10)``.
    budget_seconds : wall-clock budget, checked once per outer iteration.
    max_weighted_evals : budget on ``n_f + gradient_weight * n_g``.
    gradient_weight : weight of one gradient call in the evaluation budget.
    engine : continuous direction engine, one of ``lbfgsb``, ``pg``, ``fw``.
    xi_min : threshold floor entering the self-stop test.
    alpha_c_min : stepsize floor entering the derivative-free self-stop test.
    max_backtracks : halving cap of the monotone line search.
    cache : enable the per-problem evaluation cache.
    """

    gamma: float = 1e-4
    delta: float = 0.5
    eta: float = 0.5
    xi0: float = 1.0
    alpha0_c: float = 1.0
    eps_stat: float = 1e-7
    max_discrete_dirs: int = 300
    p_steps: int | None = None
    budget_seconds: float | None = None
    max_weighted_evals: float | None = None
    gradient_weight: float = 1.0
    engine: str = "lbfgsb"
    xi_min: float = 1e-6
    alpha_c_min: float = 1e-8
    max_backtracks: int = 50
    cache: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must lie in (0, 1)")
        if self.xi0 <= 0.0:
            raise ValueError("xi0 must be positive")
        if self.alpha0_c <= 0.0:
            raise ValueError("alpha0_c must be positive")
        if self.eps_stat <= 0.0:
            raise ValueError("eps_stat must be positive")
        if self.max_discrete_dirs < 2:
            raise ValueError("max_discrete_dirs must be at least 2")
        if self.p_steps is not None and self.p_steps < 1:
            raise ValueError("p_steps must be a positive integer or None")
        if self.budget_seconds is not None and self.budget_seconds <= 0.0:
            raise ValueError("budget_seconds must be positive or None")
        if self.max_weighted_evals is not None and self.max_weighted_evals <= 0.0:
            raise ValueError("max_weighted_evals must be positive or None")
        if self.gradient_weight < 0.0:
            raise ValueError("gradient_weight must be nonnegative")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.xi_min <= 0.0:
            raise ValueError("xi_min must be positive")
        if self.alpha_c_min < 0.0:
            raise ValueError("alpha_c_min must be nonnegative")
        if self.max_backtracks < 1:
            raise ValueError("max_backtracks must be a positive integer")

    def resolve_p_steps(self, n_total: int) -> int:
        if self.p_steps is not None:
            return self.p_steps
        return max(1, int(np.ceil(n_total / 10)))
