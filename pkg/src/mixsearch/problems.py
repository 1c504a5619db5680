"""Native test problems and the benchmark configuration grid.

Every problem is defined over ``N`` variables by a full-vector objective
``F(y)`` with an analytic gradient; the mixed version fixes the last ``m``
variables to integers, so ``f(x, z) = F([x, z])`` and the gradient oracle
returns the first ``n = N - m`` components of ``grad F``.  Integer bounds
are the tightest integers inside the documented real bounds.

Sources: rastrigin, ackley and dixon-price are the classic global
optimization test functions; the remaining entries follow the
bound-constrained problems of the CUTE collection (AMPL model forms).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import Box, Problem

__all__ = [
    "CANONICAL_NAMES",
    "ProblemSpec",
    "TABLE1_SHAPES",
    "available_problems",
    "config_grid",
    "make_problem",
    "register_problem",
]


@dataclass(frozen=True)
class ProblemSpec:
    """One benchmark instance: problem name, total variables ``N`` and
    integer-variable count ``m`` (the last ``m`` variables)."""

    name: str
    N: int
    m: int
    two_percent: bool = False

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if not 1 <= self.m <= self.N:
            raise ValueError("m must satisfy 1 <= m <= N")

    @property
    def instance(self) -> str:
        return f"{self.name}_N{self.N}_m{self.m}"


@dataclass(frozen=True)
class ProblemDef:
    name: str
    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    lower: float
    upper: float
    known_min: float | None = None
    note: str = ""


_REGISTRY: dict[str, ProblemDef] = {}


def register_problem(definition: ProblemDef) -> None:
    """Add a problem to the registry (plugin hook for external problems)."""
    if definition.name in _REGISTRY:
        raise ValueError(f"problem {definition.name!r} is already registered")
    _REGISTRY[definition.name] = definition


def available_problems() -> list[str]:
    return sorted(_REGISTRY)


# --- objective definitions -------------------------------------------------


def _rastrigin(y: np.ndarray) -> float:
    # 10 N + sum(y_i^2 - 10 cos(2 pi y_i)); global minimum 0 at the origin.
    return 10.0 * y.size + float(np.sum(y**2 - 10.0 * np.cos(2.0 * np.pi * y)))


def _rastrigin_grad(y: np.ndarray) -> np.ndarray:
    return 2.0 * y + 20.0 * np.pi * np.sin(2.0 * np.pi * y)


def _ackley(y: np.ndarray) -> float:
    # -20 exp(-0.2 sqrt(mean(y^2))) - exp(mean(cos(2 pi y))) + 20 + e
    ss = float(np.mean(y**2))
    cc = float(np.mean(np.cos(2.0 * np.pi * y)))
    return -20.0 * np.exp(-0.2 * np.sqrt(ss)) - np.exp(cc) + 20.0 + np.e


def _ackley_grad(y: np.ndarray) -> np.ndarray:
    n = y.size
    ss = float(np.sum(y**2))
    cc = float(np.mean(np.cos(2.0 * np.pi * y)))
    g = (2.0 * np.pi / n) * np.sin(2.0 * np.pi * y) * np.exp(cc)
    if ss > 0.0:
        g = g + 4.0 * y * np.exp(-0.2 * np.sqrt(ss / n)) / np.sqrt(n * ss)
    return g


def _dixon_price(y: np.ndarray) -> float:
    # (y_1 - 1)^2 + sum_{i>=2} i (2 y_i^2 - y_{i-1})^2
    total = (y[0] - 1.0) ** 2
    if y.size > 1:
        i = np.arange(2, y.size + 1, dtype=float)
        total += float(np.sum(i * (2.0 * y[1:] ** 2 - y[:-1]) ** 2))
    return float(total)


def _dixon_price_grad(y: np.ndarray) -> np.ndarray:
    g = np.zeros_like(y)
    g[0] = 2.0 * (y[0] - 1.0)
    if y.size > 1:
        i = np.arange(2, y.size + 1, dtype=float)
        t = 2.0 * y[1:] ** 2 - y[:-1]
        g[1:] += 8.0 * i * y[1:] * t
        g[:-1] += -2.0 * i * t
    return g


def _mccormck(y: np.ndarray) -> float:
    # sum_{i>=2} [-1.5 y_{i-1} + 2.5 y_i + 1 + (y_{i-1} - y_i)^2
    #             + sin(y_{i-1} + y_i)]      (CUTE mccormck)
    a, b = y[:-1], y[1:]
    return float(np.sum(-1.5 * a + 2.5 * b + 1.0 + (a - b) ** 2 + np.sin(a + b)))


def _mccormck_grad(y: np.ndarray) -> np.ndarray:
    g = np.zeros_like(y)
    a, b = y[:-1], y[1:]
    cos_ab = np.cos(a + b)
    g[:-1] += -1.5 + 2.0 * (a - b) + cos_ab
    g[1:] += 2.5 - 2.0 * (a - b) + cos_ab
    return g


def _nonscomp(y: np.ndarray) -> float:
    # (y_1 - 1)^2 + sum_{i>=2} 4 (y_i - y_{i-1}^2)^2   (CUTE nonscomp)
    total = (y[0] - 1.0) ** 2
    if y.size > 1:
        total += float(np.sum(4.0 * (y[1:] - y[:-1] ** 2) ** 2))
    return float(total)


def _nonscomp_grad(y: np.ndarray) -> np.ndarray:
    g = np.zeros_like(y)
    g[0] = 2.0 * (y[0] - 1.0)
    if y.size > 1:
        t = y[1:] - y[:-1] ** 2
        g[1:] += 8.0 * t
        g[:-1] += -16.0 * y[:-1] * t
    return g


def _biggsb1(y: np.ndarray) -> float:
    # (y_1 - 1)^2 + sum_{i>=2} (y_i - y_{i-1})^2 + (1 - y_N)^2  (CUTE biggsb1)
    total = (y[0] - 1.0) ** 2 + (1.0 - y[-1]) ** 2
    if y.size > 1:
        total += float(np.sum((y[1:] - y[:-1]) ** 2))
    return float(total)


def _biggsb1_grad(y: np.ndarray) -> np.ndarray:
    g = np.zeros_like(y)
    g[0] += 2.0 * (y[0] - 1.0)
    g[-1] += 2.0 * (y[-1] - 1.0)
    if y.size > 1:
        t = y[1:] - y[:-1]
        g[1:] += 2.0 * t
        g[:-1] += -2.0 * t
    return g


def _cvxbqp1_indices(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    i = np.arange(1, n + 1)
    return i - 1, (2 * i - 1) % n, (3 * i - 1) % n


def _cvxbqp1(y: np.ndarray) -> float:
    # sum_i 0.5 i (y_i + y_{(2i-1 mod N)+1} + y_{(3i-1 mod N)+1})^2
    # (CUTE cvxbqp1, 1-based indexing)
    j0, j1, j2 = _cvxbqp1_indices(y.size)
    s = y[j0] + y[j1] + y[j2]
    i = np.arange(1, y.size + 1, dtype=float)
    return float(np.sum(0.5 * i * s**2))


def _cvxbqp1_grad(y: np.ndarray) -> np.ndarray:
    j0, j1, j2 = _cvxbqp1_indices(y.size)
    s = y[j0] + y[j1] + y[j2]
    i = np.arange(1, y.size + 1, dtype=float)
    w = i * s
    g = np.zeros_like(y)
    np.add.at(g, j0, w)
    np.add.at(g, j1, w)
    np.add.at(g, j2, w)
    return g


def _bdexp(y: np.ndarray) -> float:
    # sum_{i<=N-2} (y_i + y_{i+1}) exp(-y_{i+2} (y_i + y_{i+1}))  (CUTE bdexp)
    if y.size < 3:
        return 0.0
    u = y[:-2] + y[1:-1]
    w = y[2:]
    return float(np.sum(u * np.exp(-u * w)))


def _bdexp_grad(y: np.ndarray) -> np.ndarray:
    g = np.zeros_like(y)
    if y.size < 3:
        return g
    u = y[:-2] + y[1:-1]
    w = y[2:]
    e = np.exp(-u * w)
    duv = e * (1.0 - u * w)
    g[:-2] += duv
    g[1:-1] += duv
    g[2:] += -(u**2) * e
    return g


for _d in (
    ProblemDef("rastrigin", _rastrigin, _rastrigin_grad, -5.12, 5.12, known_min=0.0),
    ProblemDef("ackley", _ackley, _ackley_grad, -32.768, 32.768, known_min=0.0),
    ProblemDef("dixon-price", _dixon_price, _dixon_price_grad, -10.0, 10.0),
    ProblemDef("mccormck", _mccormck, _mccormck_grad, -1.5, 3.0),
    ProblemDef("nonscomp", _nonscomp, _nonscomp_grad, -100.0, 100.0, known_min=0.0),
    ProblemDef(
        "biggsb1",
        _biggsb1,
        _biggsb1_grad,
        0.0,
        0.9,
        note="upper bound clips the unconstrained minimizer; optimum on the boundary",
    ),
    ProblemDef("cvxbqp1", _cvxbqp1, _cvxbqp1_grad, 0.1, 10.0),
    ProblemDef(
        "bdexp",
        _bdexp,
        _bdexp_grad,
        0.0,
        10.0,
        known_min=0.0,
        note="source lists only the lower bound; a finite upper bound of 10 keeps the box compact",
    ),
):
    register_problem(_d)


def make_problem(spec: ProblemSpec | None = None, *, name: str | None = None,
                 N: int | None = None, m: int | None = None,
                 cache: bool = True) -> Problem:
    """Instantiate a registered problem with the last ``m`` of ``N``
    variables integer.  Integer bounds are ``ceil`` / ``floor`` of the real
    bounds, so the integer block can be pinned when the range is narrow."""
    if spec is None:
        if name is None or N is None or m is None:
            raise ValueError("pass a ProblemSpec or name, N and m")
        spec = ProblemSpec(name, N, m)
    if spec.name not in _REGISTRY:
        raise ValueError(
            f"unknown problem {spec.name!r}; available: {', '.join(available_problems())}"
        )
    d = _REGISTRY[spec.name]
    n = spec.N - spec.m
    lz = int(np.ceil(d.lower))
    uz = int(np.floor(d.upper))
    if lz > uz:
        raise ValueError(
            f"{spec.name}: no integers in [{d.lower}, {d.upper}] for the integer block"
        )
    box = Box(
        lx=np.full(n, d.lower),
        ux=np.full(n, d.upper),
        lz=np.full(spec.m, lz, dtype=np.int64),
        uz=np.full(spec.m, uz, dtype=np.int64),
    )

    def objective(x: np.ndarray, z: np.ndarray) -> float:
        return d.value(np.concatenate([x, z.astype(float)]))

    def gradient(x: np.ndarray, z: np.ndarray) -> np.ndarray:
        return d.grad(np.concatenate([x, z.astype(float)]))[:n]

    return Problem(box, objective, gradient, name=spec.instance, cache=cache)


# --- benchmark grid ---------------------------------------------------------

# (N, [m values]); an m equal to 2% of N is flagged in reports.
TABLE1_SHAPES: list[tuple[int, list[int]]] = [
    (100, [2, 5, 7, 10, 20, 40]),
    (200, [4]),
    (500, [10]),
    (1000, [2, 5, 10, 20, 50, 100]),
    (2000, [40]),
    (5000, [100]),
]

CANONICAL_NAMES = [
    "rastrigin",
    "ackley",
    "dixon-price",
    "bdexp",
    "biggsb1",
    "chenhark",
    "cvxbqp1",
    "explin",
    "explin2",
    "expquad",
    "mccormck",
    "ncvxbqp1",
    "ncvxbqp2",
    "ncvxbqp3",
    "nonscomp",
    "pentdi",
    "probpenl",
    "qudlin",
    "sineali",
]


def config_grid() -> list[ProblemSpec]:
    """Full benchmark grid (every canonical problem at every Table shape),
    filtered to the registered subset with one warning naming the rest."""
    missing = [p for p in CANONICAL_NAMES if p not in _REGISTRY]
    if missing:
        warnings.warn(
            f"skipping unregistered problems: {', '.join(missing)}",
            stacklevel=2,
        )
    specs: list[ProblemSpec] = []
    for name in CANONICAL_NAMES:
        if name not in _REGISTRY:
            continue
        for N, ms in TABLE1_SHAPES:
            for m in ms:
                specs.append(ProblemSpec(name, N, m, two_percent=(50 * m == N)))
    return specs
