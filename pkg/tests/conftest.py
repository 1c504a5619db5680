"""Shared builders for solver tests."""

from __future__ import annotations

import numpy as np

from mixsearch.core import Box, MixedPoint, Problem


def separable_quadratic(
    a: np.ndarray,
    c: np.ndarray,
    b: np.ndarray,
    d: np.ndarray,
    lx: float = -10.0,
    ux: float = 10.0,
    lz: int = -10,
    uz: int = 10,
    name: str = "sepquad",
    cache: bool = True,
) -> Problem:
    """f(x, z) = sum a_i (x_i - c_i)^2 + sum b_j (z_j - d_j)^2."""
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    d = np.asarray(d, dtype=float)
    box = Box(
        np.full(a.size, lx),
        np.full(a.size, ux),
        np.full(b.size, lz, dtype=np.int64),
        np.full(b.size, uz, dtype=np.int64),
    )

    def objective(x: np.ndarray, z: np.ndarray) -> float:
        return float(np.sum(a * (x - c) ** 2) + np.sum(b * (z - d) ** 2))

    def gradient(x: np.ndarray, z: np.ndarray) -> np.ndarray:
        return 2.0 * a * (x - c)

    return Problem(box, objective, gradient, name=name, cache=cache)


def box_quadratic(
    A: np.ndarray,
    b: np.ndarray,
    lx: np.ndarray,
    ux: np.ndarray,
    name: str = "boxquad",
) -> Problem:
    """f(x, z) = 0.5 x.A.x + b.x with a single pinned integer variable."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = b.size
    box = Box(lx, ux, np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64))

    def objective(x: np.ndarray, z: np.ndarray) -> float:
        return float(0.5 * x @ A @ x + b @ x)

    def gradient(x: np.ndarray, z: np.ndarray) -> np.ndarray:
        return A @ x + b

    return Problem(box, objective, gradient, name=name)


def random_psd_quadratic(rng: np.random.Generator, n: int, spread: float = 3.0):
    """Random positive-definite quadratic with a box around the origin."""
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    eigs = rng.uniform(0.5, 5.0, size=n)
    A = q @ np.diag(eigs) @ q.T
    b = rng.normal(size=n)
    lx = rng.uniform(-spread, -0.5, size=n)
    ux = rng.uniform(0.5, spread, size=n)
    return A, b, lx, ux


def pinned_point(x: np.ndarray) -> MixedPoint:
    """Mixed point for problems with a single pinned integer variable."""
    return MixedPoint(np.asarray(x, dtype=float), np.zeros(1, dtype=np.int64))
