"""Low-discrepancy sequences and primitive integer direction generation.

The continuous solvers draw dense unit directions from a Sobol sequence;
the discrete search explores the integer block along primitive directions
(integer vectors whose components have no common factor) produced by
mapping Halton points onto integer shells of growing radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.stats import qmc as _qmc

__all__ = [
    "DirectionsExhausted",
    "PrimitiveDirectionGenerator",
    "PrimitiveSet",
    "SobolCursor",
    "dense_unit_direction",
    "halton",
    "initial_direction_set",
    "is_primitive",
    "next_primitive_direction",
    "sobol_point",
]

_DEGENERATE_NORM = 1e-12
_REJECTIONS_PER_RADIUS = 64


class DirectionsExhausted(RuntimeError):
    """No primitive direction outside the existing set remains (only m = 1)."""


@lru_cache(maxsize=None)
def _first_primes(k: int) -> tuple[int, ...]:
    """First ``k`` primes by trial division against the primes found so far."""
    primes: list[int] = []
    candidate = 2
    while len(primes) < k:
        if all(candidate % p for p in primes):
            primes.append(candidate)
        candidate += 1
    return tuple(primes)


def halton(index: int, base: int) -> float:
    """Radical-inverse value of ``index`` in the given base.

    ``halton(0, b) == 0.0``; for ``base == 2`` the sequence runs
    1/2, 1/4, 3/4, 1/8, 5/8, ...
    """
    if index < 0:
        raise ValueError("index must be nonnegative")
    if base < 2:
        raise ValueError("base must be at least 2")
    value = 0.0
    scale = 1.0
    i = index
    while i > 0:
        scale /= base
        i, digit = divmod(i, base)
        value += digit * scale
    return value


def sobol_point(index: int, dim: int) -> np.ndarray:
    """Point ``index`` of the unscrambled ``dim``-dimensional Sobol sequence.

    Index 0 is the all-zeros point.  Backed by the direction numbers
    shipped with scipy (Joe and Kuo table).
    """
    if index < 0:
        raise ValueError("index must be nonnegative")
    if dim < 1:
        raise ValueError("dim must be at least 1")
    engine = _qmc.Sobol(d=dim, scramble=False)
    if index > 0:
        engine.fast_forward(index)
    return engine.random(1)[0]


class SobolCursor:
    """Sequential reader over the Sobol sequence starting at ``start_index``."""

    def __init__(self, dim: int, start_index: int = 1) -> None:
        if dim < 1:
            raise ValueError("dim must be at least 1")
        if start_index < 0:
            raise ValueError("start_index must be nonnegative")
        self.dim = dim
        self.index = start_index
        self._engine = _qmc.Sobol(d=dim, scramble=False)
        if start_index > 0:
            self._engine.fast_forward(start_index)

    def next_point(self) -> np.ndarray:
        point = self._engine.random(1)[0]
        self.index += 1
        return point

    def next_unit_direction(self) -> np.ndarray:
        """Next dense unit direction, skipping near-zero raw vectors."""
        while True:
            w = 2.0 * self.next_point() - 1.0
            norm = float(np.linalg.norm(w))
            if norm >= _DEGENERATE_NORM:
                return w / norm


def dense_unit_direction(index: int, n: int) -> np.ndarray:
    """Unit vector obtained by centering Sobol point ``index`` and
    normalizing; indices with near-zero raw norm are skipped forward."""
    cursor = SobolCursor(n, start_index=index)
    return cursor.next_unit_direction()


def is_primitive(d: np.ndarray) -> bool:
    """True for a nonzero integer vector whose components' absolute values
    have greatest common divisor one."""
    arr = np.asarray(d)
    if arr.size == 0 or not np.issubdtype(arr.dtype, np.integer):
        return False
    if not np.any(arr):
        return False
    return int(np.gcd.reduce(np.abs(arr))) == 1


@dataclass
class PrimitiveDirectionGenerator:
    """Streaming source of fresh primitive directions for an ``m``-dim block.

    Halton points (one base per coordinate, first ``m`` primes) are mapped
    to ``[-1, 1]^m``, scaled by the current radius, rounded, and reduced by
    their gcd.  Candidates that are zero or already known are rejected; the
    radius doubles after 64 consecutive rejections so the stream never
    stalls.  The Halton index starts at ``1 + seed``.
    """

    m: int
    seed: int = 0
    radius: int = 1
    index: int = field(init=False)
    rejections: int = field(default=0, init=False)
    exhausted: bool = field(default=False, init=False)

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        self.index = 1 + self.seed
        self._bases = _first_primes(self.m)

    def next_direction(self, existing: set[tuple[int, ...]]) -> np.ndarray:
        if self.exhausted:
            raise DirectionsExhausted(f"no new primitive directions for m={self.m}")
        if self.m == 1 and {(1,), (-1,)} <= existing:
            self.exhausted = True
            raise DirectionsExhausted("both unit directions already present (m=1)")
        while True:
            u = np.array([halton(self.index, b) for b in self._bases])
            self.index += 1
            cand = np.round(self.radius * (2.0 * u - 1.0)).astype(np.int64)
            ok = np.any(cand)
            if ok:
                g = int(np.gcd.reduce(np.abs(cand)))
                cand = cand // g
                ok = tuple(int(c) for c in cand) not in existing
            if ok:
                self.rejections = 0
                return cand
            self.rejections += 1
            if self.rejections >= _REJECTIONS_PER_RADIUS:
                self.radius *= 2
                self.rejections = 0


def next_primitive_direction(
    gen: PrimitiveDirectionGenerator, existing: set[tuple[int, ...]]
) -> np.ndarray:
    """Draw the next primitive direction not yet in ``existing``."""
    return gen.next_direction(existing)


class PrimitiveSet:
    """Ordered primitive direction set with per-direction stepsize memory
    and the shared sufficient-decrease threshold ``xi``.

    The set only ever grows (never beyond ``cap``) and existing entries are
    never reordered, so stepsize memories stay aligned with directions.
    """

    def __init__(
        self,
        m: int,
        cap: int,
        xi0: float = 1.0,
        seed: int = 0,
        generator: PrimitiveDirectionGenerator | None = None,
    ) -> None:
        if cap < 1:
            raise ValueError("cap must be at least 1")
        if xi0 <= 0:
            raise ValueError("xi0 must be positive")
        self.m = m
        self.cap = cap
        self.xi = float(xi0)
        self.gen = generator or PrimitiveDirectionGenerator(m, seed=seed)
        self.dirs: list[np.ndarray] = []
        self.alphas: list[int] = []
        self._keys: set[tuple[int, ...]] = set()

    def __len__(self) -> int:
        return len(self.dirs)

    def keys(self) -> set[tuple[int, ...]]:
        return set(self._keys)

    def add(self, d: np.ndarray, alpha: int = 1) -> bool:
        """Append one direction with a fresh stepsize memory; rejects
        non-primitive vectors and silently skips duplicates or overflow."""
        d = np.asarray(d, dtype=np.int64)
        if not is_primitive(d):
            raise ValueError(f"direction {d!r} is not primitive")
        key = tuple(int(c) for c in d)
        if key in self._keys or len(self.dirs) >= self.cap:
            return False
        self.dirs.append(d.copy())
        self.alphas.append(int(alpha))
        self._keys.add(key)
        return True

    def enrich(self, batch: int = 2) -> int:
        """Try to append ``batch`` fresh generator directions (memory 1 each).

        Returns the number actually added; stops early at the cap or when
        the generator is exhausted.
        """
        added = 0
        while added < batch and len(self.dirs) < self.cap:
            try:
                d = self.gen.next_direction(self._keys)
            except DirectionsExhausted:
                break
            if self.add(d):
                added += 1
        return added

    @property
    def saturated(self) -> bool:
        """No further growth is possible."""
        return len(self.dirs) >= self.cap or self.gen.exhausted

    def all_memories_one(self) -> bool:
        return all(a == 1 for a in self.alphas)


def initial_direction_set(
    m: int, cap: int, xi0: float = 1.0, seed: int = 0
) -> PrimitiveSet:
    """Coordinate direction set ``+e_1, -e_1, ..., +e_m, -e_m`` truncated to
    ``cap``, every stepsize memory at 1."""
    dset = PrimitiveSet(m, cap, xi0=xi0, seed=seed)
    for i in range(m):
        for sign in (1, -1):
            e = np.zeros(m, dtype=np.int64)
            e[i] = sign
            if len(dset) >= cap:
                return dset
            dset.add(e)
    return dset
