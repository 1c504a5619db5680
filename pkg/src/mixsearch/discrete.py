"""Discrete search over the integer block along primitive directions.

One call sweeps the direction set in order.  The first direction whose
memory-seeded trial clears the sufficient-decrease threshold ``xi`` is
expanded by doubling and the sweep stops there; directions that fail have
their stepsize memory halved.  Only when a full sweep fails with every
memory already at 1 is ``xi`` reduced and the set enriched with fresh
primitive directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MixedPoint, Problem
from .qmc import PrimitiveSet

__all__ = ["DsOutcome", "discrete_search", "max_feasible_step"]

ENRICH_BATCH = 2


@dataclass(frozen=True)
class DsOutcome:
    """Result of one discrete-search sweep.

    ``point`` is the first accepted trial (or the input point when the
    sweep failed), ``dirs`` the direction set updated in place,
    ``xi_reduced`` marks the failed-sweep path that shrank ``xi``, and
    ``grew`` counts directions added by enrichment on that path.
    """

    point: MixedPoint
    f: float
    dirs: PrimitiveSet
    improved: bool
    xi_reduced: bool
    grew: int = 0


def max_feasible_step(z: np.ndarray, d: np.ndarray, lz: np.ndarray, uz: np.ndarray) -> int:
    """Largest integer ``a >= 0`` with ``lz <= z + a d <= uz``.

    ``z`` must already be feasible; primitive ``d`` guarantees every
    feasible step along it is an integer multiple of ``d``.
    """
    caps = []
    for zi, di, lo, hi in zip(z, d, lz, uz):
        if di > 0:
            caps.append((int(hi) - int(zi)) // int(di))
        elif di < 0:
            caps.append((int(lo) - int(zi)) // int(di))
    if not caps:
        raise ValueError("direction must be nonzero")
    return max(0, min(caps))


def discrete_search(
    prob: Problem,
    p: MixedPoint,
    dirs: PrimitiveSet,
    eta: float,
    enrich_batch: int = ENRICH_BATCH,
) -> DsOutcome:
    """One sweep of the integer block from ``p`` along ``dirs``.

    Per direction the initial stepsize is the smaller of its memory and the
    largest feasible step; directions with no feasible step are skipped
    without touching their memory.  A trial succeeds when it improves the
    objective by at least ``dirs.xi``; successful steps double while the
    test keeps holding, the final stepsize is stored as that direction's
    memory, and the sweep returns immediately.  After a failed sweep with
    every memory at 1, ``xi`` shrinks by ``eta`` and the set is enriched.
    """
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    lz, uz = prob.box.lz, prob.box.uz
    f0 = prob.f(p)
    for j, d in enumerate(dirs.dirs):
        a_max = max_feasible_step(p.z, d, lz, uz)
        a_ini = min(dirs.alphas[j], a_max)
        if a_ini <= 0:
            continue
        trial = p.with_z(p.z + a_ini * d)
        f_trial = prob.f(trial)
        if f_trial <= f0 - dirs.xi:
            alpha, best, f_best = a_ini, trial, f_trial
            h = 1
            while True:
                a_next = (2**h) * a_ini
                if a_next > a_max:
                    break
                cand = p.with_z(p.z + a_next * d)
                f_cand = prob.f(cand)
                if f_cand <= f0 - dirs.xi:
                    alpha, best, f_best = a_next, cand, f_cand
                    h += 1
                else:
                    break
            dirs.alphas[j] = int(alpha)
            return DsOutcome(best, f_best, dirs, improved=True, xi_reduced=False)
        dirs.alphas[j] = max(1, dirs.alphas[j] // 2)
    if not dirs.all_memories_one():
        return DsOutcome(p, f0, dirs, improved=False, xi_reduced=False)
    dirs.xi = eta * dirs.xi
    grew = dirs.enrich(enrich_batch)
    return DsOutcome(p, f0, dirs, improved=False, xi_reduced=True, grew=grew)
