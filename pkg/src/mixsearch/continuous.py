"""Continuous-block line searches and bound-constrained direction engines.

Two line searches live here: an Armijo backtracking search for gradient
engines and a derivative-free search with expansion used when gradients
are unavailable.  Direction engines (projected gradient, vertex step,
limited-memory quasi-Newton) all return feasible steps ``v`` such that
``x + v`` stays in the box.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import MixedPoint, Problem, project_box, stationarity_residual

__all__ = [
    "LbfgsMemory",
    "LineSearchResult",
    "armijo_backtrack",
    "df_linesearch_continuous",
    "fw_direction",
    "lbfgsb_direction",
    "lbfgsb_run",
    "pg_direction",
]

# Free-variable count above which the subspace step switches from a dense
# solve to conjugate gradients.
DIRECT_SOLVE_MAX_FREE = 200
_CG_MAX_ITER = 50
_WOLFE_C2 = 0.9
_CURVATURE_RTOL = 1e-10


@dataclass(frozen=True)
class LineSearchResult:
    """Outcome of one line search call.

    ``alpha`` is the accepted stepsize on success and the reduced stepsize
    to carry forward on failure (0 for the Armijo search).  ``x_new`` equals
    the starting block when no point was accepted.
    """

    success: bool
    alpha: float
    x_new: np.ndarray
    f_new: float
    n_trials: int
    rho: int = 0


def armijo_backtrack(
    prob: Problem,
    p: MixedPoint,
    v: np.ndarray,
    gamma: float,
    delta: float,
    alpha0: float = 1.0,
    max_backtracks: int = 50,
) -> LineSearchResult:
    """Monotone backtracking search along a descent direction ``v``.

    Tries ``alpha0 * delta**h`` for h = 0, 1, ... and accepts the first
    stepsize with ``f(x + alpha v, z) <= f(x, z) + gamma * alpha * g.v``.
    Requires ``g.v < 0``; when every trial fails the result reports
    ``success=False`` with ``alpha=0`` and the caller treats the step as
    null for this iteration.
    """
    v = np.asarray(v, dtype=float)
    g = prob.grad(p)
    slope = float(g @ v)
    if slope >= 0.0:
        raise ValueError(f"armijo_backtrack needs a descent direction, got g.v={slope}")
    f0 = prob.f(p)
    lx, ux = prob.box.lx, prob.box.ux
    alpha = float(alpha0)
    for h in range(max_backtracks):
        # x + alpha v is feasible in exact arithmetic for engine steps
        # (v = x_hat - x with x_hat in the box); the clip only absorbs
        # floating-point drift.
        x_trial = project_box(p.x + alpha * v, lx, ux)
        f_trial = prob.f(p.with_x(x_trial))
        if f_trial <= f0 + gamma * alpha * slope:
            return LineSearchResult(True, alpha, x_trial, f_trial, h + 1)
        alpha *= delta
    return LineSearchResult(False, 0.0, p.x.copy(), f0, max_backtracks)


def df_linesearch_continuous(
    prob: Problem,
    p: MixedPoint,
    v: np.ndarray,
    alpha_c: float,
    gamma: float,
    delta: float,
    eta: float,
) -> LineSearchResult:
    """Derivative-free continuous search along a unit direction and its
    negation, with projected trials and stepsize expansion.

    A trial at stepsize ``a`` succeeds when
    ``f(proj(x + rho a v), z) <= f(x, z) - gamma a**2``.  The positive
    orientation is tried first, then the negative; on success the stepsize
    expands by ``1/delta`` while the test keeps holding and the last
    accepted trial is returned.  On failure of both orientations the
    carried stepsize contracts to ``eta * alpha_c`` and ``x`` is unchanged.
    """
    if alpha_c <= 0.0:
        raise ValueError("alpha_c must be positive")
    v = np.asarray(v, dtype=float)
    f0 = prob.f(p)
    lx, ux = prob.box.lx, prob.box.ux
    trials = 0
    for rho in (1, -1):
        x_trial = project_box(p.x + rho * alpha_c * v, lx, ux)
        f_trial = prob.f(p.with_x(x_trial))
        trials += 1
        if f_trial > f0 - gamma * alpha_c**2:
            continue
        alpha, x_best, f_best = alpha_c, x_trial, f_trial
        while True:
            alpha_next = alpha / delta
            x_next = project_box(p.x + rho * alpha_next * v, lx, ux)
            f_next = prob.f(p.with_x(x_next))
            trials += 1
            if f_next <= f0 - gamma * alpha_next**2:
                alpha, x_best, f_best = alpha_next, x_next, f_next
            else:
                break
        return LineSearchResult(True, alpha, x_best, f_best, trials, rho=rho)
    return LineSearchResult(False, eta * alpha_c, p.x.copy(), f0, trials)


def pg_direction(prob: Problem, p: MixedPoint, step_s: float = 1.0) -> np.ndarray:
    """Projected-gradient step ``proj(x - s g) - x``; zero exactly at
    box-stationary points."""
    if step_s <= 0.0:
        raise ValueError("step_s must be positive")
    g = prob.grad(p)
    return project_box(p.x - step_s * g, prob.box.lx, prob.box.ux) - p.x


def fw_direction(prob: Problem, p: MixedPoint) -> np.ndarray:
    """Step towards the box vertex minimizing the linearized objective:
    componentwise ``lx`` where the gradient is positive, ``ux`` where it is
    negative, unchanged where it vanishes."""
    g = prob.grad(p)
    target = np.where(g > 0.0, prob.box.lx, np.where(g < 0.0, prob.box.ux, p.x))
    return target - p.x


class LbfgsMemory:
    """Curvature-pair store backing the limited-memory quadratic model.

    Holds up to ``max_pairs`` (s, y) pairs in insertion order and the scale
    ``gamma_b`` of the base matrix ``gamma_b * I``; the model Hessian is the
    compact-form update of the base by the stored pairs.  Pairs whose
    curvature ``s.y`` does not clear ``1e-10 * ||s|| ||y||`` are refused.
    """

    def __init__(self, max_pairs: int = 10) -> None:
        if max_pairs < 1:
            raise ValueError("max_pairs must be at least 1")
        self.max_pairs = max_pairs
        self.s_list: list[np.ndarray] = []
        self.y_list: list[np.ndarray] = []
        self.gamma_b = 1.0
        self._factor = None

    @property
    def empty(self) -> bool:
        return not self.s_list

    def __len__(self) -> int:
        return len(self.s_list)

    def push(self, s: np.ndarray, y: np.ndarray) -> bool:
        """Store one displacement/gradient-change pair if its curvature is
        numerically safe; update ``gamma_b = y.y / s.y`` on success."""
        s = np.asarray(s, dtype=float)
        y = np.asarray(y, dtype=float)
        sy = float(s @ y)
        if sy <= _CURVATURE_RTOL * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            return False
        if len(self.s_list) >= self.max_pairs:
            self.s_list.pop(0)
            self.y_list.pop(0)
        self.s_list.append(s.copy())
        self.y_list.append(y.copy())
        self.gamma_b = float(y @ y) / sy
        self._factor = None
        return True

    def _middle(self):
        """LU factorization of the compact-form middle matrix, cached until
        the next push."""
        if self._factor is None:
            from scipy.linalg import lu_factor

            S = np.column_stack(self.s_list)
            Y = np.column_stack(self.y_list)
            k = S.shape[1]
            sty = S.T @ Y
            d = np.diag(np.diag(sty))
            ell = np.tril(sty, k=-1)
            gamma = self.gamma_b
            middle = np.block([[-d, ell.T], [ell, gamma * (S.T @ S)]])
            w = np.hstack([Y, gamma * S])
            self._factor = (w, lu_factor(middle))
        return self._factor

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """Model Hessian times a vector, O(n * pairs)."""
        v = np.asarray(v, dtype=float)
        if self.empty:
            return self.gamma_b * v
        from scipy.linalg import lu_solve

        w, factor = self._middle()
        return self.gamma_b * v - w @ lu_solve(factor, w.T @ v)


def _cauchy_point(
    x: np.ndarray,
    g: np.ndarray,
    lx: np.ndarray,
    ux: np.ndarray,
    matvec,
) -> np.ndarray:
    """First local minimizer of the quadratic model along the projected
    steepest-descent path."""
    n = x.size
    t_break = np.full(n, np.inf)
    pos = g > 0.0
    neg = g < 0.0
    # Tiny gradient components overflow to inf, which already means "this
    # coordinate never reaches its bound".
    with np.errstate(over="ignore"):
        t_break[pos] = (x[pos] - lx[pos]) / g[pos]
        t_break[neg] = (x[neg] - ux[neg]) / g[neg]
    d = np.where(t_break > 0.0, -g, 0.0)
    p_cur = x.astype(float).copy()
    # Components at a bound with the gradient pushing outward never move.
    at_bound = t_break <= 0.0
    t_old = 0.0
    order = np.argsort(t_break)
    breakpoints = [(float(t_break[i]), int(i)) for i in order if np.isfinite(t_break[i]) and t_break[i] > 0.0]
    pos_idx = 0
    while True:
        if not np.any(d):
            return p_cur
        bd = matvec(d)
        f1 = float(g @ d + (p_cur - x) @ bd)
        if f1 >= 0.0:
            return p_cur
        f2 = float(d @ bd)
        dt_star = -f1 / f2 if f2 > 0.0 else np.inf
        # Next breakpoint strictly beyond the current segment start.
        t_next = np.inf
        while pos_idx < len(breakpoints) and breakpoints[pos_idx][0] <= t_old:
            pos_idx += 1
        if pos_idx < len(breakpoints):
            t_next = breakpoints[pos_idx][0]
        if t_old + dt_star < t_next:
            p_cur = p_cur + dt_star * d
            return p_cur
        if not np.isfinite(t_next):
            return p_cur
        p_cur = p_cur + (t_next - t_old) * d
        j = pos_idx
        while j < len(breakpoints) and breakpoints[j][0] == t_next:
            i = breakpoints[j][1]
            p_cur[i] = lx[i] if g[i] > 0.0 else ux[i]
            d[i] = 0.0
            at_bound[i] = True
            j += 1
        pos_idx = j
        t_old = t_next


def _cg_solve(matvec, b: np.ndarray, max_iter: int, rtol: float) -> np.ndarray:
    """Plain conjugate gradients; the model Hessian is identity plus a
    low-rank correction, so far fewer iterations than ``max_iter`` suffice."""
    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rs = float(r @ r)
    b_norm = float(np.linalg.norm(b))
    for _ in range(max_iter):
        if np.sqrt(rs) <= rtol * max(b_norm, 1e-300):
            break
        ap = matvec(p)
        pap = float(p @ ap)
        if pap <= 0.0:
            break
        step = rs / pap
        x += step * p
        r -= step * ap
        rs_new = float(r @ r)
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x


def lbfgsb_direction(prob: Problem, p: MixedPoint, mem: LbfgsMemory) -> np.ndarray:
    """Feasible quasi-Newton step: generalized Cauchy point of the
    limited-memory model along the projected-gradient path, then a
    minimization over the free variables, truncated to the box.

    With an empty memory the model Hessian is ``gamma_b * I`` and the step
    reduces to ``proj(x - (1 / gamma_b) g) - x``.  Any non-finite model
    quantity falls back to ``pg_direction`` with stepsize ``1 / gamma_b``.
    """
    g = prob.grad(p)
    x = p.x
    lx, ux = prob.box.lx, prob.box.ux
    try:
        p_cp = _cauchy_point(x, g, lx, ux, mem.matvec)
        free = (p_cp > lx) & (p_cp < ux)
        if np.any(free):
            r = g + mem.matvec(p_cp - x)
            r_free = r[free]
            if mem.empty:
                d_free = -r_free / mem.gamma_b
            else:
                w, factor = mem._middle()
                w_free = w[free, :]

                def sub_matvec(v: np.ndarray) -> np.ndarray:
                    from scipy.linalg import lu_solve

                    return mem.gamma_b * v - w_free @ lu_solve(factor, w_free.T @ v)

                if int(np.count_nonzero(free)) <= DIRECT_SOLVE_MAX_FREE:
                    from scipy.linalg import lu_solve

                    corr = lu_solve(factor, w_free.T)
                    b_sub = mem.gamma_b * np.eye(w_free.shape[0]) - w_free @ corr
                    b_sub = 0.5 * (b_sub + b_sub.T)
                    d_free = np.linalg.solve(b_sub, -r_free)
                else:
                    d_free = _cg_solve(sub_matvec, -r_free, _CG_MAX_ITER, 1e-10)
            # Largest theta in [0, 1] keeping p_cp + theta d inside the box.
            theta = 1.0
            base = p_cp[free]
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                up = (ux[free] - base) / d_free
                lo = (lx[free] - base) / d_free
            limits = np.where(d_free > 0.0, up, np.where(d_free < 0.0, lo, np.inf))
            if limits.size:
                theta = min(1.0, float(np.min(limits)))
            theta = max(theta, 0.0)
            x_hat = p_cp.copy()
            x_hat[free] = np.clip(base + theta * d_free, lx[free], ux[free])
        else:
            x_hat = p_cp
        x_hat = np.clip(x_hat, lx, ux)
        v = x_hat - x
        if not np.all(np.isfinite(v)):
            raise FloatingPointError("non-finite quasi-Newton step")
        return v
    except (np.linalg.LinAlgError, FloatingPointError, ValueError):
        return pg_direction(prob, p, 1.0 / mem.gamma_b)


def lbfgsb_run(
    prob: Problem,
    p: MixedPoint,
    steps: int,
    eps_stat: float,
    gamma: float = 1e-4,
    delta: float = 0.5,
    alpha0: float = 1.0,
    max_backtracks: int = 50,
    mem: LbfgsMemory | None = None,
) -> MixedPoint:
    """Up to ``steps`` Armijo-accepted quasi-Newton steps at fixed ``z``.

    Exits early at a point whose projected-gradient residual is at most
    ``eps_stat``, on a null or non-descent direction, or when the line
    search fails.  The objective is nonincreasing across accepted steps.
    An existing memory can be threaded in and keeps being updated in place.
    """
    if mem is None:
        mem = LbfgsMemory()
    cur = p
    for _ in range(max(0, steps)):
        if prob.n == 0 or stationarity_residual(prob, cur) <= eps_stat:
            break
        g = prob.grad(cur)
        v = lbfgsb_direction(prob, cur, mem)
        slope = float(g @ v)
        if not np.any(v) or slope >= 0.0:
            break
        ls = armijo_backtrack(prob, cur, v, gamma, delta, alpha0, max_backtracks)
        if not ls.success:
            break
        nxt = cur.with_x(ls.x_new)
        g_new = prob.grad(nxt)
        if float(g_new @ v) >= _WOLFE_C2 * slope:
            mem.push(ls.x_new - cur.x, g_new - g)
        cur = nxt
    return cur
