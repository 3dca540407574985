"""Dense bounded-variable simplex for small assignment-style LPs.

Solves   max c^T x   s.t.  A x <= b,  0 <= x <= u
with b >= 0 componentwise, so the all-slack basis is feasible and a
single phase suffices.  Nonbasic variables sit at one of their bounds.
Entering variables are priced by steepest reduced cost (Dantzig) while
the iteration makes progress; after a run of degenerate pivots the rule
switches to Bland's smallest index, whose anti-cycling guarantee makes
termination certain on the highly degenerate assignment polytopes this
package produces.  The returned point is a basic feasible solution,
i.e. a vertex of the feasible polytope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Reduced-cost / pivot-element significance thresholds.
_RC_TOL = 1e-9
_PIV_TOL = 1e-11
# Largest bound violation tolerated in the final point before clipping.
_FEAS_TOL = 1e-7
# Degenerate pivots in a row before falling back to Bland's rule.
_STALL_LIMIT = 40


class SimplexError(RuntimeError):
    pass


@dataclass(frozen=True)
class LpSolution:
    x: np.ndarray
    objective: float
    iterations: int


def solve_lp_max(objective, a_ub, b_ub, upper, max_iter: int = 200_000) -> LpSolution:
    """Maximize objective @ x subject to a_ub @ x <= b_ub, 0 <= x <= upper."""
    c = np.asarray(objective, dtype=float)
    a = np.atleast_2d(np.asarray(a_ub, dtype=float))
    b = np.asarray(b_ub, dtype=float)
    ub_struct = np.asarray(upper, dtype=float)
    n = c.size
    m = b.size

    if n == 0:
        return LpSolution(x=np.zeros(0), objective=0.0, iterations=0)
    if a.shape != (m, n):
        raise ValueError(f"constraint matrix shape {a.shape} != ({m}, {n})")
    if np.any(b < 0):
        raise ValueError("b_ub must be >= 0 (all-zeros must be feasible)")
    if np.any(ub_struct <= 0) or not np.all(np.isfinite(ub_struct)):
        raise ValueError("upper bounds must be finite and > 0")
    if m == 0:
        x = np.where(c > 0, ub_struct, 0.0)
        return LpSolution(x=x, objective=float(c @ x), iterations=0)

    total = n + m
    tableau = np.hstack([a, np.eye(m)])
    values = b.astype(float).copy()  # current basic-variable values
    obj_row = np.concatenate([c, np.zeros(m)])  # reduced costs
    ub = np.concatenate([ub_struct, np.full(m, np.inf)])
    basis = np.arange(n, total)
    in_basis = np.zeros(total, dtype=bool)
    in_basis[basis] = True
    at_upper = np.zeros(total, dtype=bool)

    iterations = 0
    stall = 0
    while True:
        gain_low = (~in_basis) & (~at_upper) & (obj_row > _RC_TOL)
        gain_up = (~in_basis) & at_upper & (obj_row < -_RC_TOL)
        eligible = np.flatnonzero(gain_low | gain_up)
        if eligible.size == 0:
            break
        if iterations >= max_iter:
            raise SimplexError(f"simplex did not converge within {max_iter} pivots")
        iterations += 1

        if stall < _STALL_LIMIT:
            j = int(eligible[np.argmax(np.abs(obj_row[eligible]))])  # Dantzig
        else:
            j = int(eligible[0])  # Bland: smallest index enters
        sign = -1.0 if at_upper[j] else 1.0
        col = sign * tableau[:, j]

        # Ratio test: basic value i moves as values[i] - t * col[i].
        dec = col > _PIV_TOL  # basic value falls toward 0
        inc = (col < -_PIV_TOL) & np.isfinite(ub[basis])  # rises toward its bound
        ratios = np.full(m, np.inf)
        ratios[dec] = np.maximum(values[dec], 0.0) / col[dec]
        ratios[inc] = (ub[basis][inc] - values[inc]) / (-col[inc])
        r_min = float(ratios.min())
        t_flip = ub[j]  # entering variable flips to its other bound
        t_star = min(t_flip, r_min)
        if not np.isfinite(t_star):
            raise SimplexError("LP is unbounded")
        stall = stall + 1 if t_star <= 1e-12 else 0

        if t_flip <= r_min:
            # Bound flip: entering variable jumps to its other bound.
            values -= t_star * col
            at_upper[j] = ~at_upper[j]
            continue

        # Bland: among rows achieving the min ratio, smallest basic index leaves.
        tie_rows = np.flatnonzero(ratios <= t_star + 1e-12)
        r = int(tie_rows[np.argmin(basis[tie_rows])])
        leaving = int(basis[r])
        leaves_at_upper = col[r] < 0

        values -= t_star * col
        values[r] = (ub[j] if at_upper[j] else 0.0) + sign * t_star

        piv = tableau[r, j]
        if abs(piv) < _PIV_TOL:
            raise SimplexError("numerically singular pivot")
        tableau[r] /= piv
        factor = tableau[:, j].copy()
        factor[r] = 0.0
        tableau -= np.outer(factor, tableau[r])
        obj_row -= obj_row[j] * tableau[r]

        basis[r] = j
        in_basis[j] = True
        in_basis[leaving] = False
        at_upper[j] = False
        at_upper[leaving] = leaves_at_upper

    x_full = np.where(at_upper, ub, 0.0)
    x_full[~np.isfinite(x_full)] = 0.0
    x_full[basis] = values
    x_struct = x_full[:n]
    if np.any(x_struct < -_FEAS_TOL) or np.any(x_struct > ub_struct + _FEAS_TOL):
        raise SimplexError("final point violates its bounds beyond tolerance")
    x_struct = np.clip(x_struct, 0.0, ub_struct)
    return LpSolution(x=x_struct, objective=float(c @ x_struct), iterations=iterations)
