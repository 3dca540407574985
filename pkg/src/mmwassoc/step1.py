"""Requirement-satisfaction association (step 1), three ways.

Maximize the number of UEs whose rate requirement is met, spending as
few BS RF chains as possible and preferring high-capacity links.  The
score of a solution is

    sum_u z_u  -  sum over active links (i, j) of
                  1 / (n_ue_rf + 1 + c_ij / r_u).

Every link penalty lies in (0, 1/(n_ue_rf + 1)], so with n_ue_rf links a
UE still nets a positive gain, and the per-chain penalty keeps the chain
count minimal; dividing c_ij by r_u stops high-requirement UEs with good
links from crowding out cheap-to-serve ones.

Solvers:
  * solve_step1_exact: depth-first branch and bound over per-UE chain
    subsets, globally optimal, guarded by a node budget.
  * solve_step1_lp: box relaxation solved by the in-package
    bounded-variable simplex; an upper bound on the exact optimum.
  * round_solution: greedy demand-level rounding of the fractional
    point, always feasible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, permutations

import numpy as np

from . import lp
from .instance import AssociationInstance, AssociationSolution, solution_from_x

DEFAULT_NODE_BUDGET = 2_000_000
SUPPORT_EPS = 1e-9
_TIE_EPS = 1e-12


class NodeBudgetExceeded(RuntimeError):
    """Search exceeded its node budget; carries the best incumbent found."""

    def __init__(self, budget: int, incumbent: AssociationSolution):
        super().__init__(f"exact search exceeded node budget of {budget}")
        self.budget = budget
        self.incumbent = incumbent


@dataclass(frozen=True)
class FractionalSolution:
    """Box-relaxation optimum: x*, z* in [0, 1], and the relaxed objective."""

    x_frac: np.ndarray
    z_frac: np.ndarray
    lp_objective: float

    def __post_init__(self) -> None:
        for arr in (self.x_frac, self.z_frac):
            if np.any(arr < -1e-9) or np.any(arr > 1 + 1e-9):
                raise ValueError("fractional values must lie in [0, 1]")


@dataclass(frozen=True)
class ScalarWeights:
    """Weights of the two-term scalarized objective lam1*F1 + lam2*F2.

    F1 counts associated UEs, F2 is the negated number of active links.
    F1 is maximized with the fewest chains exactly when
    0 < lam2/lam1 < 1/n_ue_rf.
    """

    lambda1: float
    lambda2: float

    def __post_init__(self) -> None:
        if self.lambda1 <= 0 or self.lambda2 <= 0:
            raise ValueError("weights must be > 0")

    def in_optimal_range(self, n_ue_rf: int) -> bool:
        low, high = optimal_weight_range(n_ue_rf)
        return low < self.lambda2 / self.lambda1 < high


def scalarized_objective(sol: AssociationSolution, weights: ScalarWeights) -> float:
    return float(weights.lambda1 * sol.z.sum() - weights.lambda2 * sol.x.sum())


def weight_term(c_ij: float, r_u: float, n_ue_rf: int) -> float:
    """Penalty of one active link: 1 / (n_ue_rf + 1 + c_ij / r_u)."""
    if np.any(np.asarray(r_u) <= 0):
        raise ValueError("rate requirement must be > 0")
    if np.any(np.asarray(c_ij) < 0):
        raise ValueError("capacity must be >= 0")
    w = 1.0 / (n_ue_rf + 1.0 + np.asarray(c_ij, dtype=float) / r_u)
    return float(w) if np.ndim(w) == 0 else w


def optimal_weight_range(n_ue_rf: int) -> tuple[float, float]:
    """Open interval of chain-penalty weights that keep F1 primary.

    The default per-chain weight 1/(n_ue_rf + 1) sits strictly inside.
    """
    if n_ue_rf < 1:
        raise ValueError("n_ue_rf must be >= 1")
    return (0.0, 1.0 / n_ue_rf)


def default_chain_weight(n_ue_rf: int) -> float:
    return 1.0 / (n_ue_rf + 1)


# ---------------------------------------------------------------------------
# LP relaxation
# ---------------------------------------------------------------------------


def _link_weights(inst: AssociationInstance) -> np.ndarray:
    r_per_chain = inst.rate_req[inst.ue_of_chain]
    return 1.0 / (inst.n_ue_rf + 1.0 + inst.c / r_per_chain[:, None])


def _relaxation_rows(inst: AssociationInstance):
    """Constraint rows 5b-5f over variables [x (row-major), z]."""
    n_uc, n_bc = inst.c.shape
    nx = n_uc * n_bc
    nv = nx + inst.n_ue

    def cell(i: int, j: int) -> int:
        return i * n_bc + j

    rows, rhs = [], []
    for j in range(n_bc):  # 5b: BS chain serves <= 1 UE chain
        row = np.zeros(nv)
        row[[cell(i, j) for i in range(n_uc)]] = 1.0
        rows.append(row)
        rhs.append(1.0)
    for i in range(n_uc):  # 5c: UE chain uses <= 1 BS chain
        row = np.zeros(nv)
        row[cell(i, 0) : cell(i, 0) + n_bc] = 1.0
        rows.append(row)
        rhs.append(1.0)
    for b in range(inst.n_bs):  # 5d: per-BS chain budget
        row = np.zeros(nv)
        for j in np.flatnonzero(inst.bs_of_chain == b):
            row[[cell(i, j) for i in range(n_uc)]] = 1.0
        rows.append(row)
        rhs.append(float(inst.n_bs_rf))
    for u in range(inst.n_ue):  # 5e: links only when flagged, <= n_ue_rf
        row = np.zeros(nv)
        for i in np.flatnonzero(inst.ue_of_chain == u):
            row[cell(i, 0) : cell(i, 0) + n_bc] = 1.0
        row[nx + u] = -float(inst.n_ue_rf)
        rows.append(row)
        rhs.append(0.0)
    for u in range(inst.n_ue):  # 5f: flagged UEs meet their requirement
        # Scaled by 1/r_u so coefficients stay O(1) alongside the unit rows.
        row = np.zeros(nv)
        for i in np.flatnonzero(inst.ue_of_chain == u):
            row[cell(i, 0) : cell(i, 0) + n_bc] = -inst.c[i] / inst.rate_req[u]
        row[nx + u] = 1.0
        rows.append(row)
        rhs.append(0.0)
    return np.asarray(rows), np.asarray(rhs)


def solve_step1_lp(inst: AssociationInstance) -> FractionalSolution:
    """Optimum of the box relaxation; an upper bound on any binary solution."""
    n_uc, n_bc = inst.c.shape
    nx = n_uc * n_bc
    weights = _link_weights(inst)
    objective = np.concatenate([-weights.ravel(), np.ones(inst.n_ue)])
    a_ub, b_ub = _relaxation_rows(inst)
    res = lp.solve_lp_max(objective, a_ub, b_ub, np.ones(nx + inst.n_ue))
    residual = a_ub @ res.x - b_ub
    if residual.max(initial=0.0) > 1e-7:
        raise lp.SimplexError("relaxed constraints violated beyond tolerance")
    return FractionalSolution(
        x_frac=res.x[:nx].reshape(n_uc, n_bc),
        z_frac=res.x[nx:],
        lp_objective=res.objective,
    )


# ---------------------------------------------------------------------------
# Rounding
# ---------------------------------------------------------------------------


def _best_first_demand(masked: np.ndarray, rows: np.ndarray, r_u: float):
    """Fewest conflict-free links of one UE whose capacities reach r_u.

    Walks the UE's masked links best-first, skipping any link that
    reuses an already-picked UE chain or BS chain, until the running sum
    meets the requirement.  Returns (demand, picked (i, j) pairs, total)
    or (None, (), 0.0) when even all links together fall short.
    """
    cells = [(float(masked[i, j]), int(i), int(j)) for i in rows for j in np.flatnonzero(masked[i] > 0)]
    cells.sort(key=lambda t: (-t[0], t[1], t[2]))
    picked: list[tuple[int, int]] = []
    used_i: set[int] = set()
    used_j: set[int] = set()
    total = 0.0
    for cap, i, j in cells:
        if i in used_i or j in used_j:
            continue
        picked.append((i, j))
        used_i.add(i)
        used_j.add(j)
        total += cap
        if total >= r_u:
            return len(picked), tuple(picked), total
    return None, (), 0.0


def round_solution(
    frac: FractionalSolution,
    inst: AssociationInstance,
    support_eps: float = SUPPORT_EPS,
) -> AssociationSolution:
    """Greedy demand-level rounding of a fractional association.

    Capacities are masked to the support of x* (entries > support_eps).
    For each demand level n = 1..n_ue_rf: repeatedly find every UE whose
    requirement needs exactly n masked links (best-first), associate the
    one with the largest n-link aggregate (ties to the lowest UE index),
    then retire its links' BS chains and all of its own entries.  UEs
    whose remaining links cannot reach their requirement are skipped.
    The result always satisfies the full constraint set.
    """
    if frac.x_frac.shape != inst.c.shape:
        raise ValueError("fractional solution does not match instance shape")
    masked = np.where(frac.x_frac > support_eps, inst.c, 0.0)
    x = np.zeros(inst.c.shape, dtype=int)
    z = np.zeros(inst.n_ue, dtype=int)
    rows_of_ue = [np.flatnonzero(inst.ue_of_chain == u) for u in range(inst.n_ue)]

    for level in range(1, inst.n_ue_rf + 1):
        while True:
            best_u, best_total, best_pairs = -1, -np.inf, ()
            for u in range(inst.n_ue):
                if z[u]:
                    continue
                demand, pairs, total = _best_first_demand(
                    masked, rows_of_ue[u], inst.rate_req[u]
                )
                if demand == level and total > best_total:
                    best_u, best_total, best_pairs = u, total, pairs
            if best_u < 0:
                break
            z[best_u] = 1
            for i, j in best_pairs:
                x[i, j] = 1
                masked[:, j] = 0.0  # BS chain consumed
            masked[rows_of_ue[best_u], :] = 0.0  # UE leaves the pool
    return solution_from_x(inst, x, z)


# ---------------------------------------------------------------------------
# Exact branch and bound
# ---------------------------------------------------------------------------


def _ue_candidates(inst: AssociationInstance, weights: np.ndarray, u: int):
    """Minimal satisfying link sets for UE u, best score first.

    A candidate pairs k distinct chains of u with k distinct BS chains
    (k <= n_ue_rf) so the capacities sum to at least r_u.  Two
    exactness-preserving filters shrink the list: sets with a satisfying
    strict subset are dropped (every link carries a positive penalty, so
    the subset always scores higher), and for each BS-chain set only the
    top-scoring pairings survive (equal-score ties are all kept so the
    lexicographic tie-break stays exact).  Returns (score, bs_mask,
    pairs) tuples.
    """
    chains = np.flatnonzero(inst.ue_of_chain == u)
    r_u = float(inst.rate_req[u])
    n_bc = inst.c.shape[1]
    out = []
    for k in range(1, inst.n_ue_rf + 1):
        for bs_subset in combinations(range(n_bc), k):
            best: list[tuple[float, int, tuple]] = []
            for ue_perm in permutations(chains, k):
                pairs = tuple(zip(ue_perm, bs_subset))
                caps = [inst.c[i, j] for i, j in pairs]
                if sum(caps) < r_u:
                    continue
                if k > 1 and any(sum(caps) - caps[d] >= r_u for d in range(k)):
                    continue  # dominated: a strict subset already satisfies
                score = 1.0 - sum(weights[i, j] for i, j in pairs)
                if not best or score > best[0][0]:
                    mask = 0
                    for j in bs_subset:
                        mask |= 1 << j
                    best = [(score, mask, pairs)]
                elif score == best[0][0]:
                    best.append((score, best[0][1], pairs))
            out.extend(best)
    out.sort(key=lambda t: -t[0])
    return out


def _lex_less(pairs_a, pairs_b, n_bc: int) -> bool:
    """True if the binary matrix of pairs_a is lexicographically smaller."""
    ones_a = sorted(i * n_bc + j for i, j in pairs_a)
    ones_b = sorted(i * n_bc + j for i, j in pairs_b)
    for a, b in zip(ones_a, ones_b):
        if a != b:
            return a > b  # later first one == zero earlier == lex smaller
    return len(ones_a) < len(ones_b)


def _solution_pairs(sol: AssociationSolution) -> tuple:
    return tuple((int(i), int(j)) for i, j in zip(*np.nonzero(sol.x)))


def _score_of_pairs(inst: AssociationInstance, weights: np.ndarray, pairs) -> float:
    z = len({int(inst.ue_of_chain[i]) for i, _ in pairs})
    return z - sum(weights[i, j] for i, j in pairs)


def solve_step1_exact(
    inst: AssociationInstance, node_budget: int = DEFAULT_NODE_BUDGET
) -> AssociationSolution:
    """Globally optimal association by depth-first branch and bound.

    Branches per UE over its minimal satisfying chain sets (or none).
    Pruning uses an admissible fractional-knapsack bound (each remaining
    UE offers at best its top standalone gain at the cost of its
    smallest chain demand, packed into the free-chain count) plus state
    dominance: two prefixes reaching the same (UE, used-chain mask)
    state admit identical completions, so an arrival scoring strictly
    below an earlier one is dead.  The incumbent is seeded from the
    rounded relaxation.  Score ties resolve to the lexicographically
    smallest assignment matrix (tied state arrivals are re-explored for
    that reason).  Raises NodeBudgetExceeded (carrying the incumbent) if
    the tree outgrows node_budget.
    """
    weights = _link_weights(inst)
    n_ue, n_bc = inst.n_ue, inst.c.shape[1]

    seed = round_solution(solve_step1_lp(inst), inst)
    seed_pairs = _solution_pairs(seed)
    seed_score = _score_of_pairs(inst, weights, seed_pairs)

    # Guard before enumerating: candidate generation itself must fit.
    per_ue_candidates = sum(
        math.comb(n_bc, k) * math.perm(inst.n_ue_rf, k)
        for k in range(1, inst.n_ue_rf + 1)
    )
    if per_ue_candidates * n_ue > node_budget:
        raise NodeBudgetExceeded(node_budget, seed)

    candidates = [_ue_candidates(inst, weights, u) for u in range(n_ue)]

    # Per-UE best gain and cheapest chain demand, then suffix lists sorted
    # by gain density for the knapsack bound.
    gain = [c[0][0] if c else 0.0 for c in candidates]
    demand = [min(len(t[2]) for t in c) if c else 0 for c in candidates]
    density_suffix: list[list[tuple[float, int]]] = [[] for _ in range(n_ue + 1)]
    for u in range(n_ue - 1, -1, -1):
        items = density_suffix[u + 1] + ([(gain[u], demand[u])] if candidates[u] else [])
        density_suffix[u] = sorted(items, key=lambda t: -t[0] / t[1])

    def knapsack_bound(u: int, free_count: int) -> float:
        total, cap = 0.0, free_count
        for g, d in density_suffix[u]:
            if cap <= 0:
                break
            if d <= cap:
                total += g
                cap -= d
            else:
                total += g * (cap / d)
                break
        return total

    best_score = 0.0
    best_pairs: tuple = ()
    if seed_score > best_score + _TIE_EPS:
        best_score, best_pairs = seed_score, seed_pairs

    nodes = 0
    stack_pairs: list = []
    state_best: dict[int, float] = {}

    def fail() -> NodeBudgetExceeded:
        x = np.zeros(inst.c.shape, dtype=int)
        for i, j in best_pairs:
            x[i, j] = 1
        return NodeBudgetExceeded(node_budget, solution_from_x(inst, x))

    def dfs(u: int, used_mask: int, free_count: int, score: float) -> None:
        nonlocal best_score, best_pairs, nodes
        nodes += 1
        if nodes > node_budget:
            raise fail()
        if u == n_ue:
            if score > best_score + _TIE_EPS:
                best_score, best_pairs = score, tuple(stack_pairs)
            elif score > best_score - _TIE_EPS and _lex_less(
                stack_pairs, best_pairs, n_bc
            ):
                best_pairs = tuple(stack_pairs)
            return
        if score + knapsack_bound(u, free_count) < best_score - _TIE_EPS:
            return
        key = (u << n_bc) | used_mask
        if score < state_best.get(key, -np.inf) - _TIE_EPS:
            return  # a better prefix already reached this state
        if score > state_best.get(key, -np.inf):
            state_best[key] = score
        for cand_score, mask, pairs in candidates[u]:
            if mask & used_mask:
                continue
            stack_pairs.extend(pairs)
            dfs(u + 1, used_mask | mask, free_count - len(pairs), score + cand_score)
            del stack_pairs[-len(pairs) :]
        dfs(u + 1, used_mask, free_count, score)  # leave u unassociated

    dfs(0, 0, n_bc, 0.0)

    x = np.zeros(inst.c.shape, dtype=int)
    for i, j in best_pairs:
        x[i, j] = 1
    return solution_from_x(inst, x)
