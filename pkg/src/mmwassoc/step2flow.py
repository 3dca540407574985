"""Leftover-resource allocation (step 2) as a min-cost network flow.

BS RF chains not consumed by the requirement-satisfaction step are
handed to the still-unassociated UEs so the network sum rate is
maximized.  The assignment polytope maps onto a layered flow network

    source -> BS -> free BS chain -> free UE chain -> UE -> sink

with unit capacities in the middle layers, per-BS budgets out of the
source, and the per-UE chain cap into the sink.  Link edges carry cost
-c_ij, so a min-cost flow is exactly a max-sum-rate assignment; a
zero-cost overflow edge source -> sink absorbs budget that no UE can
use, keeping the full supply routable.  All capacities and supplies are
integers, hence an integral optimum always exists and the successive
shortest-path solver returns one.

The printed surrogate cost 1/(1 + c_ij) is available through
cost_mode="inverse" for comparison; it is not sum-rate optimal.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import lp
from .instance import AssociationInstance, AssociationSolution, empty_solution

COST_MODES = ("neg-capacity", "inverse")


@dataclass(frozen=True)
class ResidualInstance:
    """Free resources after step 1, restricted to unassociated UEs.

    ``c`` has one row per free UE chain and one column per free BS
    chain; the *_ids arrays give their indices in the parent instance
    and *_of arrays the owning device indices.  ``bs_budget`` counts the
    remaining chains of every BS (zero for fully used ones).
    """

    c: np.ndarray
    ue_chain_ids: np.ndarray
    bs_chain_ids: np.ndarray
    ue_ids: np.ndarray
    ue_of_chain: np.ndarray  # global UE index per row of c
    bs_of_chain: np.ndarray  # global BS index per column of c
    bs_budget: np.ndarray  # (n_bs,)
    n_ue_rf: int

    def __post_init__(self) -> None:
        if self.c.shape != (len(self.ue_chain_ids), len(self.bs_chain_ids)):
            raise ValueError("capacity block does not match chain id lists")
        free_counts = np.bincount(self.bs_of_chain, minlength=len(self.bs_budget))
        if not np.array_equal(free_counts, self.bs_budget):
            raise ValueError("bs_budget must equal the per-BS free-chain counts")

    @property
    def n_bs(self) -> int:
        return len(self.bs_budget)


@dataclass(frozen=True)
class FlowEdge:
    tail: int
    head: int
    capacity: int
    cost: float


@dataclass(frozen=True)
class FlowNetwork:
    """Directed graph with integer capacities; supply enters at source."""

    n_vertices: int
    edges: tuple[FlowEdge, ...]
    supply: int
    source: int
    sink: int
    link_edges: dict  # edge index -> (row, col) of the residual capacity block


def make_residual(inst: AssociationInstance, sol: AssociationSolution) -> ResidualInstance:
    """Strip the chains consumed and UEs associated by a step-1 solution."""
    free_bs = np.flatnonzero(sol.x.sum(axis=0) == 0)
    na_ues = np.flatnonzero(sol.z == 0)
    na_rows = np.flatnonzero(np.isin(inst.ue_of_chain, na_ues))
    return ResidualInstance(
        c=inst.c[np.ix_(na_rows, free_bs)],
        ue_chain_ids=na_rows,
        bs_chain_ids=free_bs,
        ue_ids=na_ues,
        ue_of_chain=inst.ue_of_chain[na_rows],
        bs_of_chain=inst.bs_of_chain[free_bs],
        bs_budget=np.bincount(inst.bs_of_chain[free_bs], minlength=inst.n_bs),
        n_ue_rf=inst.n_ue_rf,
    )


def full_residual(inst: AssociationInstance) -> ResidualInstance:
    """The whole instance treated as leftover (no UE associated yet)."""
    return make_residual(inst, empty_solution(inst))


def build_flow_network(res: ResidualInstance, cost_mode: str = "neg-capacity") -> FlowNetwork:
    """Layered graph: s -> BS -> BS chain -> UE chain -> UE -> t (+ overflow).

    Capacities: per-BS budget on s->BS, one everywhere in the middle,
    n_ue_rf on UE->t.  Only the BS-chain/UE-chain edges carry cost.
    """
    if cost_mode not in COST_MODES:
        raise ValueError(f"cost_mode must be one of {COST_MODES}")
    n_rows, n_cols = res.c.shape
    n_bs = res.n_bs
    n_ues = len(res.ue_ids)
    v_bs = 1  # source is vertex 0
    v_bchain = v_bs + n_bs
    v_uchain = v_bchain + n_cols
    v_ue = v_uchain + n_rows
    sink = v_ue + n_ues
    ue_pos = {int(u): q for q, u in enumerate(res.ue_ids)}

    edges: list[FlowEdge] = []
    link_edges: dict = {}
    for b in range(n_bs):
        if res.bs_budget[b] > 0:
            edges.append(FlowEdge(0, v_bs + b, int(res.bs_budget[b]), 0.0))
    for k in range(n_cols):
        edges.append(FlowEdge(v_bs + int(res.bs_of_chain[k]), v_bchain + k, 1, 0.0))
    for k in range(n_cols):
        for m in range(n_rows):
            cap = float(res.c[m, k])
            cost = -cap if cost_mode == "neg-capacity" else 1.0 / (1.0 + cap)
            link_edges[len(edges)] = (m, k)
            edges.append(FlowEdge(v_bchain + k, v_uchain + m, 1, cost))
    for m in range(n_rows):
        edges.append(FlowEdge(v_uchain + m, v_ue + ue_pos[int(res.ue_of_chain[m])], 1, 0.0))
    for q in range(n_ues):
        edges.append(FlowEdge(v_ue + q, sink, res.n_ue_rf, 0.0))
    supply = int(res.bs_budget.sum())
    edges.append(FlowEdge(0, sink, supply, 0.0))  # overflow absorbs unused budget

    return FlowNetwork(
        n_vertices=sink + 1,
        edges=tuple(edges),
        supply=supply,
        source=0,
        sink=sink,
        link_edges=link_edges,
    )


def dump_edge_list(net: FlowNetwork, path: str | Path | None = None) -> str:
    """Plain text, one edge per line: tail head capacity cost."""
    text = "\n".join(
        f"{e.tail} {e.head} {e.capacity} {e.cost!r}" for e in net.edges
    ) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def solve_min_cost_flow(net: FlowNetwork) -> np.ndarray:
    """Integral min-cost flow of the full supply, one unit count per edge.

    Successive shortest augmenting paths on reduced costs: one
    Bellman-Ford pass seeds the node potentials (absorbing the negative
    link costs), then Dijkstra finds each augmenting path.  Integer
    capacities make every augmentation integral.
    """
    n = net.n_vertices
    for e in net.edges:
        if not (0 <= e.tail < n and 0 <= e.head < n):
            raise ValueError(f"edge {e} references an unknown vertex")
        if e.capacity < 0 or int(e.capacity) != e.capacity:
            raise ValueError(f"edge {e} must have a non-negative integer capacity")
    if net.supply < 0:
        raise ValueError("supply must be >= 0")

    m = len(net.edges)
    to = np.empty(2 * m, dtype=int)
    cap = np.empty(2 * m, dtype=np.int64)
    cost = np.empty(2 * m, dtype=float)
    adj: list[list[int]] = [[] for _ in range(n)]
    for idx, e in enumerate(net.edges):
        to[2 * idx], cap[2 * idx], cost[2 * idx] = e.head, int(e.capacity), e.cost
        to[2 * idx + 1], cap[2 * idx + 1], cost[2 * idx + 1] = e.tail, 0, -e.cost
        adj[e.tail].append(2 * idx)
        adj[e.head].append(2 * idx + 1)
    tail = np.empty(2 * m, dtype=int)
    for idx, e in enumerate(net.edges):
        tail[2 * idx], tail[2 * idx + 1] = e.tail, e.head

    # Bellman-Ford potentials from the source over positive-capacity edges.
    pot = np.full(n, math.inf)
    pot[net.source] = 0.0
    changed = True
    for _ in range(n):
        changed = False
        for e in range(2 * m):
            if cap[e] > 0 and pot[tail[e]] + cost[e] < pot[to[e]] - 1e-12:
                pot[to[e]] = pot[tail[e]] + cost[e]
                changed = True
        if not changed:
            break
    if changed:
        raise ValueError("graph contains a negative-cost cycle")

    flow = np.zeros(m, dtype=np.int64)
    remaining = int(net.supply)
    dist = np.empty(n)
    parent = np.empty(n, dtype=int)
    while remaining > 0:
        dist.fill(math.inf)
        parent.fill(-1)
        dist[net.source] = 0.0
        heap = [(0.0, net.source)]
        done = np.zeros(n, dtype=bool)
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for e in adj[u]:
                v = to[e]
                if cap[e] <= 0 or not math.isfinite(pot[v]):
                    continue
                nd = d + max(cost[e] + pot[u] - pot[v], 0.0)
                if nd < dist[v]:
                    dist[v] = nd
                    parent[v] = e
                    heapq.heappush(heap, (nd, v))
        if not math.isfinite(dist[net.sink]):
            raise ValueError("supply cannot be routed to the sink")

        push = remaining
        v = net.sink
        while v != net.source:
            e = parent[v]
            push = min(push, int(cap[e]))
            v = tail[e]
        v = net.sink
        while v != net.source:
            e = parent[v]
            cap[e] -= push
            cap[e ^ 1] += push
            flow[e // 2] += push if e % 2 == 0 else -push
            v = tail[e]
        remaining -= push
        finite = np.isfinite(dist)
        pot[finite] += dist[finite]

    return flow


def solve_step2(res: ResidualInstance, cost_mode: str = "neg-capacity") -> AssociationSolution:
    """Max-sum-rate assignment of the residual, indexed in residual space."""
    n_rows, n_cols = res.c.shape
    x = np.zeros((n_rows, n_cols), dtype=int)
    if res.bs_budget.sum() > 0 and n_rows > 0:
        net = build_flow_network(res, cost_mode=cost_mode)
        flow = solve_min_cost_flow(net)
        for edge_idx, (m, k) in net.link_edges.items():
            if flow[edge_idx] > 0:
                x[m, k] = 1
    rate_per_chain = (x * res.c).sum(axis=1)
    ue_pos = {int(u): q for q, u in enumerate(res.ue_ids)}
    per_ue = np.zeros(len(res.ue_ids))
    links = np.zeros(len(res.ue_ids))
    for row in range(n_rows):
        q = ue_pos[int(res.ue_of_chain[row])]
        per_ue[q] += rate_per_chain[row]
        links[q] += x[row].sum()
    return AssociationSolution(x=x, z=(links > 0).astype(int), per_ue_rate=per_ue)


def relaxed_step2_lp(res: ResidualInstance) -> tuple[np.ndarray, float]:
    """Vertex optimum of the box-relaxed residual assignment problem.

    Solved with the in-package simplex; by total unimodularity of the
    flow structure the returned vertex is integral (see
    verify_integrality).
    """
    n_rows, n_cols = res.c.shape
    nx = n_rows * n_cols
    if nx == 0:
        return np.zeros((n_rows, n_cols)), 0.0

    def cell(i: int, j: int) -> int:
        return i * n_cols + j

    rows, rhs = [], []
    for j in range(n_cols):  # each free BS chain serves <= 1 UE chain
        row = np.zeros(nx)
        row[[cell(i, j) for i in range(n_rows)]] = 1.0
        rows.append(row)
        rhs.append(1.0)
    for i in range(n_rows):  # each free UE chain uses <= 1 BS chain
        row = np.zeros(nx)
        row[cell(i, 0) : cell(i, 0) + n_cols] = 1.0
        rows.append(row)
        rhs.append(1.0)
    for b in range(res.n_bs):  # per-BS leftover budget
        cols = np.flatnonzero(res.bs_of_chain == b)
        if cols.size == 0:
            continue
        row = np.zeros(nx)
        for j in cols:
            row[[cell(i, int(j)) for i in range(n_rows)]] = 1.0
        rows.append(row)
        rhs.append(float(res.bs_budget[b]))
    for u in res.ue_ids:  # per-UE chain cap
        row = np.zeros(nx)
        for i in np.flatnonzero(res.ue_of_chain == u):
            row[cell(int(i), 0) : cell(int(i), 0) + n_cols] = 1.0
        rows.append(row)
        rhs.append(float(res.n_ue_rf))

    sol = lp.solve_lp_max(res.c.ravel(), np.asarray(rows), np.asarray(rhs), np.ones(nx))
    return sol.x.reshape(n_rows, n_cols), sol.objective


def verify_integrality(x_frac: np.ndarray, tol: float = 1e-6) -> bool:
    """True when every entry is within tol of 0 or 1 (vacuously for empty)."""
    x = np.asarray(x_frac, dtype=float)
    if x.size == 0:
        return True
    return bool(np.all(np.minimum(np.abs(x), np.abs(x - 1.0)) <= tol))
