"""Exact optimization by depth-first branch-and-bound.

The lower bound is an assignment-problem relaxation: every customer needs a
successor, the depot is replicated so any number of vehicles can leave, and
capacity/time/range limits are dropped.  Whenever the relaxation decodes
into depot-anchored routes that respect all limits, the node is solved
exactly; otherwise the search branches on an arc of a violated structure
(customer-only cycle or over-limit route), excluding or forcing it.  Arc
choice is strong branching over the top three candidates: the arc whose
exclusion raises the bound the most.  Fixed-arc chains are accumulated at
every node so capacity/time/range violations prune without any flow
variables.  The incumbent is seeded with a short tabu-search run.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .instance import TcvrpInstance
from .its import ItsConfig, UnplaceableNodeError, solve_its
from .solution import Solution

REL_OPT_TOL = 1e-6
PRUNE_EPS = 1e-9

OPTIMAL = "optimal"
GAP = "gap"
INFEASIBLE = "infeasible"
TIMEOUT = "timeout"


@dataclass(frozen=True)
class SearchNode:
    """Fixed arc decisions; bound is filled in once the relaxation is solved."""

    included: frozenset[tuple[int, int]] = frozenset()
    excluded: frozenset[tuple[int, int]] = frozenset()
    bound: float = 0.0

    def chains(self) -> list[list[int]]:
        """Maximal paths of fixed arcs.

        Depot-anchored chains start with 0 (and end with 0 when closed);
        customer-only cycles come back with their first node repeated at the
        end, which is how the feasibility check recognizes them.
        """
        succ: dict[int, int] = {}
        starts: list[int] = []
        pred_of: set[int] = set()
        for i, j in sorted(self.included):
            if i == 0:
                starts.append(j)
            else:
                succ[i] = j
            if j != 0:
                pred_of.add(j)
        chains = []
        visited: set[int] = set()

        def walk(chain, cur):
            while cur in succ:
                nxt = succ[cur]
                chain.append(nxt)
                if nxt == 0 or nxt in visited:
                    break
                visited.add(nxt)
                cur = nxt
            return chain

        for s in starts:
            visited.add(s)
            chains.append(walk([0, s], s))
        for i in sorted(succ):
            if i in visited or i in pred_of:
                continue
            visited.add(i)
            chains.append(walk([i], i))
        for i in sorted(succ):  # leftovers are customer-only cycles
            if i in visited:
                continue
            visited.add(i)
            chains.append(walk([i], i))
        return chains


@dataclass
class ExactResult:
    solution: Solution | None
    lower_bound_mi: float
    upper_bound_mi: float
    status: str
    elapsed_s: float
    nodes_explored: int = 0

    @property
    def gap_pct(self) -> float:
        if self.upper_bound_mi <= 0 or not math.isfinite(self.upper_bound_mi):
            return math.nan
        return (1.0 - self.lower_bound_mi / self.upper_bound_mi) * 100.0

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "lower_bound_mi": self.lower_bound_mi,
            "upper_bound_mi": (
                None if not math.isfinite(self.upper_bound_mi) else self.upper_bound_mi
            ),
            "gap_pct": None if math.isnan(self.gap_pct) else self.gap_pct,
            "elapsed_s": self.elapsed_s,
            "nodes_explored": self.nodes_explored,
            "solution": None if self.solution is None else self.solution.to_json(),
        }


def _relaxation_matrix(node: SearchNode, inst: TcvrpInstance) -> np.ndarray:
    """Expanded assignment costs: customers 1..n, then n depot copies."""
    n = inst.n
    D = inst.dist_mi
    size = 2 * n
    M = np.zeros((size, size))
    M[:n, :n] = D[1:, 1:]
    np.fill_diagonal(M[:n, :n], np.inf)
    for i in range(n):
        M[i, n:] = D[i + 1, 0]
        M[n:, i] = D[0, i + 1]
    # copy->copy stays 0: unused vehicles pair off freely
    for i, j in node.excluded:
        if i == 0:
            M[n:, j - 1] = np.inf
        elif j == 0:
            M[i - 1, n:] = np.inf
        else:
            M[i - 1, j - 1] = np.inf
    for i, j in node.included:
        if i == 0:
            M[:n, j - 1] = np.inf  # only a depot copy may precede j
        elif j == 0:
            M[i - 1, :n] = np.inf  # i must hand over to a depot copy
        else:
            keep_col = M[i - 1, j - 1]
            M[i - 1, :] = np.inf
            M[:, j - 1] = np.inf
            M[i - 1, j - 1] = keep_col
    return M


def _solve_relaxation(
    node: SearchNode, inst: TcvrpInstance
) -> tuple[float, dict[int, int], list[int]]:
    """(cost, customer successor map, depot-out customers) or (inf, {}, [])."""
    n = inst.n
    out_excluded = sum(1 for (i, _) in node.excluded if i == 0)
    in_excluded = sum(1 for (_, j) in node.excluded if j == 0)
    if out_excluded >= n or in_excluded >= n:
        return math.inf, {}, []
    M = _relaxation_matrix(node, inst)
    try:
        rows, cols = linear_sum_assignment(M)
    except ValueError:
        return math.inf, {}, []
    cost = float(M[rows, cols].sum())
    if not math.isfinite(cost):
        return math.inf, {}, []
    succ: dict[int, int] = {}
    depot_out: list[int] = []
    for r, c in zip(rows, cols):
        if r < n:
            succ[r + 1] = c + 1 if c < n else 0
        elif c < n:
            depot_out.append(c + 1)
    return cost, succ, sorted(depot_out)


def lower_bound(node: SearchNode, inst: TcvrpInstance) -> float:
    """Assignment-relaxation bound; +inf when the relaxation is infeasible."""
    cost, _, _ = _solve_relaxation(node, inst)
    return cost


def _decode(succ: dict[int, int], depot_out: list[int], n: int):
    """Split the relaxation permutation into routes and customer cycles."""
    routes = []
    on_routes: set[int] = set()
    for start in depot_out:
        route = [0, start]
        cur = start
        on_routes.add(start)
        while True:
            nxt = succ[cur]
            route.append(nxt)
            if nxt == 0:
                break
            cur = nxt
            on_routes.add(cur)
        routes.append(route)
    cycles = []
    left = set(range(1, n + 1)) - on_routes
    while left:
        start = min(left)
        cyc = [start]
        cur = succ[start]
        while cur != start:
            cyc.append(cur)
            cur = succ[cur]
        for c in cyc:
            left.discard(c)
        cycles.append(cyc)
    return routes, cycles


def _route_measures(inst: TcvrpInstance, seq: list[int]):
    load = 0
    time = 0.0
    dist = 0.0
    for p in range(len(seq) - 1):
        time += inst.time_min[seq[p], seq[p + 1]]
        dist += inst.dist_mi[seq[p], seq[p + 1]]
    for c in seq:
        if c != 0:
            load += int(inst.demand[c - 1])
            time += float(inst.service_min[c - 1])
    return load, time, dist


def _chains_feasible(node: SearchNode, inst: TcvrpInstance) -> bool:
    for chain in node.chains():
        interior = [c for c in chain if c != 0]
        if len(interior) > len(set(interior)):
            return False  # a customer cycle among fixed arcs
        load, time, dist = _route_measures(inst, chain)
        if load > inst.capacity:
            return False
        if time > inst.tmax_min + 1e-9:
            return False
        if inst.dmax_mi is not None and dist > inst.dmax_mi + 1e-9:
            return False
    return True


def _violated_structures(inst: TcvrpInstance, routes, cycles):
    """Arc lists of every infeasible structure, deterministically ordered."""
    out = []
    for cyc in cycles:
        arcs = [
            (cyc[p], cyc[(p + 1) % len(cyc)]) for p in range(len(cyc))
        ]
        out.append(sorted(arcs))
    for route in routes:
        load, time, dist = _route_measures(inst, route)
        bad = (
            load > inst.capacity
            or time > inst.tmax_min + 1e-9
            or (inst.dmax_mi is not None and dist > inst.dmax_mi + 1e-9)
        )
        if bad:
            arcs = [(route[p], route[p + 1]) for p in range(len(route) - 1)]
            out.append(sorted(arcs))
    out.sort()
    return out


def _seed_incumbent(inst: TcvrpInstance, budget_s: float):
    cfg = ItsConfig(
        seed=0,
        time_budget_s=budget_s,
        max_stall_rounds=8,
        inner_patience=15,
        inner_cap=150,
    )
    try:
        sol, cost = solve_its(inst, cfg)
        return sol, cost
    except UnplaceableNodeError:
        return None, math.inf


def solve_exact(
    inst: TcvrpInstance,
    time_limit_s: float = 60.0,
    seed_budget_s: float = 2.0,
) -> ExactResult:
    """Minimize total distance; certifies optimality at 1e-6 relative gap."""
    t0 = _time.monotonic()
    deadline = t0 + time_limit_s
    best_sol, upper = _seed_incumbent(inst, min(seed_budget_s, time_limit_s))

    root = SearchNode()
    root_bound, succ, depot_out = _solve_relaxation(root, inst)
    root = SearchNode(bound=root_bound)
    if math.isinf(root_bound):
        return ExactResult(None, math.inf, math.inf, INFEASIBLE, _time.monotonic() - t0)

    stack: list[SearchNode] = [root]
    nodes_explored = 0
    while stack:
        if _time.monotonic() > deadline:
            open_bounds = [nd.bound for nd in stack]
            lower = min(open_bounds) if open_bounds else upper
            lower = min(lower, upper)
            status = GAP if best_sol is not None else TIMEOUT
            return ExactResult(
                best_sol,
                lower,
                upper,
                status,
                _time.monotonic() - t0,
                nodes_explored,
            )
        node = stack.pop()
        if node.bound >= upper - PRUNE_EPS:
            continue
        nodes_explored += 1
        cost, succ, depot_out = _solve_relaxation(node, inst)
        if cost >= upper - PRUNE_EPS:
            continue
        routes, cycles = _decode(succ, depot_out, inst.n)
        violated = _violated_structures(inst, routes, cycles)
        if not violated:
            # relaxation itself is a feasible route set: node solved exactly
            sol = Solution.from_routes(inst, [tuple(r) for r in routes])
            if sol.vmt_mi < upper - PRUNE_EPS:
                upper = sol.vmt_mi
                best_sol = sol
            continue
        candidates = [a for a in violated[0] if a not in node.included][:3]
        if not candidates:  # fixed arcs cover the first structure; look further
            candidates = [
                a for arcs in violated for a in arcs if a not in node.included
            ][:3]
        if not candidates:
            raise RuntimeError("violated structure with every arc fixed")
        scored = sorted(
            (
                (
                    lower_bound(
                        SearchNode(node.included, node.excluded | {arc}), inst
                    ),
                    arc,
                )
                for arc in candidates
            ),
            key=lambda t: (-t[0], t[1]),
        )
        excl_bound, branch_arc = scored[0]
        children = []
        # pushed exclude-first so the include branch is explored first
        if excl_bound < upper - PRUNE_EPS:
            children.append(
                SearchNode(
                    node.included,
                    node.excluded | {branch_arc},
                    max(excl_bound, node.bound),
                )
            )
        incl = SearchNode(node.included | {branch_arc}, node.excluded)
        if _chains_feasible(incl, inst):
            incl_bound = max(lower_bound(incl, inst), node.bound)
            if incl_bound < upper - PRUNE_EPS:
                children.append(SearchNode(incl.included, incl.excluded, incl_bound))
        stack.extend(children)
    elapsed = _time.monotonic() - t0
    if best_sol is None:
        return ExactResult(None, math.inf, math.inf, INFEASIBLE, elapsed, nodes_explored)
    return ExactResult(best_sol, upper, upper, OPTIMAL, elapsed, nodes_explored)
