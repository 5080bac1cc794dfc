"""Iterated tabu search for the routing problem.

Structure: parallel cheapest-insertion construction, then alternating tabu
phases and eject-and-reinsert perturbations.  Neighborhoods, scanned
first-improvement in a fixed order, are inter-route relocate, inter-route
swap, intra-route segment reversal, and inter-route tail exchange (2-opt*).
When nothing improves, the best non-tabu move is taken (tabu walk).  The
search never accepts a capacity, time, or range violation, so every
intermediate solution is feasible.  Fully deterministic for a fixed config
whenever the stall-based stop fires before the wall-clock budget.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, replace

import numpy as np

from .instance import TcvrpInstance
from .solution import Solution

EPS = 1e-9


class UnplaceableNodeError(RuntimeError):
    """No feasible route can host the node, not even on its own."""

    def __init__(self, node: int):
        self.node = node
        super().__init__(f"node {node} cannot be placed on any feasible route")


@dataclass
class ItsConfig:
    seed: int = 0
    time_budget_s: float = 60.0
    restarts: int = 1
    tenure: int | None = None  # default round(sqrt(n))
    perturbation: int | None = None  # ejected customers per round; default ceil(0.1 n), min 2
    construction_noise: float = 0.1  # relative jitter on insertion costs; 0 = greedy
    use_relocate: bool = True
    use_swap: bool = True
    use_two_opt: bool = True
    use_two_opt_star: bool = True
    max_stall_rounds: int = 50
    inner_patience: int = 30
    inner_cap: int = 400

    def __post_init__(self):
        if self.time_budget_s <= 0:
            raise ValueError("time budget must be positive")
        if self.tenure is not None and self.tenure < 1:
            raise ValueError("tenure must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


class _Route:
    __slots__ = ("rid", "nodes", "load", "time", "dist")

    def __init__(self, rid: int, nodes: list[int]):
        self.rid = rid
        self.nodes = nodes
        self.load = 0
        self.time = 0.0
        self.dist = 0.0


class _Search:
    def __init__(self, inst: TcvrpInstance, cfg: ItsConfig):
        self.inst = inst
        self.T = inst.time_min
        self.D = inst.dist_mi
        self.S = np.concatenate(([0.0], inst.service_min))  # index by node
        self.N = np.concatenate(([0], inst.demand))
        self.Q = inst.capacity
        self.tmax = inst.tmax_min
        self.dmax = math.inf if inst.dmax_mi is None else inst.dmax_mi
        self.cfg = cfg
        self.n = inst.n
        self.tenure = cfg.tenure or max(1, round(math.sqrt(inst.n)))
        self.n_eject = cfg.perturbation or max(2, math.ceil(0.1 * inst.n))
        self.rng = np.random.default_rng(cfg.seed)
        self.routes: list[_Route] = []
        self._next_rid = 0
        self.tabu: dict[tuple[int, int], int] = {}
        self.iteration = 0
        self.deadline = math.inf

    # ---- route bookkeeping -------------------------------------------------

    def _new_route(self, nodes: list[int]) -> _Route:
        r = _Route(self._next_rid, nodes)
        self._next_rid += 1
        self._refresh(r)
        return r

    def _refresh(self, r: _Route) -> None:
        seq = [0] + r.nodes + [0]
        r.load = int(self.N[r.nodes].sum())
        r.time = float(
            sum(self.T[seq[p], seq[p + 1]] for p in range(len(seq) - 1))
            + self.S[r.nodes].sum()
        )
        r.dist = float(sum(self.D[seq[p], seq[p + 1]] for p in range(len(seq) - 1)))

    def total_dist(self) -> float:
        return sum(r.dist for r in self.routes)

    def snapshot(self) -> list[list[int]]:
        return [list(r.nodes) for r in self.routes]

    def restore(self, snap: list[list[int]]) -> None:
        self.routes = [self._new_route(list(nodes)) for nodes in snap]

    def _route_feasible(self, load, time, dist) -> bool:
        return (
            load <= self.Q and time <= self.tmax + EPS and dist <= self.dmax + EPS
        )

    # ---- construction ------------------------------------------------------

    def construct(self) -> None:
        """Parallel cheapest insertion, seeds taken farthest from the depot.

        A small seeded jitter on the insertion cost diversifies otherwise
        identical starts across best_of_runs seeds.
        """
        noise = self.cfg.construction_noise
        self.routes = []
        unrouted = list(range(1, self.n + 1))
        unrouted.sort(key=lambda c: (-(self.D[0, c] + self.D[c, 0]), c))
        self._open_seed_route(unrouted)
        while unrouted:
            best = None  # (jittered delta, cust_idx, route, pos)
            for ci, c in enumerate(unrouted):
                for r in self.routes:
                    if r.load + self.N[c] > self.Q:
                        continue
                    seq = [0] + r.nodes + [0]
                    for pos in range(len(r.nodes) + 1):
                        a, b = seq[pos], seq[pos + 1]
                        dd = self.D[a, c] + self.D[c, b] - self.D[a, b]
                        dt = self.T[a, c] + self.T[c, b] - self.T[a, b] + self.S[c]
                        if not self._route_feasible(
                            r.load + self.N[c], r.time + dt, r.dist + dd
                        ):
                            continue
                        key = dd
                        if noise > 0:
                            key *= 1.0 + noise * self.rng.random()
                        if best is None or key < best[0] - EPS:
                            best = (key, ci, r, pos)
            if best is None:
                self._open_seed_route(unrouted)
                continue
            _, ci, r, pos = best
            c = unrouted.pop(ci)
            r.nodes.insert(pos, c)
            self._refresh(r)

    def _open_seed_route(self, unrouted: list[int]) -> None:
        seed = unrouted.pop(0)  # farthest-from-depot first
        r = self._new_route([seed])
        if not self._route_feasible(r.load, r.time, r.dist):
            raise UnplaceableNodeError(seed)
        self.routes.append(r)

    # ---- tabu machinery ----------------------------------------------------

    def _is_tabu(self, cust: int, rid: int) -> bool:
        return self.tabu.get((cust, rid), -1) >= self.iteration

    def _mark_tabu(self, cust: int, rid: int) -> None:
        self.tabu[(cust, rid)] = self.iteration + self.tenure

    # ---- move scans ----------------------------------------------------
    # Each scan yields (delta_dist, move). Moves are applied via _apply.

    def _scan_relocate(self, best_cost, global_best):
        best_move = None
        for r1 in self.routes:
            for p, c in enumerate(r1.nodes):
                seq1 = [0] + r1.nodes + [0]
                a, b = seq1[p], seq1[p + 2]
                rm_d = self.D[a, c] + self.D[c, b] - self.D[a, b]
                rm_t = self.T[a, c] + self.T[c, b] - self.T[a, b] + self.S[c]
                for r2 in self.routes:
                    if r2 is r1:
                        continue
                    if r2.load + self.N[c] > self.Q:
                        continue
                    tabu = self._is_tabu(c, r2.rid)
                    seq2 = [0] + r2.nodes + [0]
                    for q in range(len(r2.nodes) + 1):
                        u, v = seq2[q], seq2[q + 1]
                        in_d = self.D[u, c] + self.D[c, v] - self.D[u, v]
                        in_t = self.T[u, c] + self.T[c, v] - self.T[u, v] + self.S[c]
                        if not self._route_feasible(
                            r2.load + self.N[c], r2.time + in_t, r2.dist + in_d
                        ):
                            continue
                        delta = in_d - rm_d
                        if tabu and best_cost + delta >= global_best - EPS:
                            continue  # tabu and no aspiration
                        move = ("relocate", r1.rid, p, r2.rid, q)
                        if delta < -EPS:
                            return delta, move
                        if best_move is None or delta < best_move[0] - EPS:
                            best_move = (delta, move)
        return best_move

    def _scan_swap(self, best_cost, global_best):
        best_move = None
        nr = len(self.routes)
        for i1 in range(nr):
            r1 = self.routes[i1]
            seq1 = [0] + r1.nodes + [0]
            for i2 in range(i1 + 1, nr):
                r2 = self.routes[i2]
                seq2 = [0] + r2.nodes + [0]
                for p, c1 in enumerate(r1.nodes):
                    a1, b1 = seq1[p], seq1[p + 2]
                    for q, c2 in enumerate(r2.nodes):
                        if r1.load - self.N[c1] + self.N[c2] > self.Q:
                            continue
                        if r2.load - self.N[c2] + self.N[c1] > self.Q:
                            continue
                        a2, b2 = seq2[q], seq2[q + 2]
                        d1 = (
                            self.D[a1, c2] + self.D[c2, b1] - self.D[a1, c1] - self.D[c1, b1]
                        )
                        d2 = (
                            self.D[a2, c1] + self.D[c1, b2] - self.D[a2, c2] - self.D[c2, b2]
                        )
                        t1 = (
                            self.T[a1, c2] + self.T[c2, b1] - self.T[a1, c1] - self.T[c1, b1]
                            + self.S[c2] - self.S[c1]
                        )
                        t2 = (
                            self.T[a2, c1] + self.T[c1, b2] - self.T[a2, c2] - self.T[c2, b2]
                            + self.S[c1] - self.S[c2]
                        )
                        if not self._route_feasible(
                            r1.load - self.N[c1] + self.N[c2], r1.time + t1, r1.dist + d1
                        ):
                            continue
                        if not self._route_feasible(
                            r2.load - self.N[c2] + self.N[c1], r2.time + t2, r2.dist + d2
                        ):
                            continue
                        delta = d1 + d2
                        tabu = self._is_tabu(c1, r2.rid) or self._is_tabu(c2, r1.rid)
                        if tabu and best_cost + delta >= global_best - EPS:
                            continue
                        move = ("swap", r1.rid, p, r2.rid, q)
                        if delta < -EPS:
                            return delta, move
                        if best_move is None or delta < best_move[0] - EPS:
                            best_move = (delta, move)
        return best_move

    def _scan_two_opt(self):
        """Intra-route segment reversal; prefix sums handle asymmetry."""
        best_move = None
        for r in self.routes:
            L = len(r.nodes)
            if L < 2:
                continue
            seq = [0] + r.nodes + [0]
            m = len(seq)
            fT = np.zeros(m)
            rT = np.zeros(m)
            fD = np.zeros(m)
            rD = np.zeros(m)
            for p in range(m - 1):
                fT[p + 1] = fT[p] + self.T[seq[p], seq[p + 1]]
                rT[p + 1] = rT[p] + self.T[seq[p + 1], seq[p]]
                fD[p + 1] = fD[p] + self.D[seq[p], seq[p + 1]]
                rD[p + 1] = rD[p] + self.D[seq[p + 1], seq[p]]
            for i in range(1, L):
                for j in range(i + 1, L + 1):
                    dd = (
                        self.D[seq[i - 1], seq[j]]
                        + (rD[j] - rD[i])
                        + self.D[seq[i], seq[j + 1]]
                        - (fD[j + 1] - fD[i - 1])
                    )
                    if best_move is not None and dd >= best_move[0] - EPS:
                        continue
                    dt = (
                        self.T[seq[i - 1], seq[j]]
                        + (rT[j] - rT[i])
                        + self.T[seq[i], seq[j + 1]]
                        - (fT[j + 1] - fT[i - 1])
                    )
                    if not self._route_feasible(r.load, r.time + dt, r.dist + dd):
                        continue
                    move = ("two_opt", r.rid, i, j)
                    if dd < -EPS:
                        return dd, move
                    if best_move is None or dd < best_move[0] - EPS:
                        best_move = (dd, move)
        return best_move

    def _scan_two_opt_star(self):
        """Inter-route tail exchange at every cut pair."""
        best_move = None
        nr = len(self.routes)
        pre = {}
        suf = {}
        for r in self.routes:
            L = len(r.nodes)
            pT = np.zeros(L + 1)
            pD = np.zeros(L + 1)
            pL = np.zeros(L + 1)
            for a in range(1, L + 1):
                prev = r.nodes[a - 2] if a >= 2 else 0
                c = r.nodes[a - 1]
                pT[a] = pT[a - 1] + self.T[prev, c] + self.S[c]
                pD[a] = pD[a - 1] + self.D[prev, c]
                pL[a] = pL[a - 1] + self.N[c]
            sT = np.zeros(L + 1)
            sD = np.zeros(L + 1)
            sL = np.zeros(L + 1)
            for b in range(L - 1, -1, -1):
                c = r.nodes[b]
                nxt = r.nodes[b + 1] if b + 1 < L else 0
                sT[b] = sT[b + 1] + self.S[c] + self.T[c, nxt]
                sD[b] = sD[b + 1] + self.D[c, nxt]
                sL[b] = sL[b + 1] + self.N[c]
            pre[r.rid] = (pT, pD, pL)
            suf[r.rid] = (sT, sD, sL)

        def ends(r, a):
            return r.nodes[a - 1] if a > 0 else 0

        def starts(r, b):
            return r.nodes[b] if b < len(r.nodes) else 0

        for i1 in range(nr):
            r1 = self.routes[i1]
            p1T, p1D, p1L = pre[r1.rid]
            s1T, s1D, s1L = suf[r1.rid]
            for i2 in range(i1 + 1, nr):
                r2 = self.routes[i2]
                p2T, p2D, p2L = pre[r2.rid]
                s2T, s2D, s2L = suf[r2.rid]
                L1, L2 = len(r1.nodes), len(r2.nodes)
                for a in range(L1 + 1):
                    x = ends(r1, a)
                    for b in range(L2 + 1):
                        if a == L1 and b == L2:
                            continue
                        if a == 0 and b == 0:
                            continue
                        y = starts(r2, b)
                        u = ends(r2, b)
                        v = starts(r1, a)
                        new1_d = p1D[a] + self.D[x, y] + s2D[b]
                        new2_d = p2D[b] + self.D[u, v] + s1D[a]
                        delta = new1_d + new2_d - r1.dist - r2.dist
                        if best_move is not None and delta >= best_move[0] - EPS:
                            continue
                        new1_t = p1T[a] + self.T[x, y] + s2T[b]
                        new2_t = p2T[b] + self.T[u, v] + s1T[a]
                        if not self._route_feasible(
                            int(p1L[a] + s2L[b]), new1_t, new1_d
                        ):
                            continue
                        if not self._route_feasible(
                            int(p2L[b] + s1L[a]), new2_t, new2_d
                        ):
                            continue
                        move = ("two_opt_star", r1.rid, a, r2.rid, b)
                        if delta < -EPS:
                            return delta, move
                        if best_move is None or delta < best_move[0] - EPS:
                            best_move = (delta, move)
        return best_move

    # ---- applying moves ------------------------------------------------

    def _route_by_id(self, rid: int) -> _Route:
        for r in self.routes:
            if r.rid == rid:
                return r
        raise KeyError(rid)

    def _apply(self, move) -> None:
        kind = move[0]
        if kind == "relocate":
            _, rid1, p, rid2, q = move
            r1, r2 = self._route_by_id(rid1), self._route_by_id(rid2)
            c = r1.nodes.pop(p)
            r2.nodes.insert(q, c)
            self._mark_tabu(c, rid1)
            self._refresh(r2)
            if r1.nodes:
                self._refresh(r1)
            else:
                self.routes.remove(r1)
        elif kind == "swap":
            _, rid1, p, rid2, q = move
            r1, r2 = self._route_by_id(rid1), self._route_by_id(rid2)
            c1, c2 = r1.nodes[p], r2.nodes[q]
            r1.nodes[p], r2.nodes[q] = c2, c1
            self._mark_tabu(c1, rid1)
            self._mark_tabu(c2, rid2)
            self._refresh(r1)
            self._refresh(r2)
        elif kind == "two_opt":
            _, rid, i, j = move
            r = self._route_by_id(rid)
            r.nodes[i - 1 : j] = r.nodes[i - 1 : j][::-1]
            self._refresh(r)
        elif kind == "two_opt_star":
            _, rid1, a, rid2, b = move
            r1, r2 = self._route_by_id(rid1), self._route_by_id(rid2)
            head1, tail1 = r1.nodes[:a], r1.nodes[a:]
            head2, tail2 = r2.nodes[:b], r2.nodes[b:]
            r1.nodes = head1 + tail2
            r2.nodes = head2 + tail1
            for r in (r1, r2):
                if r.nodes:
                    self._refresh(r)
                else:
                    self.routes.remove(r)
        else:
            raise ValueError(f"unknown move {kind}")

    # ---- tabu phase ------------------------------------------------------

    def tabu_phase(self, run_best: float = math.inf) -> None:
        """Run tabu iterations; leaves the search at the best visited state.

        First improving feasible non-tabu move per iteration; when nothing
        improves, the best (possibly worsening) non-tabu move is taken.
        Aspiration admits tabu moves only below run_best.
        """
        best_snap = self.snapshot()
        best_cost = self.total_dist()
        cur_cost = best_cost
        stall = 0
        iters = 0
        while (
            stall < self.cfg.inner_patience
            and iters < self.cfg.inner_cap
            and _time.monotonic() < self.deadline
        ):
            self.iteration += 1
            iters += 1
            aspiration = min(run_best, best_cost)
            improving = None
            fallback = None
            for scan in self._enabled_scans():
                res = scan(cur_cost, aspiration)
                if res is None:
                    continue
                if res[0] < -EPS:
                    improving = res
                    break
                if fallback is None or res[0] < fallback[0] - EPS:
                    fallback = res
            found = improving or fallback
            if found is None:
                break
            delta, move = found
            self._apply(move)
            cur_cost += delta
            if cur_cost < best_cost - EPS:
                best_cost = cur_cost
                best_snap = self.snapshot()
                stall = 0
            else:
                stall += 1
        self.restore(best_snap)

    def _enabled_scans(self):
        scans = []
        if self.cfg.use_relocate:
            scans.append(lambda cur, gb: self._scan_relocate(cur, gb))
        if self.cfg.use_swap:
            scans.append(lambda cur, gb: self._scan_swap(cur, gb))
        if self.cfg.use_two_opt:
            scans.append(lambda cur, gb: self._scan_two_opt())
        if self.cfg.use_two_opt_star:
            scans.append(lambda cur, gb: self._scan_two_opt_star())
        return scans

    # ---- perturbation ------------------------------------------------------

    def perturb(self, extra: int = 0) -> None:
        """Eject random customers and greedily reinsert them (random order)."""
        present = sorted(c for r in self.routes for c in r.nodes)
        count = min(self.n_eject + extra, len(present))
        if count == 0:
            return
        eject = self.rng.choice(len(present), size=count, replace=False)
        victims = [present[i] for i in sorted(int(e) for e in eject)]
        for r in self.routes:
            r.nodes = [c for c in r.nodes if c not in victims]
        self.routes = [r for r in self.routes if r.nodes]
        for r in self.routes:
            self._refresh(r)
        order = self.rng.permutation(len(victims))
        for oi in order:
            c = victims[int(oi)]
            best = None
            for r in self.routes:
                if r.load + self.N[c] > self.Q:
                    continue
                seq = [0] + r.nodes + [0]
                for pos in range(len(r.nodes) + 1):
                    a, b = seq[pos], seq[pos + 1]
                    dd = self.D[a, c] + self.D[c, b] - self.D[a, b]
                    dt = self.T[a, c] + self.T[c, b] - self.T[a, b] + self.S[c]
                    if not self._route_feasible(
                        r.load + self.N[c], r.time + dt, r.dist + dd
                    ):
                        continue
                    if best is None or dd < best[0] - EPS:
                        best = (dd, r, pos)
            if best is None:
                r = self._new_route([c])
                if not self._route_feasible(r.load, r.time, r.dist):
                    raise UnplaceableNodeError(c)
                self.routes.append(r)
            else:
                _, r, pos = best
                r.nodes.insert(pos, c)
                self._refresh(r)


def solve_its(inst: TcvrpInstance, cfg: ItsConfig | None = None) -> tuple[Solution, float]:
    """Best solution found by iterated tabu search, with its cost (VMT)."""
    cfg = cfg or ItsConfig()
    if inst.n == 1:
        sol = Solution.from_routes(inst, [(0, 1, 0)])
        return sol, sol.vmt_mi
    start = _time.monotonic()
    deadline = start + cfg.time_budget_s
    best_snap = None
    best_cost = math.inf
    for restart in range(cfg.restarts):
        search = _Search(inst, _restart_cfg(cfg, restart))
        search.deadline = deadline
        search.construct()
        search.tabu_phase(best_cost)
        if search.total_dist() < best_cost - EPS:
            best_cost = search.total_dist()
            best_snap = search.snapshot()
        stall_rounds = 0
        while (
            stall_rounds < cfg.max_stall_rounds
            and _time.monotonic() < deadline
        ):
            # escalate the shake the longer the search stays stuck
            search.perturb(extra=stall_rounds // 10)
            search.tabu_phase(best_cost)
            cost = search.total_dist()
            if cost < best_cost - EPS:
                best_cost = cost
                best_snap = search.snapshot()
                stall_rounds = 0
            else:
                stall_rounds += 1
        if _time.monotonic() >= deadline:
            break
    sol = Solution.from_routes(
        inst, [tuple([0] + nodes + [0]) for nodes in best_snap]
    )
    return sol, sol.vmt_mi


def _restart_cfg(cfg: ItsConfig, restart: int) -> ItsConfig:
    if restart == 0:
        return cfg
    return replace(cfg, seed=cfg.seed + 7919 * restart)


def best_of_runs(
    inst: TcvrpInstance, cfg: ItsConfig | None = None, runs: int = 1
) -> tuple[Solution, float]:
    """Minimum-cost solution over `runs` independently seeded searches."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    cfg = cfg or ItsConfig()
    best: tuple[Solution, float] | None = None
    errors: list[Exception] = []
    for r in range(runs):
        try:
            sol, cost = solve_its(inst, replace(cfg, seed=cfg.seed + r))
        except UnplaceableNodeError as exc:
            errors.append(exc)
            continue
        if best is None or cost < best[1] - EPS:
            best = (sol, cost)
    if best is None:
        raise errors[0]
    return best
