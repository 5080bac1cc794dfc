"""Small asymmetric TSP solvers for intra-super-location visit sequencing.

solve_exact is Held-Karp dynamic programming over subsets (globally optimal,
capped at 13 points).  solve_heuristic is nearest-neighbor construction,
simulated annealing with geometric cooling, then a first-improvement descent
combining segment reversal and or-opt relocations (reversal alone is weak on
asymmetric matrices).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EXACT_MAX_SIZE = 13


@dataclass(frozen=True)
class TspInstance:
    """Cost matrix in minutes, asymmetric, zero diagonal. Anchor is index 0."""

    cost: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.cost, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("cost matrix must be square")
        if (c < 0).any():
            raise ValueError("cost matrix must be nonnegative")
        if np.abs(np.diag(c)).max(initial=0.0) > 0:
            raise ValueError("cost matrix must have a zero diagonal")
        object.__setattr__(self, "cost", c)

    @property
    def size(self) -> int:
        return self.cost.shape[0]


def tour_cost(inst: TspInstance, tour) -> float:
    return float(sum(inst.cost[tour[p], tour[p + 1]] for p in range(len(tour) - 1)))


def solve_exact(inst: TspInstance) -> tuple[tuple[int, ...], float]:
    """Optimal closed tour (0, ..., 0) by Held-Karp dynamic programming."""
    n = inst.size
    if n > EXACT_MAX_SIZE:
        raise ValueError(
            f"instance size {n} exceeds exact cutoff {EXACT_MAX_SIZE}; "
            "use solve_heuristic"
        )
    if n == 1:
        return (0, 0), 0.0
    c = inst.cost
    m = n - 1  # non-anchor nodes, bit b <-> node b+1
    full = (1 << m) - 1
    # dp[mask][j] = best cost from anchor through set mask ending at node j+1
    dp = np.full((full + 1, m), np.inf)
    parent = np.full((full + 1, m), -1, dtype=np.int64)
    for j in range(m):
        dp[1 << j, j] = c[0, j + 1]
    for mask in range(1, full + 1):
        row = dp[mask]
        for j in range(m):
            if not (mask >> j) & 1:
                continue
            cur = row[j]
            if not np.isfinite(cur):
                continue
            rest = full & ~mask
            k = rest
            while k:
                b = (k & -k).bit_length() - 1
                nxt = mask | (1 << b)
                cand = cur + c[j + 1, b + 1]
                if cand < dp[nxt, b]:
                    dp[nxt, b] = cand
                    parent[nxt, b] = j
                k &= k - 1
    best_j = -1
    best = np.inf
    for j in range(m):
        cand = dp[full, j] + c[j + 1, 0]
        if cand < best:
            best = cand
            best_j = j
    seq = []
    mask, j = full, best_j
    while j >= 0:
        seq.append(j + 1)
        pj = parent[mask, j]
        mask &= ~(1 << j)
        j = pj
    seq.reverse()
    return (0, *seq, 0), float(best)


def _nearest_neighbor(c: np.ndarray) -> list[int]:
    n = c.shape[0]
    unvisited = set(range(1, n))
    tour = [0]
    cur = 0
    while unvisited:
        nxt = min(unvisited, key=lambda v: (c[cur, v], v))
        tour.append(nxt)
        unvisited.remove(nxt)
        cur = nxt
    tour.append(0)
    return tour


def _reversal_delta(c: np.ndarray, tour, i, j) -> float:
    # reverse tour[i:j+1]; interior arcs flip direction so each is recharged
    before = c[tour[i - 1], tour[i]] + c[tour[j], tour[j + 1]]
    after = c[tour[i - 1], tour[j]] + c[tour[i], tour[j + 1]]
    for p in range(i, j):
        before += c[tour[p], tour[p + 1]]
        after += c[tour[p + 1], tour[p]]
    return after - before


def _oropt_delta(c: np.ndarray, tour, i, L, j) -> float:
    # move segment tour[i:i+L] to sit after position j (j outside segment)
    a, b = tour[i - 1], tour[i + L]
    s0, s1 = tour[i], tour[i + L - 1]
    u, v = tour[j], tour[j + 1]
    removed = c[a, s0] + c[s1, b] + c[u, v]
    added = c[a, b] + c[u, s0] + c[s1, v]
    return added - removed


def _apply_oropt(tour, i, L, j):
    seg = tour[i : i + L]
    rest = tour[:i] + tour[i + L :]
    jj = j if j < i else j - L
    return rest[: jj + 1] + seg + rest[jj + 1 :]


def _descend(c: np.ndarray, tour: list[int]) -> list[int]:
    """First-improvement local search: 2-opt reversals plus or-opt moves."""
    n = len(tour) - 1
    improved = True
    while improved:
        improved = False
        for i in range(1, n):
            for j in range(i + 1, n):
                if _reversal_delta(c, tour, i, j) < -1e-12:
                    tour[i : j + 1] = tour[i : j + 1][::-1]
                    improved = True
        for L in (1, 2, 3):
            for i in range(1, n - L + 1):
                for j in range(0, n):
                    if i - 1 <= j <= i + L - 1:
                        continue
                    if _oropt_delta(c, tour, i, L, j) < -1e-12:
                        tour = _apply_oropt(tour, i, L, j)
                        improved = True
                        break
                else:
                    continue
                break
    return tour


def solve_heuristic(
    inst: TspInstance, seed: int = 0, budget: int | None = None
) -> tuple[tuple[int, ...], float, bool]:
    """Annealed local search; returns (tour, cost, exact=False).

    budget caps the number of annealing proposals; the default scales with
    instance size.  Deterministic for a fixed seed.
    """
    n = inst.size
    if n < 2:
        return (0, 0), 0.0, False
    c = inst.cost
    rng = np.random.default_rng(seed)
    tour = _nearest_neighbor(c)
    cost = tour_cost(inst, tour)
    best_tour, best_cost = list(tour), cost

    t0 = float(c[c > 0].mean()) if (c > 0).any() else 0.0
    if t0 > 0 and n > 3:
        temp = t0
        steps = budget if budget is not None else 400 * n
        step = 0
        while temp >= 1e-3 * t0 and step < steps:
            step += 1
            i = int(rng.integers(1, n))
            j = int(rng.integers(1, n))
            if i == j:
                temp *= 0.995
                continue
            i, j = min(i, j), max(i, j)
            if rng.random() < 0.5:
                delta = _reversal_delta(c, tour, i, j)
                move = ("rev", i, j)
            else:
                delta = _oropt_delta(c, tour, i, 1, j)
                move = ("or", i, j)
            if delta <= 0 or rng.random() < np.exp(-delta / temp):
                if move[0] == "rev":
                    tour[i : j + 1] = tour[i : j + 1][::-1]
                else:
                    tour = _apply_oropt(tour, i, 1, j)
                cost += delta
                if cost < best_cost - 1e-12:
                    best_tour, best_cost = list(tour), cost
            temp *= 0.995

    best_tour = _descend(c, best_tour)
    best_cost = tour_cost(inst, best_tour)
    return tuple(best_tour), best_cost, False
