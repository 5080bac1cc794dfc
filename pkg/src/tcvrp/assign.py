"""Provider splits and capacity-constrained customer-to-depot assignment.

Customers are split among providers by independent seeded draws with the
providers' market shares.  Each provider then assigns its customers to its
depots by an exact minimum-total-Manhattan-distance transportation problem
(solved as a rectangular assignment over depot capacity slots).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

SHARE_TOL = 1e-9


@dataclass(frozen=True)
class Customer:
    id: int
    x: float
    y: float
    demand: int = 1

    def __post_init__(self):
        if self.demand < 1:
            raise ValueError(f"customer {self.id}: demand must be >= 1")


@dataclass(frozen=True)
class Depot:
    id: int
    x: float
    y: float
    capacity: int
    provider: str = ""


@dataclass(frozen=True)
class ProviderSplit:
    """Market shares by provider name; shares must sum to 1."""

    shares: dict[str, float]

    def __post_init__(self):
        if not self.shares:
            raise ValueError("at least one provider required")
        if any(s < 0 or s > 1 for s in self.shares.values()):
            raise ValueError("shares must lie in [0, 1]")
        total = sum(self.shares.values())
        if abs(total - 1.0) > SHARE_TOL:
            raise ValueError(f"shares sum to {total}, expected 1")

    def without(self, provider: str) -> "ProviderSplit":
        """Drop a provider, spreading its share equally over the rest."""
        if provider not in self.shares:
            raise KeyError(provider)
        rest = {p: s for p, s in self.shares.items() if p != provider}
        if not rest:
            raise ValueError("cannot drop the only provider")
        bump = self.shares[provider] / len(rest)
        return ProviderSplit({p: s + bump for p, s in rest.items()})


@dataclass
class DepotAssignment:
    """Partition of customers over depots, with the realized total distance."""

    by_depot: dict[int, list[int]]
    total_dist_mi: float
    customer_depot: dict[int, int] = field(init=False)

    def __post_init__(self):
        self.customer_depot = {
            c: d for d, members in self.by_depot.items() for c in members
        }


def manhattan(ax: float, ay: float, bx: float, by: float) -> float:
    return abs(ax - bx) + abs(ay - by)


def split_by_provider(
    customers: list[Customer], split: ProviderSplit, seed: int
) -> dict[str, list[Customer]]:
    """Independently draw a provider for each customer; seeded, reproducible."""
    providers = sorted(split.shares)
    probs = np.array([split.shares[p] for p in providers])
    probs = probs / probs.sum()  # shed the <=1e-9 validation slack
    out: dict[str, list[Customer]] = {p: [] for p in providers}
    if not customers:
        return out
    rng = np.random.default_rng(seed)
    draws = rng.choice(len(providers), size=len(customers), p=probs)
    for cust, k in zip(customers, draws):
        out[providers[int(k)]].append(cust)
    return out


def assign_to_depots(
    customers: list[Customer], depots: list[Depot]
) -> DepotAssignment:
    """Exact min-total-distance assignment under depot capacities.

    Expands each depot into `capacity` identical slots and solves the
    resulting rectangular assignment problem, which is the transportation
    problem with unit supplies.  Deterministic for a fixed input order.
    """
    if not depots:
        raise ValueError("at least one depot required")
    total_cap = sum(d.capacity for d in depots)
    if total_cap < len(customers):
        raise ValueError(
            f"insufficient depot capacity: {total_cap} slots for "
            f"{len(customers)} customers (short by {len(customers) - total_cap})"
        )
    by_depot: dict[int, list[int]] = {d.id: [] for d in depots}
    if not customers:
        return DepotAssignment(by_depot=by_depot, total_dist_mi=0.0)

    base = np.zeros((len(customers), len(depots)))
    for i, c in enumerate(customers):
        for j, d in enumerate(depots):
            base[i, j] = manhattan(c.x, c.y, d.x, d.y)
    slots = np.repeat(np.arange(len(depots)), [d.capacity for d in depots])
    cost = base[:, slots]
    rows, cols = linear_sum_assignment(cost)
    total = float(cost[rows, cols].sum())
    for i, s in zip(rows, cols):
        by_depot[depots[slots[s]].id].append(customers[i].id)
    return DepotAssignment(by_depot=by_depot, total_dist_mi=total)


def default_capacities(n_customers: int, n_depots: int, slack: float = 1.2) -> int:
    """Per-depot capacity: balanced load plus slack, rounded up."""
    if n_depots < 1:
        raise ValueError("need at least one depot")
    return int(np.ceil(slack * n_customers / n_depots))
