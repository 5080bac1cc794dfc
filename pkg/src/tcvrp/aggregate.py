"""Customer aggregation onto arc-midpoint super-locations.

Each customer is attached to the arc midpoint nearest in Manhattan distance
(ties to the smaller arc id).  A super-location aggregates its members'
package counts, and its visit sequence is solved as a small TSP anchored at
the midpoint: Manhattan metric at a fixed crawl speed, exact for up to 12
members, annealed heuristic beyond that.

The instance builder then layers the aggregation onto the network matrices:
service time S_i = intra tour minutes + N_i * P, and departure distances
D_ij pick up the intra tour mileage of i exactly once.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .assign import Customer, manhattan
from .instance import TcvrpInstance
from .network import RoadNetwork, TravelMatrices
from . import tsp

INTRA_SPEED_MPH = 15.0
EXACT_MEMBER_CAP = 12  # anchor + 12 members = Held-Karp cutoff


@dataclass(frozen=True)
class SuperLocation:
    id: int  # id of the arc whose midpoint anchors the cluster
    anchor: tuple[float, float]
    vertex: int  # network vertex used for travel matrices (arc head)
    members: tuple[int, ...]  # customer ids
    packages: int
    intra_time_min: float = 0.0
    intra_dist_mi: float = 0.0
    intra_exact: bool = True


def cluster_customers(
    customers: list[Customer], net: RoadNetwork
) -> list[SuperLocation]:
    """Attach each customer to its nearest arc midpoint; one cluster per midpoint."""
    if not net.arcs:
        raise ValueError("network has no arcs")
    arcs = sorted(net.arcs, key=lambda a: a.id)
    mids = [a.midpoint(net.coords) for a in arcs]
    mx = np.array([m[0] for m in mids])
    my = np.array([m[1] for m in mids])
    groups: dict[int, list[Customer]] = {}
    # argmin returns the first minimizer, i.e. the smallest arc id on ties
    for start in range(0, len(customers), 512):
        chunk = customers[start : start + 512]
        cx = np.array([c.x for c in chunk])[:, None]
        cy = np.array([c.y for c in chunk])[:, None]
        best = np.argmin(np.abs(cx - mx[None, :]) + np.abs(cy - my[None, :]), axis=1)
        for c, k in zip(chunk, best):
            groups.setdefault(int(k), []).append(c)
    out = []
    for k in sorted(groups):
        members = groups[k]
        out.append(
            SuperLocation(
                id=arcs[k].id,
                anchor=mids[k],
                vertex=arcs[k].head,
                members=tuple(c.id for c in members),
                packages=sum(c.demand for c in members),
            )
        )
    return out


def nearest_anchor_vertex(net: RoadNetwork, x: float, y: float) -> int:
    """Matrix vertex of the arc midpoint nearest to a point (depot snapping)."""
    best = min(
        net.arcs, key=lambda a: (manhattan(x, y, *a.midpoint(net.coords)), a.id)
    )
    return best.head


def intra_tour(
    sl: SuperLocation,
    customers: dict[int, Customer],
    speed_mph: float = INTRA_SPEED_MPH,
    seed: int = 0,
) -> tuple[float, float, bool]:
    """Closed minimum-time tour anchor -> members -> anchor, Manhattan metric.

    Returns (minutes, miles, exact). Exact via Held-Karp for small member
    sets, annealed heuristic above EXACT_MEMBER_CAP.
    """
    if not sl.members:
        raise ValueError("super-location has no members")
    pts = [sl.anchor] + [(customers[m].x, customers[m].y) for m in sl.members]
    n = len(pts)
    cost = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                cost[i, j] = 60.0 * manhattan(*pts[i], *pts[j]) / speed_mph
    inst = tsp.TspInstance(cost)
    if len(sl.members) <= EXACT_MEMBER_CAP:
        tour, minutes = tsp.solve_exact(inst)
        exact = True
    else:
        tour, minutes, exact = tsp.solve_heuristic(inst, seed=seed)
    miles = minutes * speed_mph / 60.0
    return float(minutes), float(miles), exact


def with_intra_tours(
    sls: list[SuperLocation],
    customers: list[Customer],
    speed_mph: float = INTRA_SPEED_MPH,
    seed: int = 0,
) -> list[SuperLocation]:
    lookup = {c.id: c for c in customers}
    out = []
    for sl in sls:
        minutes, miles, exact = intra_tour(sl, lookup, speed_mph=speed_mph, seed=seed)
        out.append(
            replace(
                sl, intra_time_min=minutes, intra_dist_mi=miles, intra_exact=exact
            )
        )
    return out


def build_instance(
    depot_vertex: int,
    super_locations: list[SuperLocation],
    matrices: TravelMatrices,
    capacity: int,
    tmax_min: float,
    dwell_min_per_customer: float,
    dmax_mi: float | None = None,
) -> TcvrpInstance:
    """Assemble the routing instance: depot is node 0, super-locations 1..n.

    T is the raw path-time matrix.  D adds each node's intra tour mileage to
    all of its outgoing entries (charged once, on departure).  Per-node
    feasibility (depot round trips under Tbar/Dbar, demands under Q) is
    verified and violations raise naming the node.
    """
    n = len(super_locations)
    if n == 0:
        raise ValueError("no super-locations")
    nodes = [depot_vertex] + [sl.vertex for sl in super_locations]
    idx = [matrices.index(v) for v in nodes]
    T = matrices.time[np.ix_(idx, idx)].copy()
    D = matrices.dist[np.ix_(idx, idx)].copy()
    np.fill_diagonal(T, 0.0)
    np.fill_diagonal(D, 0.0)
    for i, sl in enumerate(super_locations, start=1):
        D[i, :] += sl.intra_dist_mi
        D[i, i] = 0.0
    demand = np.array([sl.packages for sl in super_locations], dtype=np.int64)
    service = np.array(
        [
            sl.intra_time_min + sl.packages * dwell_min_per_customer
            for sl in super_locations
        ]
    )
    inst = TcvrpInstance(
        n=n,
        demand=demand,
        service_min=service,
        time_min=T,
        dist_mi=D,
        capacity=capacity,
        tmax_min=tmax_min,
        dmax_mi=dmax_mi,
    )
    inst.check_node_feasibility()
    return inst
