"""Route-set solutions: the unit every solver emits and the validator checks."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .instance import TcvrpInstance


@dataclass(frozen=True)
class RouteStats:
    load: int
    time_min: float
    dist_mi: float


def route_stats(inst: TcvrpInstance, route: tuple[int, ...]) -> RouteStats:
    """Recompute a route's load/time/distance from the instance matrices.

    `route` starts and ends at depot 0; interior entries are customer nodes.
    """
    if len(route) < 3 or route[0] != 0 or route[-1] != 0:
        raise ValueError(f"route must be depot-anchored: {route}")
    load = 0
    time = 0.0
    dist = 0.0
    for p in range(len(route) - 1):
        i, j = route[p], route[p + 1]
        if not (0 <= i <= inst.n and 0 <= j <= inst.n):
            raise ValueError(f"route references unknown node: {route}")
        time += inst.time_min[i, j]
        dist += inst.dist_mi[i, j]
    for node in route[1:-1]:
        if node == 0:
            raise ValueError(f"depot may not appear mid-route: {route}")
        load += int(inst.demand[node - 1])
        time += float(inst.service_min[node - 1])
    return RouteStats(load=load, time_min=time, dist_mi=dist)


@dataclass(frozen=True)
class Solution:
    routes: tuple[tuple[int, ...], ...]
    stats: tuple[RouteStats, ...]
    vmt_mi: float
    vht_min: float

    @property
    def k(self) -> int:
        return len(self.routes)

    @property
    def cost(self) -> float:
        return self.vmt_mi

    @classmethod
    def from_routes(cls, inst: TcvrpInstance, routes) -> "Solution":
        routes = tuple(tuple(r) for r in routes)
        stats = tuple(route_stats(inst, r) for r in routes)
        return cls(
            routes=routes,
            stats=stats,
            vmt_mi=sum(s.dist_mi for s in stats),
            vht_min=sum(s.time_min for s in stats),
        )

    def to_json(self, meta: dict | None = None) -> dict:
        obj = {
            "routes": [list(r) for r in self.routes],
            "k": self.k,
            "vmt_mi": self.vmt_mi,
            "vht_min": self.vht_min,
        }
        if meta:
            obj["meta"] = meta
        return obj

    @classmethod
    def from_json(cls, obj: dict, inst: TcvrpInstance) -> "Solution":
        return cls.from_routes(inst, [tuple(r) for r in obj["routes"]])


def load_solution(path, inst: TcvrpInstance) -> Solution:
    with open(path) as fh:
        return Solution.from_json(json.load(fh), inst)


def save_solution(sol: Solution, path, meta: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(sol.to_json(meta=meta), fh)
