"""Road network representation and asymmetric travel-time/distance matrices.

Arcs are unidirectional road segments with a length (miles) and a free-flow
speed (mph).  All travel times are handled in minutes.  Shortest paths
minimize travel time; the reported distance is the mileage of the
time-optimal path.  Ties are broken by smaller distance, then by the
lexicographically smallest arc-id sequence, so matrices and reconstructed
paths are deterministic.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field

import numpy as np

TIME_TOL_MIN = 1e-9


class UnreachableError(ValueError):
    """No path exists between a requested pair of vertices."""

    def __init__(self, src, dst):
        self.src = src
        self.dst = dst
        super().__init__(f"no path from vertex {src!r} to vertex {dst!r}")


@dataclass(frozen=True)
class Arc:
    id: int
    tail: int
    head: int
    length_mi: float
    speed_mph: float

    @property
    def time_min(self) -> float:
        return 60.0 * self.length_mi / self.speed_mph

    def midpoint(self, coords) -> tuple[float, float]:
        xt, yt = coords[self.tail]
        xh, yh = coords[self.head]
        return (0.5 * (xt + xh), 0.5 * (yt + yh))


@dataclass
class RoadNetwork:
    """Directed road graph. Immutable by convention once constructed."""

    coords: dict[int, tuple[float, float]]
    arcs: list[Arc]
    _out: dict[int, list[Arc]] = field(init=False, repr=False)
    _in: dict[int, list[Arc]] = field(init=False, repr=False)

    def __post_init__(self):
        seen_ids = set()
        for a in self.arcs:
            if a.tail not in self.coords or a.head not in self.coords:
                raise ValueError(f"arc {a.id} references unknown vertex")
            if a.tail == a.head:
                raise ValueError(f"arc {a.id} is a self-loop")
            if not a.length_mi > 0:
                raise ValueError(f"arc {a.id} has non-positive length")
            if not a.speed_mph > 0:
                raise ValueError(f"arc {a.id} has non-positive speed")
            if a.id in seen_ids:
                raise ValueError(f"duplicate arc id {a.id}")
            seen_ids.add(a.id)
        out: dict[int, list[Arc]] = {v: [] for v in self.coords}
        inc: dict[int, list[Arc]] = {v: [] for v in self.coords}
        for a in self.arcs:
            out[a.tail].append(a)
            inc[a.head].append(a)
        for v in self.coords:
            out[v].sort(key=lambda a: a.id)
            inc[v].sort(key=lambda a: a.id)
        object.__setattr__(self, "_out", out)
        object.__setattr__(self, "_in", inc)

    @property
    def vertices(self) -> list[int]:
        return list(self.coords)

    def out_arcs(self, v: int) -> list[Arc]:
        return self._out[v]

    def in_arcs(self, v: int) -> list[Arc]:
        return self._in[v]


@dataclass(frozen=True)
class TravelMatrices:
    """Asymmetric travel time (minutes) and distance (miles) between nodes."""

    nodes: tuple[int, ...]
    time: np.ndarray
    dist: np.ndarray

    def __post_init__(self):
        self.time.flags.writeable = False
        self.dist.flags.writeable = False

    def index(self, node: int) -> int:
        return self.nodes.index(node)


def _dijkstra(net: RoadNetwork, source: int) -> dict[int, tuple[float, float]]:
    """Labels (time, dist) from source to every reachable vertex.

    The label order is lexicographic: minimize time first, then distance.
    Both components are additive and positive, so label-setting is valid.
    """
    labels: dict[int, tuple[float, float]] = {}
    heap = [(0.0, 0.0, source)]
    while heap:
        t, d, u = heapq.heappop(heap)
        if u in labels:
            continue
        labels[u] = (t, d)
        for a in net.out_arcs(u):
            if a.head in labels:
                continue
            heapq.heappush(heap, (t + a.time_min, d + a.length_mi, a.head))
    return labels


def _dijkstra_reverse(net: RoadNetwork, sink: int) -> dict[int, tuple[float, float]]:
    labels: dict[int, tuple[float, float]] = {}
    heap = [(0.0, 0.0, sink)]
    while heap:
        t, d, u = heapq.heappop(heap)
        if u in labels:
            continue
        labels[u] = (t, d)
        for a in net.in_arcs(u):
            if a.tail in labels:
                continue
            heapq.heappush(heap, (t + a.time_min, d + a.length_mi, a.tail))
    return labels


def shortest_paths(net: RoadNetwork, sources, targets) -> TravelMatrices:
    """Time/distance matrices over the union of sources and targets.

    Raises UnreachableError for the first pair (in node order) with no
    connecting path, and ValueError on empty input sets.
    """
    sources = set(sources)
    targets = set(targets)
    if not sources or not targets:
        raise ValueError("sources and targets must be nonempty")
    missing = (sources | targets) - set(net.coords)
    if missing:
        raise ValueError(f"unknown vertices: {sorted(missing)}")
    nodes = tuple(sorted(sources | targets))
    n = len(nodes)
    time = np.zeros((n, n))
    dist = np.zeros((n, n))
    for i, u in enumerate(nodes):
        labels = _dijkstra(net, u)
        for j, v in enumerate(nodes):
            if v not in labels:
                raise UnreachableError(u, v)
            time[i, j], dist[i, j] = labels[v]
    return TravelMatrices(nodes=nodes, time=time, dist=dist)


def reconstruct_path(net: RoadNetwork, src: int, dst: int) -> list[int]:
    """Arc ids of the deterministic time-optimal path from src to dst.

    Among all minimum-(time, dist) paths the one with the lexicographically
    smallest arc-id sequence is returned: at each step the smallest arc id
    that still lies on an optimal remainder is taken.
    """
    if src == dst:
        return []
    back = _dijkstra_reverse(net, dst)
    if src not in back:
        raise UnreachableError(src, dst)
    total_t, total_d = back[src]
    path: list[int] = []
    acc_t = acc_d = 0.0
    u = src
    while u != dst:
        step = None
        for a in net.out_arcs(u):
            rem = back.get(a.head)
            if rem is None:
                continue
            if (
                abs(acc_t + a.time_min + rem[0] - total_t) <= TIME_TOL_MIN
                and abs(acc_d + a.length_mi + rem[1] - total_d) <= 1e-9
            ):
                step = a
                break
        if step is None:  # float drift beyond tolerance; should not happen
            raise UnreachableError(src, dst)
        path.append(step.id)
        acc_t += step.time_min
        acc_d += step.length_mi
        u = step.head
    return path


def road_network_to_json(net: RoadNetwork) -> dict:
    return {
        "vertices": [{"id": v, "x": x, "y": y} for v, (x, y) in net.coords.items()],
        "arcs": [
            {
                "id": a.id,
                "from": a.tail,
                "to": a.head,
                "length_mi": a.length_mi,
                "speed_mph": a.speed_mph,
            }
            for a in net.arcs
        ],
    }


def road_network_from_json(obj: dict) -> RoadNetwork:
    coords = {int(v["id"]): (float(v["x"]), float(v["y"])) for v in obj["vertices"]}
    arcs = [
        Arc(
            id=int(a["id"]),
            tail=int(a["from"]),
            head=int(a["to"]),
            length_mi=float(a["length_mi"]),
            speed_mph=float(a["speed_mph"]),
        )
        for a in obj["arcs"]
    ]
    return RoadNetwork(coords=coords, arcs=arcs)


def load_network(path) -> RoadNetwork:
    with open(path) as fh:
        return road_network_from_json(json.load(fh))


def save_network(net: RoadNetwork, path, seed=None) -> None:
    obj = road_network_to_json(net)
    if seed is not None:
        obj = {"seed": seed, **obj}
    with open(path, "w") as fh:
        json.dump(obj, fh)
