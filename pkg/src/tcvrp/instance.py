"""Depot-level routing instance: demands, service times, travel matrices.

Node 0 is the depot; nodes 1..n are super-locations.  T holds minutes, D
miles; both are asymmetric with zero diagonals.  D entries leaving node i
already include the intra-super-location tour mileage of i, and S_i includes
the intra tour time plus the per-customer dwell minutes, so route time is
simply arc times plus member service times.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class InfeasibleNodeError(ValueError):
    """A node violates a depot round-trip or capacity bound at construction."""

    def __init__(self, node: int, bound: str, detail: str):
        self.node = node
        self.bound = bound
        super().__init__(f"node {node} violates {bound}: {detail}")


@dataclass(frozen=True)
class TcvrpInstance:
    n: int
    demand: np.ndarray  # packages per super-location, length n (nodes 1..n)
    service_min: np.ndarray  # dwell minutes per super-location, length n
    time_min: np.ndarray  # (n+1) x (n+1) minutes
    dist_mi: np.ndarray  # (n+1) x (n+1) miles
    capacity: int  # Q, packages per vehicle
    tmax_min: float  # max allowed route time
    dmax_mi: float | None = None  # max route distance (BEV range); None for CVs

    def __post_init__(self):
        for arr in (self.demand, self.service_min, self.time_min, self.dist_mi):
            arr.flags.writeable = False

    @property
    def size(self) -> int:
        return self.n

    def check_node_feasibility(self) -> None:
        """Reject nodes that no single vehicle could serve on their own."""
        T, D, S, N = self.time_min, self.dist_mi, self.service_min, self.demand
        for i in range(1, self.n + 1):
            if N[i - 1] > self.capacity:
                raise InfeasibleNodeError(
                    i, "capacity Q", f"N={N[i - 1]} > Q={self.capacity}"
                )
            rt = T[0, i] + S[i - 1] + T[i, 0]
            if rt > self.tmax_min + 1e-9:
                raise InfeasibleNodeError(
                    i, "time limit Tbar", f"round trip {rt:.3f} min > {self.tmax_min} min"
                )
            if self.dmax_mi is not None:
                rd = D[0, i] + D[i, 0]
                if rd > self.dmax_mi + 1e-9:
                    raise InfeasibleNodeError(
                        i, "distance limit Dbar", f"round trip {rd:.3f} mi > {self.dmax_mi} mi"
                    )

    def to_json(self, meta: dict | None = None) -> dict:
        obj = {
            "depot": 0,
            "n": self.n,
            "N": [int(v) for v in self.demand],
            "S_min": [float(v) for v in self.service_min],
            "T_min": [[float(v) for v in row] for row in self.time_min],
            "D_mi": [[float(v) for v in row] for row in self.dist_mi],
            "Q": int(self.capacity),
            "Tbar_min": float(self.tmax_min),
            "Dbar_mi": None if self.dmax_mi is None else float(self.dmax_mi),
        }
        if meta:
            obj["meta"] = meta
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "TcvrpInstance":
        n = int(obj["n"])
        dbar = obj.get("Dbar_mi")
        inst = cls(
            n=n,
            demand=np.array(obj["N"], dtype=np.int64),
            service_min=np.array(obj["S_min"], dtype=float),
            time_min=np.array(obj["T_min"], dtype=float),
            dist_mi=np.array(obj["D_mi"], dtype=float),
            capacity=int(obj["Q"]),
            tmax_min=float(obj["Tbar_min"]),
            dmax_mi=None if dbar is None else float(dbar),
        )
        _validate_shapes(inst)
        return inst


def _validate_shapes(inst: TcvrpInstance) -> None:
    n = inst.n
    if inst.demand.shape != (n,) or inst.service_min.shape != (n,):
        raise ValueError("N and S_min must have length n")
    if inst.time_min.shape != (n + 1, n + 1) or inst.dist_mi.shape != (n + 1, n + 1):
        raise ValueError("T_min and D_mi must be (n+1) x (n+1)")
    if (inst.demand < 1).any():
        raise ValueError("demands must be >= 1")
    if (inst.service_min < 0).any():
        raise ValueError("service times must be >= 0")


def load_instance(path) -> TcvrpInstance:
    with open(path) as fh:
        return TcvrpInstance.from_json(json.load(fh))


def save_instance(inst: TcvrpInstance, path, meta: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(inst.to_json(meta=meta), fh)
