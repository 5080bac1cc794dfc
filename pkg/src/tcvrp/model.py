"""Explicit MIP form of the routing problem, plus the solution validator.

The formulation minimizes total arc distance subject to four constraint
families: routing degree constraints, capacity flows y, time flows z, and
(when a range limit is present) distance flows z'.  The builder emits every
constraint with coefficients taken verbatim from the instance, so the model
object doubles as a checkable artifact: solutions can be turned into a full
variable assignment and evaluated constraint by constraint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instance import TcvrpInstance
from .solution import Solution, route_stats

FEAS_TOL = 1e-6
BINARY_THRESHOLD = 0.5


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # "binary" | "integer" | "continuous"
    lb: float = 0.0
    ub: float = float("inf")


@dataclass(frozen=True)
class Constraint:
    name: str
    family: str  # "routing" | "capacity" | "time" | "distance"
    coeffs: dict[str, float]
    sense: str  # "E" | "L" | "G"
    rhs: float

    def lhs(self, assignment: dict[str, float]) -> float:
        return sum(c * assignment.get(v, 0.0) for v, c in self.coeffs.items())

    def satisfied(self, assignment: dict[str, float], tol: float = FEAS_TOL) -> bool:
        lhs = self.lhs(assignment)
        if self.sense == "E":
            return abs(lhs - self.rhs) <= tol
        if self.sense == "L":
            return lhs <= self.rhs + tol
        return lhs >= self.rhs - tol


@dataclass
class MipModel:
    n: int
    has_distance_family: bool
    variables: dict[str, Variable]
    constraints: list[Constraint]
    objective: dict[str, float]  # distance coefficient per x variable

    def variable_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for v in self.variables.values():
            out[v.kind] = out.get(v.kind, 0) + 1
        return out

    def family_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.constraints:
            out[c.family] = out.get(c.family, 0) + 1
        return out

    def objective_value(self, assignment: dict[str, float]) -> float:
        return sum(c * assignment.get(v, 0.0) for v, c in self.objective.items())

    def violated(
        self, assignment: dict[str, float], tol: float = FEAS_TOL
    ) -> list[Constraint]:
        return [c for c in self.constraints if not c.satisfied(assignment, tol)]


def _arcs(n: int):
    for i in range(n + 1):
        for j in range(n + 1):
            if i != j:
                yield i, j


def build_mip(inst: TcvrpInstance) -> MipModel:
    """Emit the full variable and constraint set for one instance."""
    inst.check_node_feasibility()
    n = inst.n
    T, D, S, N = inst.time_min, inst.dist_mi, inst.service_min, inst.demand
    Q, tmax, dmax = inst.capacity, inst.tmax_min, inst.dmax_mi
    has_dist = dmax is not None
    custs = range(1, n + 1)

    variables: dict[str, Variable] = {}
    for i, j in _arcs(n):
        variables[f"x_{i}_{j}"] = Variable(f"x_{i}_{j}", "binary", 0.0, 1.0)
    for i, j in _arcs(n):
        variables[f"y_{i}_{j}"] = Variable(f"y_{i}_{j}", "continuous")
    for i, j in _arcs(n):
        variables[f"z_{i}_{j}"] = Variable(f"z_{i}_{j}", "continuous")
    if has_dist:
        for i, j in _arcs(n):
            variables[f"zp_{i}_{j}"] = Variable(f"zp_{i}_{j}", "continuous")
    variables["k"] = Variable("k", "integer", 0.0, float(n))

    objective = {f"x_{i}_{j}": float(D[i, j]) for i, j in _arcs(n)}

    cons: list[Constraint] = []

    def add(name, family, coeffs, sense, rhs):
        cons.append(Constraint(name, family, coeffs, sense, float(rhs)))

    # routing: unit in/out degree per customer; depot degree ties to k
    for j in custs:
        add(
            f"indeg_{j}",
            "routing",
            {f"x_{i}_{j}": 1.0 for i in range(n + 1) if i != j},
            "E",
            1.0,
        )
    for i in custs:
        add(
            f"outdeg_{i}",
            "routing",
            {f"x_{i}_{j}": 1.0 for j in range(n + 1) if j != i},
            "E",
            1.0,
        )
    add(
        "depot_out",
        "routing",
        {**{f"x_0_{i}": 1.0 for i in custs}, "k": -1.0},
        "E",
        0.0,
    )
    add(
        "depot_in",
        "routing",
        {**{f"x_{i}_0": 1.0 for i in custs}, "k": -1.0},
        "E",
        0.0,
    )

    # capacity: y_ij counts packages already delivered when leaving i for j
    for i, j in _arcs(n):
        add(
            f"cap_link_{i}_{j}",
            "capacity",
            {f"y_{i}_{j}": 1.0, f"x_{i}_{j}": -float(Q)},
            "L",
            0.0,
        )
    for i in custs:
        coeffs: dict[str, float] = {}
        for j in range(n + 1):
            if j == i:
                continue
            coeffs[f"y_{i}_{j}"] = 1.0
            coeffs[f"y_{j}_{i}"] = -1.0
        add(f"cap_bal_{i}", "capacity", coeffs, "E", float(N[i - 1]))

    # time: z_ij accumulates arc time plus service, bounded by the work day
    def flow_family(prefix, family, M, per_node_extra, limit):
        for i in custs:
            coeffs = {}
            for j in range(n + 1):
                if j == i:
                    continue
                coeffs[f"{prefix}_{i}_{j}"] = 1.0
                coeffs[f"{prefix}_{j}_{i}"] = -1.0
                coeffs[f"x_{i}_{j}"] = -(float(M[i, j]) + per_node_extra(i))
            add(f"{family}_bal_{i}", family, coeffs, "E", 0.0)
        for i in range(n + 1):
            for j in custs:
                if i == j:
                    continue
                add(
                    f"{family}_ub_{i}_{j}",
                    family,
                    {
                        f"{prefix}_{i}_{j}": 1.0,
                        f"x_{i}_{j}": -(limit - float(M[j, 0])),
                    },
                    "L",
                    0.0,
                )
        for i in custs:
            for j in range(n + 1):
                if i == j:
                    continue
                add(
                    f"{family}_lb_{i}_{j}",
                    family,
                    {
                        f"{prefix}_{i}_{j}": 1.0,
                        f"x_{i}_{j}": -(float(M[i, j]) + float(M[0, i]) + per_node_extra(i)),
                    },
                    "G",
                    0.0,
                )
        for i in custs:
            add(
                f"{family}_ret_{i}",
                family,
                {f"{prefix}_{i}_0": 1.0, f"x_{i}_0": -limit},
                "L",
                0.0,
            )
        for i in custs:
            add(
                f"{family}_start_{i}",
                family,
                {f"{prefix}_0_{i}": 1.0, f"x_0_{i}": -float(M[0, i])},
                "E",
                0.0,
            )

    flow_family("z", "time", T, lambda i: float(S[i - 1]), float(tmax))
    if has_dist:
        flow_family("zp", "distance", D, lambda i: 0.0, float(dmax))

    return MipModel(
        n=n,
        has_distance_family=has_dist,
        variables=variables,
        constraints=cons,
        objective=objective,
    )


@dataclass(frozen=True)
class Violation:
    family: str
    route: int | None
    detail: str
    margin: float


@dataclass
class ValidationReport:
    feasible: bool
    violations: list[Violation] = field(default_factory=list)


def validate(inst: TcvrpInstance, sol: Solution) -> ValidationReport:
    """Recompute every route from the matrices and check all families.

    Stored totals are never trusted.  Malformed routes (unknown nodes,
    depot mid-route) raise; limit and partition violations are reported.
    """
    violations: list[Violation] = []
    seen: dict[int, int] = {}
    for r_idx, route in enumerate(sol.routes):
        stats = route_stats(inst, route)
        for node in route[1:-1]:
            seen[node] = seen.get(node, 0) + 1
        if stats.load > inst.capacity:
            violations.append(
                Violation(
                    "capacity",
                    r_idx,
                    f"route load {stats.load} > Q={inst.capacity}",
                    stats.load - inst.capacity,
                )
            )
        if stats.time_min > inst.tmax_min + FEAS_TOL:
            violations.append(
                Violation(
                    "time",
                    r_idx,
                    f"route time {stats.time_min:.6f} > Tbar={inst.tmax_min}",
                    stats.time_min - inst.tmax_min,
                )
            )
        if inst.dmax_mi is not None and stats.dist_mi > inst.dmax_mi + FEAS_TOL:
            violations.append(
                Violation(
                    "distance",
                    r_idx,
                    f"route distance {stats.dist_mi:.6f} > Dbar={inst.dmax_mi}",
                    stats.dist_mi - inst.dmax_mi,
                )
            )
    for node in range(1, inst.n + 1):
        count = seen.get(node, 0)
        if count != 1:
            violations.append(
                Violation(
                    "routing",
                    None,
                    f"node {node} visited {count} times",
                    abs(count - 1),
                )
            )
    return ValidationReport(feasible=not violations, violations=violations)


def solution_from_arcs(inst: TcvrpInstance, x) -> Solution:
    """Decode x variable values into depot-anchored routes.

    `x` is either an (n+1) x (n+1) array or a {(i, j): value} mapping.
    Values above 0.5 count as chosen arcs.  Degree-feasible but disconnected
    structures (customer-only cycles) raise, signalling an invalid solution.
    """
    n = inst.n
    chosen: set[tuple[int, int]] = set()
    if isinstance(x, dict):
        chosen = {(i, j) for (i, j), v in x.items() if v > BINARY_THRESHOLD}
    else:
        arr = np.asarray(x)
        for i in range(n + 1):
            for j in range(n + 1):
                if i != j and arr[i, j] > BINARY_THRESHOLD:
                    chosen.add((i, j))
    succ: dict[int, int] = {}
    depot_out: list[int] = []
    for i, j in sorted(chosen):
        if i == 0:
            depot_out.append(j)
        else:
            if i in succ:
                raise ValueError(f"node {i} has out-degree > 1")
            succ[i] = j
    routes = []
    visited: set[int] = set()
    for start in depot_out:
        route = [0, start]
        cur = start
        while True:
            if cur in visited:
                raise ValueError(f"node {cur} visited twice; degree constraints violated")
            visited.add(cur)
            nxt = succ.get(cur)
            if nxt is None:
                raise ValueError(f"node {cur} has no outgoing arc")
            if nxt == 0:
                route.append(0)
                break
            route.append(nxt)
            cur = nxt
        routes.append(tuple(route))
    unreached = set(range(1, n + 1)) - visited
    if unreached:
        raise ValueError(
            f"subtour detected: nodes {sorted(unreached)} not connected to the depot"
        )
    return Solution.from_routes(inst, routes)


def induced_assignment(inst: TcvrpInstance, sol: Solution) -> dict[str, float]:
    """Variable values implied by a route set; unset variables are zero.

    y carries cumulative delivered load, z cumulative time (service at the
    tail included), z' cumulative distance, matching the flow balances.
    """
    T, D, S, N = inst.time_min, inst.dist_mi, inst.service_min, inst.demand
    a: dict[str, float] = {"k": float(len(sol.routes))}
    for route in sol.routes:
        load = 0.0
        time = float(T[0, route[1]])
        dist = float(D[0, route[1]])
        a[f"x_0_{route[1]}"] = 1.0
        a[f"z_0_{route[1]}"] = time
        if inst.dmax_mi is not None:
            a[f"zp_0_{route[1]}"] = dist
        for p in range(1, len(route) - 1):
            i, j = route[p], route[p + 1]
            load += float(N[i - 1])
            time += float(S[i - 1]) + float(T[i, j])
            dist += float(D[i, j])
            a[f"x_{i}_{j}"] = 1.0
            a[f"y_{i}_{j}"] = load
            a[f"z_{i}_{j}"] = time
            if inst.dmax_mi is not None:
                a[f"zp_{i}_{j}"] = dist
    return a
