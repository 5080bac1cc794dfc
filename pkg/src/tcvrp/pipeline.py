"""End-to-end instance preparation and the scenario sweep harness.

Preparation (provider split, depot assignment, clustering, intra tours,
matrices) is independent of the routing limits, so a sweep prepares a city
once and then rebuilds the cheap instance layer per scenario cell; the dwell
time P changes service times and must go through instance building, which is
why cells are re-derived rather than patched.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .aggregate import (
    SuperLocation,
    build_instance,
    cluster_customers,
    nearest_anchor_vertex,
    with_intra_tours,
)
from .assign import (
    Customer,
    Depot,
    ProviderSplit,
    assign_to_depots,
    default_capacities,
    split_by_provider,
)
from .exact import OPTIMAL, solve_exact
from .instance import InfeasibleNodeError, TcvrpInstance
from .its import ItsConfig, best_of_runs
from .metrics import ScenarioKey, ScenarioReport, summarize
from .model import validate
from .network import RoadNetwork, shortest_paths
from .solution import Solution

AUTO_EXACT_MAX_NODES = 60
BASELINE_Q = 120
BASELINE_TBAR_H = 10.0
BASELINE_P_MIN = 2.0
BASELINE_DBAR_MI = 80.0


@dataclass
class DepotPrep:
    """Everything about one depot's subproblem that routing limits cannot change."""

    depot: Depot
    customers: list[Customer]
    supers: list[SuperLocation]
    depot_vertex: int
    matrices: object  # TravelMatrices over depot vertex + super-location vertices


@dataclass(frozen=True)
class PipelineParams:
    capacity: int = BASELINE_Q
    tmax_min: float = BASELINE_TBAR_H * 60.0
    dwell_min: float = BASELINE_P_MIN
    dmax_mi: float | None = None
    seed: int = 0
    shared_economy: bool = False
    capacity_slack: float = 1.2


def prepare_city(
    net: RoadNetwork,
    customers: list[Customer],
    depots: list[Depot],
    split: ProviderSplit,
    seed: int = 0,
    shared_economy: bool = False,
    capacity_slack: float = 1.2,
    intra_seed: int = 0,
) -> list[DepotPrep]:
    """Split, assign, cluster, and build matrices for every depot."""
    if shared_economy:
        pools = {"": (customers, list(depots))}
    else:
        by_provider = split_by_provider(customers, split, seed)
        pools = {
            p: (by_provider.get(p, []), [d for d in depots if d.provider == p])
            for p in sorted(split.shares)
        }
    lookup = {c.id: c for c in customers}
    preps: list[DepotPrep] = []
    for provider in sorted(pools):
        pool_customers, pool_depots = pools[provider]
        if not pool_depots:
            raise ValueError(f"no depots for provider {provider!r}")
        if not pool_customers:
            continue
        sized = [
            d
            if d.capacity > 0
            else replace(
                d,
                capacity=default_capacities(
                    len(pool_customers), len(pool_depots), capacity_slack
                ),
            )
            for d in pool_depots
        ]
        assignment = assign_to_depots(pool_customers, sized)
        for depot in sized:
            members = [lookup[cid] for cid in assignment.by_depot[depot.id]]
            if not members:
                continue
            supers = with_intra_tours(
                cluster_customers(members, net), members, seed=intra_seed
            )
            depot_vertex = nearest_anchor_vertex(net, depot.x, depot.y)
            vertices = {depot_vertex} | {sl.vertex for sl in supers}
            matrices = shortest_paths(net, vertices, vertices)
            preps.append(
                DepotPrep(
                    depot=depot,
                    customers=members,
                    supers=supers,
                    depot_vertex=depot_vertex,
                    matrices=matrices,
                )
            )
    return preps


def build_depot_instance(
    prep: DepotPrep,
    capacity: int,
    tmax_min: float,
    dwell_min: float,
    dmax_mi: float | None,
) -> TcvrpInstance:
    return build_instance(
        prep.depot_vertex,
        prep.supers,
        prep.matrices,
        capacity,
        tmax_min,
        dwell_min,
        dmax_mi,
    )


def run_pipeline(
    net: RoadNetwork,
    customers: list[Customer],
    depots: list[Depot],
    split: ProviderSplit,
    params: PipelineParams,
) -> list[tuple[DepotPrep, TcvrpInstance]]:
    preps = prepare_city(
        net,
        customers,
        depots,
        split,
        seed=params.seed,
        shared_economy=params.shared_economy,
        capacity_slack=params.capacity_slack,
    )
    return [
        (
            prep,
            build_depot_instance(
                prep, params.capacity, params.tmax_min, params.dwell_min, params.dmax_mi
            ),
        )
        for prep in preps
    ]


@dataclass(frozen=True)
class SweepConfig:
    q_values: tuple[int, ...] = (BASELINE_Q,)
    tbar_h_values: tuple[float, ...] = (BASELINE_TBAR_H,)
    p_values: tuple[float, ...] = (BASELINE_P_MIN,)
    dbar_values: tuple[float, ...] = (BASELINE_DBAR_MI,)
    vehicle_types: tuple[str, ...] = ("bev", "cv")
    solver: str = "its"  # "its" | "exact" | "auto"
    time_limit_s: float = 60.0
    runs: int = 1
    seed: int = 0

    def __post_init__(self):
        for name in ("q_values", "tbar_h_values", "p_values", "dbar_values", "vehicle_types"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be nonempty")
        bad = set(self.vehicle_types) - {"bev", "cv"}
        if bad:
            raise ValueError(f"unknown vehicle types: {sorted(bad)}")

    def cells(self):
        for q in self.q_values:
            for tbar_h in self.tbar_h_values:
                for p in self.p_values:
                    for vt in self.vehicle_types:
                        dbars = self.dbar_values if vt == "bev" else (None,)
                        for dbar in dbars:
                            yield q, tbar_h, p, dbar, vt


@dataclass
class CellFailure:
    key: ScenarioKey
    error: str


def solve_one(
    inst: TcvrpInstance,
    solver: str = "auto",
    time_limit_s: float = 60.0,
    runs: int = 1,
    seed: int = 0,
):
    """Dispatch to the configured solver; returns (Solution, exact result or None)."""
    if solver == "auto":
        solver = "exact" if inst.n <= AUTO_EXACT_MAX_NODES else "its"
    if solver == "exact":
        res = solve_exact(inst, time_limit_s=time_limit_s)
        if res.solution is None:
            raise RuntimeError(f"exact solver returned no solution: status {res.status}")
        return res.solution, res
    cfg = ItsConfig(seed=seed, time_budget_s=time_limit_s)
    sol, _ = best_of_runs(inst, cfg, runs=runs)
    return sol, None


def run_sweep(
    city_name: str,
    preps: list[DepotPrep],
    sweep: SweepConfig,
) -> tuple[list[ScenarioReport], list[CellFailure]]:
    """One report row per scenario cell; failed cells are recorded, not fatal."""
    reports: list[ScenarioReport] = []
    failures: list[CellFailure] = []
    per_depot_budget = sweep.time_limit_s / max(1, len(preps))
    for q, tbar_h, p, dbar, vt in sweep.cells():
        key = ScenarioKey(
            city=city_name,
            capacity=q,
            tmax_h=tbar_h,
            dwell_min=p,
            dmax_mi=dbar,
            vehicle_type=vt,
        )
        try:
            results: list[tuple[TcvrpInstance, Solution]] = []
            gaps: list[float] = []
            for prep in preps:
                inst = build_depot_instance(prep, q, tbar_h * 60.0, p, dbar)
                sol, exact_res = solve_one(
                    inst,
                    solver=sweep.solver,
                    time_limit_s=per_depot_budget,
                    runs=sweep.runs,
                    seed=sweep.seed,
                )
                report = validate(inst, sol)
                if not report.feasible:
                    raise RuntimeError(
                        f"solver emitted infeasible solution: {report.violations[0].detail}"
                    )
                if exact_res is not None and exact_res.status == OPTIMAL:
                    gaps.append(exact_res.gap_pct)
                results.append((inst, sol))
            reports.append(summarize(results, key, gap_pcts=gaps or None))
        except (InfeasibleNodeError, RuntimeError, ValueError) as exc:
            failures.append(CellFailure(key=key, error=str(exc)))
    return reports, failures
