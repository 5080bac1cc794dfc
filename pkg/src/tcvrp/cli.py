"""Command-line front end.

Subcommands: gen, pipeline, solve, export-mps, sweep, report.
Exit codes: 0 success, 1 infeasible or timed out without a solution,
2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import citygen, mps, pipeline
from .exact import GAP, INFEASIBLE, OPTIMAL, TIMEOUT, solve_exact
from .instance import InfeasibleNodeError, load_instance, save_instance
from .its import ItsConfig, UnplaceableNodeError, best_of_runs
from .metrics import ScenarioKey, summarize, write_reports_csv
from .model import build_mip, validate
from .solution import Solution, save_solution

EXIT_OK = 0
EXIT_NO_SOLUTION = 1
EXIT_INPUT_ERROR = 2


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _parse_providers(text: str) -> dict[str, float]:
    shares = {}
    for part in text.split(","):
        name, _, value = part.partition(":")
        shares[name.strip()] = float(value)
    return shares


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tcvrp", description="TCVRP solvers and experiment harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a synthetic city")
    p_gen.add_argument("--name", default="synthcity")
    p_gen.add_argument("--extent-mi", type=float, default=6.0)
    p_gen.add_argument("--households", type=int, required=True)
    p_gen.add_argument("--ordering-rate", type=float, default=citygen.ORDERING_RATE_DEFAULT)
    p_gen.add_argument(
        "--providers",
        type=_parse_providers,
        default=None,
        help="name:share pairs, e.g. 'Amazon:0.21,FedEx:0.16,UPS:0.24,USPS:0.39'",
    )
    p_gen.add_argument("--depots-per-provider", type=int, default=1)
    p_gen.add_argument("--grid", type=int, default=None)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)

    p_pipe = sub.add_parser("pipeline", help="city files -> one instance per depot")
    p_pipe.add_argument("--city", required=True, help="directory written by gen")
    p_pipe.add_argument("--q", type=int, default=pipeline.BASELINE_Q)
    p_pipe.add_argument("--tbar-h", type=float, default=pipeline.BASELINE_TBAR_H)
    p_pipe.add_argument("--p-min", type=float, default=pipeline.BASELINE_P_MIN)
    p_pipe.add_argument("--dbar-mi", type=float, default=None)
    p_pipe.add_argument("--shared-economy", action="store_true")
    p_pipe.add_argument("--seed", type=int, default=0)
    p_pipe.add_argument("--out", required=True)

    p_solve = sub.add_parser("solve", help="solve one instance file")
    p_solve.add_argument("--instance", required=True)
    p_solve.add_argument("--solver", choices=["exact", "its", "auto"], default="auto")
    p_solve.add_argument("--time-limit-s", type=float, default=60.0)
    p_solve.add_argument("--runs", type=int, default=1)
    p_solve.add_argument("--seed", type=int, default=0)
    p_solve.add_argument("--out", required=True)

    p_mps = sub.add_parser("export-mps", help="write the MIP in MPS format")
    p_mps.add_argument("--instance", required=True)
    p_mps.add_argument("--out", required=True)

    p_sweep = sub.add_parser("sweep", help="scenario sweep over a generated city")
    p_sweep.add_argument("--city", required=True)
    p_sweep.add_argument("--q", type=_parse_int_list, default=(pipeline.BASELINE_Q,))
    p_sweep.add_argument(
        "--tbar-h", type=_parse_float_list, default=(pipeline.BASELINE_TBAR_H,)
    )
    p_sweep.add_argument(
        "--p-min", type=_parse_float_list, default=(pipeline.BASELINE_P_MIN,)
    )
    p_sweep.add_argument(
        "--dbar-mi", type=_parse_float_list, default=(pipeline.BASELINE_DBAR_MI,)
    )
    p_sweep.add_argument(
        "--vehicle", default="bev,cv", help="comma list from {bev,cv}"
    )
    p_sweep.add_argument("--solver", choices=["exact", "its", "auto"], default="its")
    p_sweep.add_argument("--time-limit-s", type=float, default=60.0)
    p_sweep.add_argument("--runs", type=int, default=1)
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--shared-economy", action="store_true")
    p_sweep.add_argument("--out", required=True)

    p_rep = sub.add_parser("report", help="summarize solved instances into CSV")
    p_rep.add_argument("--instances", nargs="+", required=True)
    p_rep.add_argument("--solutions", nargs="+", required=True)
    p_rep.add_argument("--city-tag", default="city")
    p_rep.add_argument("--q", type=int, default=pipeline.BASELINE_Q)
    p_rep.add_argument("--tbar-h", type=float, default=pipeline.BASELINE_TBAR_H)
    p_rep.add_argument("--p-min", type=float, default=pipeline.BASELINE_P_MIN)
    p_rep.add_argument("--dbar-mi", type=float, default=None)
    p_rep.add_argument("--vehicle", choices=["bev", "cv"], default="cv")
    p_rep.add_argument("--out", required=True)
    return parser


def _cmd_gen(args) -> int:
    shares = args.providers
    cfg = citygen.CityConfig(
        name=args.name,
        extent_mi=args.extent_mi,
        households=args.households,
        ordering_rate=args.ordering_rate,
        **({"provider_shares": shares} if shares else {}),
        depots_per_provider=args.depots_per_provider,
        grid=args.grid,
        seed=args.seed,
    )
    city = citygen.gen(cfg)
    citygen.save_city(city, args.out)
    print(
        f"generated {args.name}: {len(city.customers)} ordering customers, "
        f"{len(city.depots)} depots, {len(city.network.arcs)} arcs -> {args.out}"
    )
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    net, customers, depots, split, _city = citygen.load_city(args.city)
    params = pipeline.PipelineParams(
        capacity=args.q,
        tmax_min=args.tbar_h * 60.0,
        dwell_min=args.p_min,
        dmax_mi=args.dbar_mi,
        seed=args.seed,
        shared_economy=args.shared_economy,
    )
    pairs = pipeline.run_pipeline(net, customers, depots, split, params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    counts = []
    for prep, inst in pairs:
        path = out / f"depot_{prep.depot.id}.json"
        save_instance(
            inst,
            path,
            meta={
                "seed": args.seed,
                "depot_id": prep.depot.id,
                "provider": prep.depot.provider,
                "customers": len(prep.customers),
            },
        )
        counts.append(len(prep.customers))
        print(
            f"depot {prep.depot.id} ({prep.depot.provider or 'pooled'}): "
            f"{len(prep.customers)} customers, {inst.n} super-locations -> {path}"
        )
    if counts:
        import statistics

        print(
            f"depot customers: avg {statistics.mean(counts):.1f} "
            f"min {min(counts)} max {max(counts)} "
            f"stdev {statistics.pstdev(counts):.1f}"
        )
    return EXIT_OK


def _cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    solver = args.solver
    if solver == "auto":
        solver = "exact" if inst.n <= pipeline.AUTO_EXACT_MAX_NODES else "its"
    if solver == "exact":
        res = solve_exact(inst, time_limit_s=args.time_limit_s)
        payload = res.to_json()
        payload["seed"] = args.seed
        with open(args.out, "w") as fh:
            json.dump(payload, fh)
        if res.solution is None:
            print(f"exact: status {res.status}, no solution", file=sys.stderr)
            return EXIT_NO_SOLUTION
        report = validate(inst, res.solution)
        if not report.feasible:
            print("exact solution failed validation", file=sys.stderr)
            return EXIT_NO_SOLUTION
        print(
            f"exact: status {res.status} vmt {res.solution.vmt_mi:.3f} mi "
            f"bounds [{res.lower_bound_mi:.3f}, {res.upper_bound_mi:.3f}] "
            f"gap {res.gap_pct:.4f}% in {res.elapsed_s:.2f}s"
        )
        return EXIT_OK
    try:
        sol, cost = best_of_runs(
            inst,
            ItsConfig(seed=args.seed, time_budget_s=args.time_limit_s),
            runs=args.runs,
        )
    except UnplaceableNodeError as exc:
        print(f"its: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    report = validate(inst, sol)
    if not report.feasible:
        print("its solution failed validation", file=sys.stderr)
        return EXIT_NO_SOLUTION
    save_solution(sol, args.out, meta={"seed": args.seed, "solver": "its"})
    print(f"its: vmt {cost:.3f} mi, {sol.k} vehicles")
    return EXIT_OK


def _cmd_export_mps(args) -> int:
    inst = load_instance(args.instance)
    model = build_mip(inst)
    mps.export_mps(model, args.out)
    counts = model.variable_counts()
    print(
        f"wrote {args.out}: {len(model.variables)} variables "
        f"({counts.get('binary', 0)} binary), {len(model.constraints)} constraints"
    )
    return EXIT_OK


def _cmd_sweep(args) -> int:
    net, customers, depots, split, city_name = citygen.load_city(args.city)
    vehicle_types = tuple(v.strip() for v in args.vehicle.split(","))
    sweep = pipeline.SweepConfig(
        q_values=args.q,
        tbar_h_values=args.tbar_h,
        p_values=args.p_min,
        dbar_values=args.dbar_mi,
        vehicle_types=vehicle_types,
        solver=args.solver,
        time_limit_s=args.time_limit_s,
        runs=args.runs,
        seed=args.seed,
    )
    preps = pipeline.prepare_city(
        net, customers, depots, split, seed=args.seed, shared_economy=args.shared_economy
    )
    reports, failures = pipeline.run_sweep(city_name, preps, sweep)
    write_reports_csv(reports, args.out)
    meta_path = Path(args.out).with_suffix(".meta.json")
    with open(meta_path, "w") as fh:
        json.dump(
            {
                "seed": args.seed,
                "city": city_name,
                "cells": len(reports) + len(failures),
                "failures": [
                    {"key": vars(f.key), "error": f.error} for f in failures
                ],
            },
            fh,
        )
    print(f"wrote {len(reports)} scenario rows to {args.out}")
    for f in failures:
        print(f"cell failed: {f.key} -> {f.error}", file=sys.stderr)
    return EXIT_OK


def _cmd_report(args) -> int:
    if len(args.instances) != len(args.solutions):
        print("need one solution per instance", file=sys.stderr)
        return EXIT_INPUT_ERROR
    results = []
    gaps = []
    for inst_path, sol_path in zip(args.instances, args.solutions):
        inst = load_instance(inst_path)
        with open(sol_path) as fh:
            obj = json.load(fh)
        if "solution" in obj:  # exact-solver result file
            if obj["solution"] is None:
                print(f"{sol_path}: no solution recorded", file=sys.stderr)
                return EXIT_NO_SOLUTION
            sol = Solution.from_json(obj["solution"], inst)
            if obj.get("gap_pct") is not None:
                gaps.append(float(obj["gap_pct"]))
        else:
            sol = Solution.from_json(obj, inst)
        results.append((inst, sol))
    key = ScenarioKey(
        city=args.city_tag,
        capacity=args.q,
        tmax_h=args.tbar_h,
        dwell_min=args.p_min,
        dmax_mi=args.dbar_mi,
        vehicle_type=args.vehicle,
    )
    report = summarize(results, key, gap_pcts=gaps or None)
    write_reports_csv([report], args.out)
    print(
        f"{key.city}: vmt {report.vmt_mi:.3f} mi, vht {report.vht_h:.3f} h, "
        f"{report.vehicles} vehicles -> {args.out}"
    )
    return EXIT_OK


_HANDLERS = {
    "gen": _cmd_gen,
    "pipeline": _cmd_pipeline,
    "solve": _cmd_solve,
    "export-mps": _cmd_export_mps,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (
        json.JSONDecodeError,
        FileNotFoundError,
        KeyError,
        ValueError,
        InfeasibleNodeError,
    ) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
