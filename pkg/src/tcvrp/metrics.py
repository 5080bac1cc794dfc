"""System-level metrics: optimality gaps, VMT/VHT roll-ups, energy accounting."""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .instance import TcvrpInstance
from .model import validate
from .solution import Solution

CSV_COLUMNS = [
    "city",
    "Q",
    "Tbar_h",
    "P_min",
    "Dbar_mi",
    "vehicle_type",
    "vmt_mi",
    "vht_h",
    "vehicles",
    "vmt_per_vehicle",
    "bev_kwh",
    "cv_kwh",
]


@dataclass(frozen=True)
class EnergyParams:
    bev_kwh_per_mile: float = 1.14
    cv_mpg: float = 8.0
    diesel_kwh_per_gallon: float = 40.15

    def __post_init__(self):
        if min(self.bev_kwh_per_mile, self.cv_mpg, self.diesel_kwh_per_gallon) <= 0:
            raise ValueError("energy parameters must be positive")


def mip_gap(lower: float, upper: float) -> float:
    """Percent gap between the exact solver's bounds: (1 - lower/upper) * 100."""
    if upper == 0:
        raise ValueError("upper bound must be positive")
    if not 0 <= lower <= upper:
        raise ValueError(f"bounds must satisfy 0 <= lower <= upper, got ({lower}, {upper})")
    return (1.0 - lower / upper) * 100.0


def its_gap(omega: float, lower: float) -> float:
    """Percent gap of a metaheuristic cost against the exact lower bound.

    Defined as (1 - omega/lower) * 100; negative whenever omega exceeds the
    bound, which is the common case.  The sign is preserved on purpose.
    """
    if lower == 0:
        raise ValueError("lower bound must be positive")
    return (1.0 - omega / lower) * 100.0


def energy(vmt_mi: float, params: EnergyParams | None = None) -> tuple[float, float]:
    """(BEV kWh, CV kWh) consumed over the given mileage."""
    if vmt_mi < 0:
        raise ValueError("mileage must be nonnegative")
    p = params or EnergyParams()
    bev = vmt_mi * p.bev_kwh_per_mile
    cv = vmt_mi * p.diesel_kwh_per_gallon / p.cv_mpg
    return bev, cv


@dataclass(frozen=True)
class ScenarioKey:
    city: str
    capacity: int
    tmax_h: float
    dwell_min: float
    dmax_mi: float | None
    vehicle_type: str  # "bev" | "cv"


@dataclass
class ScenarioReport:
    key: ScenarioKey
    vmt_mi: float
    vht_h: float
    vehicles: int
    bev_kwh: float
    cv_kwh: float
    gap_pcts: list[float] | None = None  # per-depot MIP gaps, where exact ran

    @property
    def vmt_per_vehicle(self) -> float:
        return self.vmt_mi / self.vehicles if self.vehicles else 0.0

    def csv_row(self) -> dict:
        return {
            "city": self.key.city,
            "Q": self.key.capacity,
            "Tbar_h": self.key.tmax_h,
            "P_min": self.key.dwell_min,
            "Dbar_mi": "" if self.key.dmax_mi is None else self.key.dmax_mi,
            "vehicle_type": self.key.vehicle_type,
            "vmt_mi": f"{self.vmt_mi:.6f}",
            "vht_h": f"{self.vht_h:.6f}",
            "vehicles": self.vehicles,
            "vmt_per_vehicle": f"{self.vmt_per_vehicle:.6f}",
            "bev_kwh": f"{self.bev_kwh:.6f}",
            "cv_kwh": f"{self.cv_kwh:.6f}",
        }


def summarize(
    depot_results: list[tuple[TcvrpInstance, Solution]],
    key: ScenarioKey,
    params: EnergyParams | None = None,
    gap_pcts: list[float] | None = None,
) -> ScenarioReport:
    """Sum validated per-depot solutions into one scenario row.

    Raises if any solution fails validation against its instance.
    """
    vmt = 0.0
    vht_min = 0.0
    vehicles = 0
    for inst, sol in depot_results:
        report = validate(inst, sol)
        if not report.feasible:
            raise ValueError(
                f"unvalidated solution in scenario {key}: {report.violations[0].detail}"
            )
        vmt += sol.vmt_mi
        vht_min += sol.vht_min
        vehicles += sol.k
    bev, cv = energy(vmt, params)
    return ScenarioReport(
        key=key,
        vmt_mi=vmt,
        vht_h=vht_min / 60.0,
        vehicles=vehicles,
        bev_kwh=bev,
        cv_kwh=cv,
        gap_pcts=gap_pcts,
    )


def write_reports_csv(reports: list[ScenarioReport], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for rep in reports:
            writer.writerow(rep.csv_row())


def read_reports_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
