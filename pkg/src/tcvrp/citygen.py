"""Synthetic city generator: road grid, households, provider depots.

Stands in for the proprietary regional simulation data: a planar grid road
network with a sprinkling of diagonal shortcuts, households uniform over the
square, a seeded Bernoulli draw of which households order on the study day,
and stratified-random depot placement per provider.  Every artifact flows
from one root seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assign import Customer, Depot, ProviderSplit
from .network import Arc, RoadNetwork, road_network_to_json, road_network_from_json

ORDERING_RATE_DEFAULT = 1.0 / 7.0
SPEED_CHOICES_MPH = (20.0, 30.0, 40.0)


@dataclass(frozen=True)
class CityConfig:
    name: str
    extent_mi: float
    households: int
    ordering_rate: float = ORDERING_RATE_DEFAULT
    provider_shares: dict[str, float] = field(
        default_factory=lambda: {"Amazon": 0.21, "FedEx": 0.16, "UPS": 0.24, "USPS": 0.39}
    )
    depots_per_provider: int = 1
    grid: int | None = None  # road grid cells per side; ~1-mile blocks by default
    diagonal_frac: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.ordering_rate <= 1:
            raise ValueError("ordering rate must be in (0, 1]")
        if self.extent_mi <= 0:
            raise ValueError("extent must be positive")
        ProviderSplit(self.provider_shares)  # validates shares

    @property
    def grid_cells(self) -> int:
        return self.grid if self.grid is not None else max(2, round(self.extent_mi))


@dataclass
class City:
    config: CityConfig
    network: RoadNetwork
    customers: list[Customer]
    depots: list[Depot]


def gen(cfg: CityConfig) -> City:
    rng = np.random.default_rng(cfg.seed)
    net = _gen_network(cfg, rng)
    customers = _gen_customers(cfg, rng)
    depots = _gen_depots(cfg, rng)
    return City(config=cfg, network=net, customers=customers, depots=depots)


def _gen_network(cfg: CityConfig, rng) -> RoadNetwork:
    g = cfg.grid_cells
    spacing = cfg.extent_mi / g
    coords = {}
    for r in range(g + 1):
        for c in range(g + 1):
            coords[r * (g + 1) + c] = (c * spacing, r * spacing)
    arcs: list[Arc] = []

    def add_pair(u, v, length):
        s1, s2 = rng.choice(SPEED_CHOICES_MPH, size=2)
        arcs.append(Arc(len(arcs), u, v, length, float(s1)))
        arcs.append(Arc(len(arcs), v, u, length, float(s2)))

    for r in range(g + 1):
        for c in range(g):
            add_pair(r * (g + 1) + c, r * (g + 1) + c + 1, spacing)
    for r in range(g):
        for c in range(g + 1):
            add_pair(r * (g + 1) + c, (r + 1) * (g + 1) + c, spacing)
    diag = spacing * math.sqrt(2.0)
    for r in range(g):
        for c in range(g):
            if rng.random() < cfg.diagonal_frac:
                add_pair(r * (g + 1) + c, (r + 1) * (g + 1) + c + 1, diag)
    return RoadNetwork(coords=coords, arcs=arcs)


def _gen_customers(cfg: CityConfig, rng) -> list[Customer]:
    xs = rng.uniform(0.0, cfg.extent_mi, size=cfg.households)
    ys = rng.uniform(0.0, cfg.extent_mi, size=cfg.households)
    orders = rng.random(cfg.households) < cfg.ordering_rate
    out = []
    cid = 0
    for h in range(cfg.households):
        if orders[h]:
            out.append(Customer(id=cid, x=float(xs[h]), y=float(ys[h]), demand=1))
            cid += 1
    return out


def _gen_depots(cfg: CityConfig, rng) -> list[Depot]:
    providers = sorted(cfg.provider_shares)
    total = cfg.depots_per_provider * len(providers)
    strata_side = math.ceil(math.sqrt(total))
    cell = cfg.extent_mi / strata_side
    strata = rng.permutation(strata_side * strata_side)[:total]
    depots = []
    for d in range(total):
        s = int(strata[d])
        sx, sy = (s % strata_side) * cell, (s // strata_side) * cell
        x = float(sx + rng.uniform(0.0, cell))
        y = float(sy + rng.uniform(0.0, cell))
        provider = providers[d // cfg.depots_per_provider]
        depots.append(Depot(id=d, x=x, y=y, capacity=0, provider=provider))
    return depots


def save_city(city: City, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = city.config.seed
    with open(out / "network.json", "w") as fh:
        json.dump({"seed": seed, **road_network_to_json(city.network)}, fh)
    with open(out / "customers.json", "w") as fh:
        json.dump(
            {
                "seed": seed,
                "city": city.config.name,
                "customers": [
                    {"id": c.id, "x": c.x, "y": c.y, "demand": c.demand}
                    for c in city.customers
                ],
            },
            fh,
        )
    with open(out / "depots.json", "w") as fh:
        json.dump(
            {
                "seed": seed,
                "city": city.config.name,
                "provider_shares": city.config.provider_shares,
                "depots": [
                    {
                        "id": d.id,
                        "x": d.x,
                        "y": d.y,
                        "capacity": None,  # pipeline fills per-provider defaults
                        "provider": d.provider,
                    }
                    for d in city.depots
                ],
            },
            fh,
        )


def load_city(city_dir) -> tuple[RoadNetwork, list[Customer], list[Depot], ProviderSplit, str]:
    d = Path(city_dir)
    with open(d / "network.json") as fh:
        net = road_network_from_json(json.load(fh))
    with open(d / "customers.json") as fh:
        cobj = json.load(fh)
    customers = [
        Customer(id=int(c["id"]), x=float(c["x"]), y=float(c["y"]), demand=int(c.get("demand", 1)))
        for c in cobj["customers"]
    ]
    with open(d / "depots.json") as fh:
        dobj = json.load(fh)
    depots = [
        Depot(
            id=int(p["id"]),
            x=float(p["x"]),
            y=float(p["y"]),
            capacity=0 if p.get("capacity") is None else int(p["capacity"]),
            provider=str(p.get("provider", "")),
        )
        for p in dobj["depots"]
    ]
    split = ProviderSplit(dobj["provider_shares"])
    return net, customers, depots, split, str(cobj.get("city", d.name))
