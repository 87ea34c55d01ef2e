"""Demands with their regions, plus run parameters.

Rates are held in users/minute and travel times in minutes, so that
``travel_time * flow`` is a number of vehicles (or users) in transit.

Files
-----
Demand file (CSV)::

    demand_id,region_id,origin_node,dest_node,rate,rate_unit
    0,1,0,6,60,users/hour

Params file (``key = value`` lines, ``#`` comments)::

    fleet_cap = 4000
    t_max_min = 20
    gamma_reb = 0.001
    gamma_time = 0.001

Region populations come from a ``region_id,population`` table. It can follow
the key-value lines in the params file itself (the header line starts the
table), or live in a sibling file named by the ``regions_file`` key
(default ``regions.csv`` next to the params file).
"""

from __future__ import annotations

import csv
import dataclasses
import io
import os
from dataclasses import dataclass, field
from typing import Optional

from iamod.errors import (
    DataError,
    DemandRateNonPositive,
    InvalidParameter,
    RegionlessDemand,
    UnitTagMissing,
    UnknownNode,
)
from iamod.network import IntermodalGraph, Layer, dumps_network, load_network

DEFAULT_GAMMA_REB = 1e-3
DEFAULT_GAMMA_TIME = 1e-3

# factor converting a declared unit to users/minute
RATE_UNITS = {
    "users/minute": 1.0,
    "users/min": 1.0,
    "users/hour": 1.0 / 60.0,
    "users/h": 1.0 / 60.0,
}

DEMAND_HEADER = ["demand_id", "region_id", "origin_node", "dest_node", "rate", "rate_unit"]
PARAM_KEYS = ("fleet_cap", "t_max_min", "gamma_reb", "gamma_time")


@dataclass(frozen=True)
class Demand:
    id: int
    origin: int
    destination: int
    rate: float  # users/minute
    region: int


@dataclass(frozen=True)
class Region:
    id: int
    population: float
    demands: tuple[int, ...] = ()


@dataclass(frozen=True)
class Scenario:
    graph: IntermodalGraph
    regions: tuple[Region, ...]
    demands: tuple[Demand, ...]
    fleet_cap: float
    time_threshold: float
    gamma_reb: float = DEFAULT_GAMMA_REB
    gamma_time: float = DEFAULT_GAMMA_TIME
    _demand_pos: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_demand_pos", {d.id: i for i, d in enumerate(self.demands)})

    def demand(self, demand_id: int) -> Demand:
        return self.demands[self._demand_pos[demand_id]]

    def demand_position(self, demand_id: int) -> int:
        return self._demand_pos[demand_id]

    @property
    def total_population(self) -> float:
        return sum(r.population for r in self.regions)

    def params(self) -> dict:
        return {
            "fleet_cap": self.fleet_cap,
            "t_max_min": self.time_threshold,
            "gamma_reb": self.gamma_reb,
            "gamma_time": self.gamma_time,
        }


def total_demand_rate(scenario: Scenario) -> float:
    return float(sum(d.rate for d in scenario.demands))


def demand_weights(scenario: Scenario) -> dict[int, float]:
    """Weight of each demand's slack in the population-weighted unfairness.

    ``(population share) * (rate / region rate)``. A region whose
    demands have zero total rate, or a scenario with zero population, gives
    weight zero.
    """
    n_tot = scenario.total_population
    weights = {}
    for r in scenario.regions:
        rate_r = sum(scenario.demand(m).rate for m in r.demands)
        for m in r.demands:
            if n_tot <= 0 or rate_r <= 0:
                weights[m] = 0.0
            else:
                weights[m] = (r.population / n_tot) * (scenario.demand(m).rate / rate_r)
    return weights


def make_scenario(
    graph: IntermodalGraph,
    demands,
    populations: dict[int, float],
    fleet_cap: float,
    time_threshold: float,
    gamma_reb: float = DEFAULT_GAMMA_REB,
    gamma_time: float = DEFAULT_GAMMA_TIME,
) -> Scenario:
    """Validate and assemble a :class:`Scenario`.

    ``demands`` is an iterable of :class:`Demand` with rates already in
    users/minute. Every demand region must appear in ``populations``.
    """
    if not fleet_cap >= 0:
        raise InvalidParameter(f"fleet_cap must be >= 0, got {fleet_cap}")
    if not time_threshold > 0:
        raise InvalidParameter(f"t_max_min must be > 0, got {time_threshold}")
    if not gamma_reb > 0:
        raise InvalidParameter(f"gamma_reb must be > 0, got {gamma_reb}")
    if not gamma_time > 0:
        raise InvalidParameter(f"gamma_time must be > 0, got {gamma_time}")
    for rid, pop in populations.items():
        if not pop >= 0:
            raise InvalidParameter(f"region {rid}: population must be >= 0, got {pop}")

    demands = sorted(demands, key=lambda d: d.id)
    seen = set()
    members: dict[int, list[int]] = {rid: [] for rid in populations}
    for d in demands:
        if d.id in seen:
            raise DataError(f"demand id {d.id} appears twice")
        seen.add(d.id)
        if not d.rate > 0:
            raise DemandRateNonPositive(f"demand {d.id}: rate {d.rate} must be > 0")
        for node_id, want in ((d.origin, Layer.ORIGIN), (d.destination, Layer.DESTINATION)):
            if not graph.has_node(node_id):
                raise UnknownNode(f"demand {d.id}: node {node_id} not in network")
            if graph.node(node_id).layer is not want:
                raise DataError(
                    f"demand {d.id}: node {node_id} is in layer "
                    f"{graph.node(node_id).layer.value}, expected {want.value}"
                )
        if d.origin == d.destination:
            raise DataError(f"demand {d.id}: origin equals destination")
        if d.region not in members:
            raise RegionlessDemand(f"demand {d.id}: region {d.region} has no population entry")
        members[d.region].append(d.id)

    regions = tuple(
        Region(rid, float(populations[rid]), tuple(members[rid])) for rid in sorted(populations)
    )
    return Scenario(
        graph=graph,
        regions=regions,
        demands=tuple(demands),
        fleet_cap=float(fleet_cap),
        time_threshold=float(time_threshold),
        gamma_reb=float(gamma_reb),
        gamma_time=float(gamma_time),
    )


def scaled(scenario: Scenario, k: float) -> Scenario:
    """Copy with every demand rate and the fleet cap multiplied by ``k``."""
    demands = tuple(dataclasses.replace(d, rate=d.rate * k) for d in scenario.demands)
    return dataclasses.replace(scenario, demands=demands, fleet_cap=scenario.fleet_cap * k)


# ---------------------------------------------------------------- file format


def _parse_int(value: str, what: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise DataError(f"{what}: expected an integer, got {value!r}") from None


def _parse_float(value: str, what: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise DataError(f"{what}: expected a number, got {value!r}") from None


def parse_demands(text: str) -> list[Demand]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != DEMAND_HEADER:
        raise DataError(f"demand file header must be {','.join(DEMAND_HEADER)}")
    out = []
    for lineno, row in enumerate(reader, start=2):
        row = {k.strip(): (v or "").strip() for k, v in row.items() if k is not None}
        where = f"demand file line {lineno}"
        unit = row["rate_unit"]
        if not unit:
            raise UnitTagMissing(f"{where}: rate_unit is empty")
        if unit not in RATE_UNITS:
            raise DataError(f"{where}: unknown rate unit {unit!r}")
        if not row["region_id"]:
            raise RegionlessDemand(f"{where}: region_id is empty")
        rate = _parse_float(row["rate"], where) * RATE_UNITS[unit]
        if not rate > 0:
            raise DemandRateNonPositive(f"{where}: rate must be > 0")
        out.append(
            Demand(
                id=_parse_int(row["demand_id"], where),
                origin=_parse_int(row["origin_node"], where),
                destination=_parse_int(row["dest_node"], where),
                rate=rate,
                region=_parse_int(row["region_id"], where),
            )
        )
    return out


def _parse_population_rows(lines, where) -> dict[int, float]:
    pops = {}
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise DataError(f"{where}: expected 'region_id,population', got {line!r}")
        rid = _parse_int(parts[0], where)
        if rid in pops:
            raise DataError(f"{where}: region {rid} listed twice")
        pops[rid] = _parse_float(parts[1], where)
    return pops


def parse_params(text: str) -> tuple[dict, Optional[dict[int, float]]]:
    """Return ``(params, inline_populations)``; the latter is None if absent."""
    params: dict = {}
    lines = text.splitlines()
    for i, raw in enumerate(lines):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.replace(" ", "") == "region_id,population":
            return params, _parse_population_rows(lines[i + 1:], "params file")
        if "=" not in line:
            raise DataError(f"params file line {i + 1}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "regions_file":
            params[key] = value
        elif key in PARAM_KEYS:
            params[key] = _parse_float(value, f"params key {key}")
        else:
            raise DataError(f"params file line {i + 1}: unknown key {key!r}")
    return params, None


def load_scenario(network_file, demand_file, params_file) -> Scenario:
    graph = load_network(network_file)
    with open(demand_file, encoding="utf-8") as fh:
        demands = parse_demands(fh.read())
    with open(params_file, encoding="utf-8") as fh:
        params, pops = parse_params(fh.read())
    if pops is None:
        regions_path = os.path.join(
            os.path.dirname(os.path.abspath(params_file)), params.get("regions_file", "regions.csv")
        )
        if not os.path.exists(regions_path):
            raise DataError(f"no region population table in params file and {regions_path} missing")
        with open(regions_path, encoding="utf-8") as fh:
            rows = fh.read().splitlines()
        if not rows or rows[0].replace(" ", "") != "region_id,population":
            raise DataError(f"{regions_path}: header must be region_id,population")
        pops = _parse_population_rows(rows[1:], regions_path)
    for key in ("fleet_cap", "t_max_min"):
        if key not in params:
            raise DataError(f"params file: missing required key {key!r}")
    return make_scenario(
        graph,
        demands,
        pops,
        fleet_cap=params["fleet_cap"],
        time_threshold=params["t_max_min"],
        gamma_reb=params.get("gamma_reb", DEFAULT_GAMMA_REB),
        gamma_time=params.get("gamma_time", DEFAULT_GAMMA_TIME),
    )


def dumps_demands(scenario: Scenario) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DEMAND_HEADER)
    for d in scenario.demands:
        w.writerow([d.id, d.region, d.origin, d.destination, repr(d.rate), "users/minute"])
    return buf.getvalue()


def dumps_params(scenario: Scenario) -> str:
    lines = [f"{k} = {v!r}" for k, v in scenario.params().items()]
    lines.append("region_id,population")
    lines += [f"{r.id},{r.population!r}" for r in scenario.regions]
    return "\n".join(lines) + "\n"


def save_scenario(scenario: Scenario, directory) -> dict[str, str]:
    """Write network.json, demands.csv and params.txt; return their paths."""
    os.makedirs(directory, exist_ok=True)
    paths = {
        "network": os.path.join(directory, "network.json"),
        "demands": os.path.join(directory, "demands.csv"),
        "params": os.path.join(directory, "params.txt"),
    }
    for key, text in (
        ("network", dumps_network(scenario.graph)),
        ("demands", dumps_demands(scenario)),
        ("params", dumps_params(scenario)),
    ):
        with open(paths[key], "w", encoding="utf-8") as fh:
            fh.write(text)
    return paths
