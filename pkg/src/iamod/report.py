"""Report tables: modal-share histograms, regional unfairness, run comparison.

A histogram groups trips by travel time. On the ``od_pair`` basis each
demand is one trip at its average travel time, weighted by its rate; on the
``path`` basis each allocated path is a trip at its exact time, weighted by
its fraction of the demand rate. Within a bin the weighted time spent on each
mode class is accumulated; mode-switch arcs form their own class.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from iamod.errors import BinMismatch, EmptyInput
from iamod.planner import FlowSolution, flow_metrics, region_unfairness

CLASSES = ("Walk", "Bike", "Car", "PublicTransit", "Switch")
OD_PAIR, PATH = "od_pair", "path"
DEFAULT_BIN_WIDTH = 2.0
HISTOGRAM_FORMAT = "iamod-histogram v1"


@dataclass
class ModalShareBin:
    lower: float
    upper: float
    weight: float = 0.0  # users/minute
    class_time: dict = field(default_factory=lambda: {c: 0.0 for c in CLASSES})

    @property
    def total_time(self) -> float:
        return math.fsum(self.class_time.values())

    @property
    def shares(self) -> dict:
        tot = self.total_time
        if tot <= 0:
            return {c: 0.0 for c in CLASSES}
        return {c: self.class_time[c] / tot for c in CLASSES}

    @property
    def mean_time(self) -> float:
        return self.total_time / self.weight if self.weight > 0 else 0.0


@dataclass
class SignedBin:
    lower: float
    upper: float
    weight: float
    class_time: dict


def _bin_index(time: float, width: float) -> int:
    # guard against averages like 19.999999999 landing one bin low
    return int(math.floor(time / width + 1e-9))


def _trips_od(solution: FlowSolution):
    g = solution.scenario.graph
    classes = [g.arc_class(a.id) for a in g.arcs]
    times = g.times
    for mp, d in enumerate(solution.scenario.demands):
        row = solution.flows[mp]
        ct = {c: 0.0 for c in CLASSES}
        for ap in np.flatnonzero(row):
            ct[classes[ap]] += float(times[ap] * row[ap])
        yield float(row @ times) / d.rate, d.rate, ct


def _trips_path(allocations, scenario):
    g = scenario.graph
    for alloc in allocations:
        rate = scenario.demand(alloc.demand_id).rate
        for path, t, f in zip(alloc.pathset.paths, alloc.pathset.path_times, alloc.fractions):
            w = float(f) * rate if alloc.normalized else float(f)
            if w <= 0:
                continue
            ct = {c: 0.0 for c in CLASSES}
            for a in path:
                ct[g.arc_class(a)] += w * g.arc(a).travel_time
            yield float(t), w, ct


def modal_share_histogram(source, bin_width: float = DEFAULT_BIN_WIDTH, basis: str = OD_PAIR,
                          scenario=None) -> list[ModalShareBin]:
    """Histogram of time-based modal share over travel time.

    ``source`` is a :class:`FlowSolution` for the ``od_pair`` basis, or an
    allocation result / list of path allocations for the ``path`` basis (then
    ``scenario`` is required).
    """
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    if basis == OD_PAIR:
        if not isinstance(source, FlowSolution):
            raise TypeError("od_pair basis needs a FlowSolution")
        trips = list(_trips_od(source))
    elif basis == PATH:
        if scenario is None:
            raise TypeError("path basis needs the scenario")
        allocations = getattr(source, "per_demand", source)
        trips = list(_trips_path(allocations, scenario))
    else:
        raise ValueError(f"unknown basis {basis!r}")
    if not trips:
        raise EmptyInput("nothing to bin")
    bins: dict[int, ModalShareBin] = {}
    for t, w, ct in trips:
        k = _bin_index(t, bin_width)
        b = bins.setdefault(k, ModalShareBin(k * bin_width, (k + 1) * bin_width))
        b.weight += w
        for c in CLASSES:
            b.class_time[c] += ct[c]
    return [bins[k] for k in sorted(bins)]


def histogram_difference(a: list, b: list) -> list[SignedBin]:
    """Per-bin, per-class weighted-time difference ``a - b``.

    Both histograms must share one bin width and grid; a bin missing from
    one side counts as zero.
    """
    widths = {round(x.upper - x.lower, 12) for x in list(a) + list(b)}
    if len(widths) > 1:
        raise BinMismatch(f"bin widths differ: {sorted(widths)}")
    if not widths:
        return []
    w = widths.pop()
    for x in list(a) + list(b):
        if abs(x.lower / w - round(x.lower / w)) > 1e-9:
            raise BinMismatch(f"bin [{x.lower}, {x.upper}) is off the {w}-minute grid")
    keys = sorted({round(x.lower / w) for x in list(a) + list(b)})
    amap = {round(x.lower / w): x for x in a}
    bmap = {round(x.lower / w): x for x in b}
    out = []
    for k in keys:
        xa, xb = amap.get(k), bmap.get(k)
        ct = {c: (xa.class_time[c] if xa else 0.0) - (xb.class_time[c] if xb else 0.0) for c in CLASSES}
        weight = (xa.weight if xa else 0.0) - (xb.weight if xb else 0.0)
        out.append(SignedBin(k * w, (k + 1) * w, weight, ct))
    return out


def region_unfairness_table(solution: FlowSolution, scenario=None) -> list[dict]:
    scenario = solution.scenario if scenario is None else scenario
    u = region_unfairness(scenario, solution.slacks)
    return [{"region_id": r.id, "population": r.population, "unfairness": u[r.id]} for r in scenario.regions]


# ----------------------------------------------------------------- rendering


def dumps_histogram(bins, manifest_id: str = "", label: str = "") -> str:
    """CSV rendering; share columns are written for plain (unsigned) histograms only."""
    signed = any(isinstance(b, SignedBin) for b in bins)
    out = io.StringIO()
    head = " ".join(x for x in (HISTOGRAM_FORMAT, label, f"manifest={manifest_id}") if x)
    out.write(f"# {head}\n")
    cols = ["bin_lower", "bin_upper", "weight"] + [f"time_{c}" for c in CLASSES]
    if not signed:
        cols += [f"share_{c}" for c in CLASSES]
    out.write(",".join(cols) + "\n")
    for b in bins:
        vals = [b.lower, b.upper, b.weight] + [b.class_time[c] for c in CLASSES]
        if not signed:
            vals += [b.shares[c] for c in CLASSES]
        out.write(",".join(repr(float(v)) for v in vals) + "\n")
    return out.getvalue()


def dumps_region_table(rows, manifest_id: str = "") -> str:
    lines = [f"# iamod-regions v1 manifest={manifest_id}", "region_id,population,unfairness"]
    lines += [f"{r['region_id']},{float(r['population'])!r},{float(r['unfairness'])!r}" for r in rows]
    return "\n".join(lines) + "\n"


def comparison_table(entries: dict, manifest_id: str = "") -> str:
    """Side-by-side summary; ``entries`` maps a column name to a dict with
    ``avg_travel_time``, ``unfairness`` and optionally ``unfairness_paths``."""
    cols = list(entries)
    rows = [("avg_travel_time_min", "avg_travel_time"),
            ("unfairness_od_min", "unfairness"),
            ("unfairness_path_min", "unfairness_paths")]
    lines = [f"# iamod-comparison v1 manifest={manifest_id}", "metric," + ",".join(cols)]
    for title, key in rows:
        vals = [entries[c].get(key) for c in cols]
        lines.append(title + "," + ",".join("" if v is None else f"{float(v):.6g}" for v in vals))
    return "\n".join(lines) + "\n"


_COLORS = {"Walk": "#4daf4a", "Bike": "#377eb8", "Car": "#e41a1c",
           "PublicTransit": "#ff7f00", "Switch": "#999999"}


def histogram_svg(bins, title: str = "", width: int = 640, height: int = 320) -> str:
    """Stacked-bar SVG: bar height is the bin weight, split by modal share."""
    pad = 40
    if not bins:
        raise EmptyInput("no bins to draw")
    lo, hi = min(b.lower for b in bins), max(b.upper for b in bins)
    wmax = max(b.weight for b in bins) or 1.0
    sx = (width - 2 * pad) / (hi - lo)
    sy = (height - 2 * pad) / wmax
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<text x="{pad}" y="20" font-size="14">{escape(title)}</text>']
    for b in bins:
        x = pad + (b.lower - lo) * sx
        y = height - pad
        for c in CLASSES:
            h = b.weight * b.shares[c] * sy
            if h <= 0:
                continue
            y -= h
            parts.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{(b.upper - b.lower) * sx:.2f}" '
                         f'height="{h:.2f}" fill="{_COLORS[c]}"><title>{c}</title></rect>')
        parts.append(f'<text x="{x:.2f}" y="{height - pad + 14}" font-size="10">{b.lower:g}</text>')
    for i, c in enumerate(CLASSES):
        parts.append(f'<rect x="{width - 120}" y="{30 + 14 * i}" width="10" height="10" fill="{_COLORS[c]}"/>'
                     f'<text x="{width - 105}" y="{39 + 14 * i}" font-size="10">{c}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def summary(solution: FlowSolution, allocation=None) -> dict:
    from iamod.pathalloc import path_unfairness_summary

    m = flow_metrics(solution)
    out = {"avg_travel_time": m["avg_travel_time"], "unfairness": m["unfairness"], "time_cost": m["time_cost"]}
    if allocation is not None:
        out["unfairness_paths"] = path_unfairness_summary(allocation.per_demand, solution.scenario)
    return out
