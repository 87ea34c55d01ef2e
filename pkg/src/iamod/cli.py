"""Command-line front end.

Subcommands::

    iamod validate  --scenario DIR
    iamod solve     --scenario DIR --objective {time,fairness} [--export-mps F | --import-solution F]
    iamod allocate  --scenario DIR --objective {time,fairness}
    iamod report    --scenario DIR [--bin-width MIN] [--svg]
    iamod demo

Outputs go to ``--out`` (default: ``$IAMOD_OUTPUT_DIR`` or ``./iamod_out``).
Exit codes: 0 success, 2 usage, 3 bad input data, 4 infeasible, 5 internal.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Optional

from iamod import __version__
from iamod.errors import DataError, IamodError, InfeasibleError, UnboundedError
from iamod.instances import demo_scenario
from iamod.kernels import BACKEND
from iamod.lp import export_mps, import_solution
from iamod.manifest import make_manifest
from iamod.pathalloc import (
    DEFAULT_PATH_CAP,
    DEFAULT_SUPPORT_TOL,
    allocate_all,
    dumps_allocation,
    dumps_paths,
    path_unfairness_summary,
)
from iamod.planner import (
    FAIRNESS,
    OBJECTIVES,
    TIME,
    build_problem,
    dumps_metrics,
    dumps_solution,
    loads_solution,
)
from iamod.report import (
    DEFAULT_BIN_WIDTH,
    OD_PAIR,
    PATH,
    comparison_table,
    dumps_histogram,
    dumps_region_table,
    histogram_difference,
    histogram_svg,
    modal_share_histogram,
    region_unfairness_table,
    summary,
)
from iamod.scenario import load_scenario, save_scenario

log = logging.getLogger("iamod")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 2, 3, 4, 5
OUTPUT_ENV = "IAMOD_OUTPUT_DIR"
DEFAULT_OUTPUT = "iamod_out"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


# ------------------------------------------------------------------- helpers


def _scenario_files(args) -> dict:
    if args.scenario:
        files = {k: os.path.join(args.scenario, f)
                 for k, f in (("network", "network.json"), ("demands", "demands.csv"), ("params", "params.txt"))}
    else:
        files = {"network": args.network, "demands": args.demands, "params": args.params}
        missing = [k for k, v in files.items() if not v]
        if missing:
            raise UsageError("give --scenario DIR or all of --network, --demands, --params "
                             f"(missing: {', '.join('--' + m for m in missing)})")
    for path in files.values():
        if not os.path.isfile(path):
            raise DataError(f"input file not found: {path}")
    return files


def _load(args):
    files = _scenario_files(args)
    scenario = load_scenario(files["network"], files["demands"], files["params"])
    return scenario, files


def _out_dir(args) -> str:
    out = args.out or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT
    os.makedirs(out, exist_ok=True)
    return out


def _write(directory: str, name: str, text: str) -> str:
    path = os.path.join(directory, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    log.info("wrote %s", path)
    return path


def _read(path: str, what: str) -> str:
    if not os.path.isfile(path):
        raise DataError(f"{what} not found: {path}")
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _solver_meta(extra: Optional[dict] = None) -> dict:
    meta = {"lp": "iamod.simplex", "kernels": BACKEND}
    meta.update(extra or {})
    return meta


# --------------------------------------------------------------- subcommands


def cmd_validate(args) -> int:
    scenario, _ = _load(args)
    g = scenario.graph
    print(f"ok: {len(g.nodes)} nodes, {len(g.arcs)} arcs, {len(scenario.demands)} demands, "
          f"{len(scenario.regions)} regions")
    return EXIT_OK


def cmd_solve(args) -> int:
    scenario, files = _load(args)
    problem = build_problem(scenario, args.objective)
    if args.export_mps:
        text = export_mps(problem.model, strict=args.strict_names)
        parent = os.path.dirname(os.path.abspath(args.export_mps))
        os.makedirs(parent, exist_ok=True)
        with open(args.export_mps, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(f"wrote {args.export_mps} ({len(problem.model.var_names)} columns, "
              f"{len(problem.model.rows)} rows)")
        return EXIT_OK
    out = _out_dir(args)
    inputs = dict(files)
    if args.import_solution:
        text = _read(args.import_solution, "solution file")
        lp = import_solution(problem.model, text)
        if lp.infeasible_import:
            raise DataError(f"imported solution violates the model by {lp.max_violation:.3g}: "
                            f"{args.import_solution}")
        solution = problem.to_solution(lp)
        inputs["imported_solution"] = args.import_solution
        solver = _solver_meta({"lp": "external-import"})
    else:
        solution = problem.solve()
        solver = _solver_meta({"iterations": solution.meta.get("iterations")})
    manifest = make_manifest("solve", inputs, {"objective": args.objective, **scenario.params()},
                             solver, timestamp=not args.no_timestamp)
    mid = manifest.id
    _write(out, f"solution_{args.objective}.csv", dumps_solution(solution, mid))
    _write(out, f"metrics_{args.objective}.txt", dumps_metrics(solution, mid))
    manifest.write(out, f"manifest_solve_{args.objective}.json")
    r = solution.residuals()
    print(f"{args.objective}: avg travel time {summary(solution)['avg_travel_time']:.6g} min, "
          f"unfairness {solution.unfairness():.6g} min, fleet {solution.fleet_usage():.6g}"
          f"/{scenario.fleet_cap:g}, max balance residual {max(r['flow_balance'], r['car_balance']):.2g}")
    return EXIT_OK


def _load_solution(args, scenario, out, objective):
    path = args.solution if getattr(args, "solution", None) else os.path.join(out, f"solution_{objective}.csv")
    return loads_solution(scenario, _read(path, "solution file (run `iamod solve` first)")), path


def _allocate(solution, args):
    return allocate_all(solution, support_tol=args.support_tol, cap=args.path_cap,
                        normalize=not args.unnormalized, on_explosion=args.on_explosion,
                        workers=args.workers)


def _alloc_params(args) -> dict:
    return {"support_tol": args.support_tol, "path_cap": args.path_cap,
            "normalized": not args.unnormalized, "on_explosion": args.on_explosion}


def cmd_allocate(args) -> int:
    scenario, files = _load(args)
    out = _out_dir(args)
    solution, sol_path = _load_solution(args, scenario, out, args.objective)
    result = _allocate(solution, args)
    manifest = make_manifest("allocate", {**files, "solution": sol_path},
                             {"objective": args.objective, **_alloc_params(args)},
                             _solver_meta(), timestamp=not args.no_timestamp)
    mid = manifest.id
    _write(out, f"allocation_{args.objective}.csv", dumps_allocation(result, mid))
    _write(out, f"paths_{args.objective}.csv", dumps_paths(result, mid))
    path_u = path_unfairness_summary(result.per_demand, scenario)
    lines = [f"# iamod-allocation-metrics v1 manifest={mid}",
             f"objective = {args.objective}",
             f"total_excess = {float(result.total)!r}",
             f"unfairness_paths = {float(path_u)!r}",
             f"failed_demands = {len(result.errors)}"]
    lines += [f"error_demand_{m} = {msg}" for m, msg in sorted(result.errors.items())]
    _write(out, f"allocation_metrics_{args.objective}.txt", "\n".join(lines) + "\n")
    manifest.write(out, f"manifest_allocate_{args.objective}.json")
    for m, msg in sorted(result.errors.items()):
        print(f"warning: demand {m}: {msg}", file=sys.stderr)
    print(f"{args.objective}: total path excess {result.total:.6g}, path-level unfairness {path_u:.6g} min")
    return EXIT_OK


def cmd_report(args) -> int:
    scenario, files = _load(args)
    out = _out_dir(args)
    if args.solution and not args.objective:
        raise UsageError("--solution needs --objective")
    objectives = [args.objective] if args.objective else [
        o for o in OBJECTIVES if os.path.isfile(os.path.join(out, f"solution_{o}.csv"))]
    if not objectives:
        raise DataError(f"no solution_*.csv in {out} (run `iamod solve` first)")
    inputs = dict(files)
    loaded = {}
    for obj in objectives:
        sol, path = _load_solution(args, scenario, out, obj)
        loaded[obj] = sol
        inputs[f"solution_{obj}"] = path
    manifest = make_manifest("report", inputs,
                             {"objectives": objectives, "bin_width": args.bin_width, **_alloc_params(args)},
                             _solver_meta(), timestamp=not args.no_timestamp)
    mid = manifest.id
    hists, entries = {}, {}
    for obj, sol in loaded.items():
        result = _allocate(sol, args)
        hists[obj, OD_PAIR] = modal_share_histogram(sol, args.bin_width, OD_PAIR)
        hists[obj, PATH] = modal_share_histogram(result, args.bin_width, PATH, scenario=scenario)
        entries[obj] = summary(sol, result)
        _write(out, f"regions_{obj}.csv", dumps_region_table(region_unfairness_table(sol), mid))
        for basis in (OD_PAIR, PATH):
            _write(out, f"hist_{basis}_{obj}.csv", dumps_histogram(hists[obj, basis], mid, f"basis={basis}"))
            if args.svg:
                _write(out, f"hist_{basis}_{obj}.svg",
                       histogram_svg(hists[obj, basis], f"{obj}, {basis} basis"))
    _write(out, "comparison.csv", comparison_table(entries, mid))
    if len(loaded) == 2:
        for basis in (OD_PAIR, PATH):
            diff = histogram_difference(hists[FAIRNESS, basis], hists[TIME, basis])
            _write(out, f"hist_diff_{basis}.csv",
                   dumps_histogram(diff, mid, f"basis={basis} difference={FAIRNESS}-{TIME}"))
    manifest.write(out, "manifest_report.json")
    with open(os.path.join(out, "comparison.csv"), encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    return EXIT_OK


def cmd_demo(args) -> int:
    out = _out_dir(args)
    scen_dir = os.path.join(out, "scenario")
    save_scenario(demo_scenario(), scen_dir)
    print(f"demo scenario written to {scen_dir}")
    args.scenario = scen_dir
    for obj in OBJECTIVES:
        args.objective = obj
        args.export_mps = args.import_solution = None
        cmd_solve(args)
        cmd_allocate(args)
    args.objective = None
    return cmd_report(args)


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help=f"output directory (default: ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    common.add_argument("--no-timestamp", action="store_true",
                        help="omit the timestamp from manifests so reruns are byte-identical")
    common.add_argument("-v", "--verbose", action="store_true")

    scen = _Parser(add_help=False)
    scen.add_argument("--scenario", help="directory holding network.json, demands.csv, params.txt")
    scen.add_argument("--network")
    scen.add_argument("--demands")
    scen.add_argument("--params")

    alloc = _Parser(add_help=False)
    alloc.add_argument("--support-tol", type=float, default=DEFAULT_SUPPORT_TOL)
    alloc.add_argument("--path-cap", type=int, default=DEFAULT_PATH_CAP)
    alloc.add_argument("--unnormalized", action="store_true",
                       help="bound path fractions by the demand rate instead of 1")
    alloc.add_argument("--on-explosion", choices=("error", "decompose"), default="error",
                       help="what to do when a demand has more than --path-cap paths")
    alloc.add_argument("--workers", type=int, default=1)
    alloc.add_argument("--solution", help="solution file (default: OUT/solution_OBJECTIVE.csv)")

    p = _Parser(prog="iamod", description="Intermodal mobility-on-demand planning")
    p.add_argument("--version", action="version", version=f"iamod {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sp = sub.add_parser("validate", parents=[common, scen], help="load and check a scenario")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("solve", parents=[common, scen], help="solve the planning LP")
    sp.add_argument("--objective", choices=OBJECTIVES, required=True)
    grp = sp.add_mutually_exclusive_group()
    grp.add_argument("--export-mps", metavar="FILE", help="write the LP in MPS format and stop")
    grp.add_argument("--import-solution", metavar="FILE",
                     help="read 'name value' lines from an external solver instead of solving")
    sp.add_argument("--strict-names", action="store_true",
                    help="fail instead of renaming when MPS names collide after sanitizing")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("allocate", parents=[common, scen, alloc], help="allocate stored flows to paths")
    sp.add_argument("--objective", choices=OBJECTIVES, required=True)
    sp.set_defaults(func=cmd_allocate)

    sp = sub.add_parser("report", parents=[common, scen, alloc], help="histograms, tables, comparison")
    sp.add_argument("--objective", choices=OBJECTIVES, help="default: every stored solution")
    sp.add_argument("--bin-width", type=float, default=DEFAULT_BIN_WIDTH)
    sp.add_argument("--svg", action="store_true", help="also write one SVG per histogram")
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("demo", parents=[common, alloc], help="run the full pipeline on the bundled demo")
    sp.add_argument("--bin-width", type=float, default=DEFAULT_BIN_WIDTH)
    sp.add_argument("--svg", action="store_true")
    sp.set_defaults(func=cmd_demo, strict_names=False, network=None, demands=None, params=None)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"iamod: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"iamod: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InfeasibleError as exc:
        print(f"iamod: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (IamodError, UnboundedError) as exc:
        print(f"iamod: solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except OSError as exc:
        print(f"iamod: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - last resort
        log.exception("internal error")
        print(f"iamod: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
