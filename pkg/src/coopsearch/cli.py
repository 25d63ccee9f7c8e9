"""Command line entry point: run, compare, validate, gen-map."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .experiment import CompareError, compare, run
from .fleet import FleetError
from .gridworld import GridError, clustered_map, dumps_poc_map, uniform_map
from .planner import PlanningError
from .scenario import ScenarioError, load_scenario

EXIT_OK, EXIT_VALIDATION, EXIT_PLANNING = 0, 2, 3


def _fail(kind: str, exc: Exception, code: int) -> int:
    print(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coopsearch", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="optimise, simulate and score every trial of a scenario")
    r.add_argument("scenario", help="scenario YAML, or a manifest.json from an earlier run")
    r.add_argument("-o", "--output", required=True, help="output directory")
    r.add_argument("--parallel-trials", type=int, default=1, metavar="N")
    r.add_argument("--figures", action="store_true", help="also render path and knowledge figures")

    c = sub.add_parser("compare", help="tabulate metrics of several runs against a baseline run")
    c.add_argument("runs", nargs="+", help="run directories; the first is the baseline unless --baseline")
    c.add_argument("-o", "--output", required=True, help="comparison CSV file")
    c.add_argument("--baseline", help="run directory to gap against")
    c.add_argument("--no-figures", action="store_true")

    v = sub.add_parser("validate", help="check a scenario without running it")
    v.add_argument("scenario")

    g = sub.add_parser("gen-map", help="write a POC map file")
    g.add_argument("--kind", choices=["uniform", "clustered"], required=True)
    g.add_argument("--total-poc", type=float, default=0.648)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--width", type=int, default=20)
    g.add_argument("--height", type=int, default=20)
    g.add_argument("--cell-size", type=float, default=250.0)
    g.add_argument("--clusters", type=int, default=3)
    g.add_argument("-o", "--output", help="map file (default: stdout)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            sc = load_scenario(args.scenario)
            print(f"ok: use_case={sc.config['use_case']} trials={sc.trials}")
        elif args.command == "run":
            sc = load_scenario(args.scenario)
            manifest = run(sc, args.output, args.parallel_trials, args.figures)
            for t in manifest["trials"]:
                print(f"trial {t['trial']} seed {t['seed']}: J={t['J']:.6g}")
        elif args.command == "compare":
            runs = list(args.runs)
            baseline = 0
            if args.baseline:
                if args.baseline not in runs:
                    runs.insert(0, args.baseline)
                baseline = runs.index(args.baseline)
            compare(runs, args.output, baseline, figures=not args.no_figures)
            print(f"wrote {args.output}")
        elif args.command == "gen-map":
            common = dict(width=args.width, height=args.height, cell_size=args.cell_size, total_poc=args.total_poc)
            grid = uniform_map(**common) if args.kind == "uniform" else \
                clustered_map(**common, seed=args.seed, n_clusters=args.clusters)
            text = dumps_poc_map(grid)
            if args.output:
                with open(args.output, "w", encoding="utf-8") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
    except (ScenarioError, GridError, CompareError) as exc:
        return _fail("validation", exc, EXIT_VALIDATION)
    except (PlanningError, FleetError) as exc:
        return _fail("planning", exc, EXIT_PLANNING)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
