"""Trial orchestration, result persistence and cross-run comparison."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .coop import write_vom_csv
from .fleet import write_paths_csv
from .gridworld import save_poc_map
from .metrics import score, write_report
from .planner import attraction_init, evaluate_objective, optimize
from .radio import link_samples, write_connectivity_csv
from .scenario import Scenario

log = logging.getLogger(__name__)

METRICS = ["E", "TPOC", "EP", "ETR", "EART", "ETAK", "EIK"]


def trial_dir(out_dir, trial: int) -> Path:
    return Path(out_dir) / f"trial_{trial:02d}"


def _vom_rows(trace):
    for s in range(trace.n_steps):
        partners = {i: [] for i in range(trace.n_agents)}
        for i, j in trace.exchanges[s]:
            partners[i].append(trace.agent_ids[j])
            partners[j].append(trace.agent_ids[i])
        for i in range(trace.n_agents):
            if not trace.alive[i, s]:
                continue
            row = trace.csi[s, i]
            csi = float(np.nanmax(row)) if np.any(~np.isnan(row)) else -1.0
            yield (s, trace.agent_ids[i], trace.vom[i, s], trace.vom_etd[i, s], trace.vom_r[i, s],
                   csi, partners[i])


def run_trial(scenario: Scenario, trial: int, out_dir, figures: bool = False) -> dict:
    seed = scenario.seeds[trial]
    mission = scenario.mission(trial)
    initial = attraction_init(mission, seed, float(scenario.config["objective.attraction_gamma"]))
    plan = optimize(initial, mission, scenario.anneal(trial))
    J, trace = evaluate_objective(plan, mission)
    report = score(trace, pod=float(scenario.config["objective.pod"]))

    tdir = trial_dir(out_dir, trial)
    tdir.mkdir(parents=True, exist_ok=True)
    with open(tdir / "plan.csv", "w", newline="") as fh:
        write_paths_csv(fh, mission.grid, mission.specs, plan.paths, mission.energy, mission.dz)
    with open(tdir / "connectivity.csv", "w", newline="") as fh:
        samples = (ls for s in range(trace.n_steps)
                   for ls in link_samples(s, trace.positions[:, s], trace.alive[:, s], mission.radio, trace.agent_ids))
        write_connectivity_csv(fh, samples)
    with open(tdir / "vom.csv", "w", newline="") as fh:
        write_vom_csv(fh, _vom_rows(trace))
    write_report(report, trace, tdir)
    if figures:
        from .plotting import plot_knowledge, plot_paths
        plot_paths(mission.grid, plan.paths, mission.specs, tdir / "paths.png")
        plot_knowledge(report, trace.agent_ids, tdir / "knowledge.png")
    return {"trial": trial, "seed": seed, "J_initial": initial.objective_value, "J": J,
            "metrics": str((tdir / "metrics.json").relative_to(out_dir))}


def _trial_task(args):
    return run_trial(*args)


def run(scenario: Scenario, out_dir, parallel_trials: int = 1, figures: bool = False) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    save_poc_map(scenario.grid(), out_dir / "grid.txt")
    jobs = [(scenario, k, out_dir, figures) for k in range(scenario.trials)]
    if parallel_trials > 1 and scenario.trials > 1:
        with ProcessPoolExecutor(max_workers=parallel_trials) as pool:
            trials = list(pool.map(_trial_task, jobs))
    else:
        trials = [run_trial(*job) for job in jobs]
    config = dict(scenario.config)
    if config.get("grid.file"):
        config["grid.file"] = str((scenario.base_dir / config["grid.file"]).resolve())
    manifest = {
        "tool_version": __version__,
        "scenario": config,
        "seeds": scenario.seeds,
        "trials": trials,
        "wall_time_s": time.perf_counter() - t0,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log.info("run finished: %d trials in %.1fs", scenario.trials, manifest["wall_time_s"])
    return manifest


class CompareError(RuntimeError):
    pass


def load_run(run_dir) -> tuple[str, list[dict]]:
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        raise CompareError(f"missing {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    missing, reports = [], []
    for t in manifest["trials"]:
        p = run_dir / t["metrics"]
        if not p.exists():
            missing.append(str(p))
        else:
            reports.append(json.loads(p.read_text()))
    if missing:
        raise CompareError("missing metric files: " + ", ".join(missing))
    return manifest["scenario"]["use_case"], reports


def _gap(value: float, base: float) -> float:
    if base == 0:
        return 0.0 if value == 0 else math.nan
    return 100.0 * (value - base) / abs(base)


def compare(run_dirs, out_file, baseline: int = 0, figures: bool = True) -> list[dict]:
    """Per-metric mean/min/max over trials for every run, with gaps to the baseline run."""
    if len(run_dirs) < 2:
        raise CompareError("compare needs at least two run directories")
    runs = [(Path(d), *load_run(d)) for d in run_dirs]
    stats = []
    for run_dir, use_case, reports in runs:
        for m in METRICS:
            vals = np.array([r[m] for r in reports], dtype=float)
            stats.append({"run": run_dir.name, "use_case": use_case, "metric": m, "trials": len(vals),
                          "mean": float(vals.mean()), "min": float(vals.min()), "max": float(vals.max())})
    base_name = runs[baseline][0].name
    base = {s["metric"]: s["mean"] for s in stats if s["run"] == base_name}
    for s in stats:
        s["gap_pct"] = _gap(s["mean"], base[s["metric"]])
    out_file = Path(out_file)
    out_file.parent.mkdir(parents=True, exist_ok=True)
    cols = ["run", "use_case", "metric", "trials", "mean", "min", "max", "gap_pct"]
    with open(out_file, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for s in stats:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in s.items()})
    if figures:
        from .plotting import plot_comparison
        plot_comparison(stats, out_file.parent / f"{out_file.stem}_figures")
    return stats
