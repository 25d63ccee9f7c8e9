"""Scenario files: flat ``section.key`` configuration and use-case expansion.

A scenario is a YAML mapping. Keys may be written flat (``grid.width: 20``) or
nested; both forms are flattened before validation. Unknown keys are rejected so
that a manifest always reproduces its run.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .fleet import AgentKind, AgentSpec, EnergyModel, Role
from .gridworld import CellIndex, GridWorld, clustered_map, load_poc_map, uniform_map
from .planner import AnnealConfig, Mission, ObjectiveConfig, escort_loop
from .radio import RadioConfig


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class UseCase:
    w1: float
    w2: float
    role_based: bool
    uav_roles: frozenset
    external: AgentKind | None = None


_ETD, _R = Role.EXPLORER, Role.RELAY
USE_CASES = {
    "baseline": UseCase(0.0, 0.0, False, frozenset({_ETD})),
    "MUG": UseCase(1.0, 0.0, False, frozenset({_ETD, _R})),
    "S-EE": UseCase(0.0, 1.0, False, frozenset({_ETD}), AgentKind.STATIC_EE),
    "M-EE1": UseCase(0.3, 0.7, False, frozenset({_ETD, _R}), AgentKind.MOBILE_EE),
    "M-EE2": UseCase(0.3, 0.7, True, frozenset({_ETD, _R}), AgentKind.MOBILE_EE),
}

DEFAULTS = {
    "use_case": "baseline",
    "trials": 1,
    "seeds": None,
    "grid.kind": "uniform",
    "grid.file": None,
    "grid.width": 20,
    "grid.height": 20,
    "grid.cell_size": 250.0,
    "grid.total_poc": 0.648,
    "grid.seed": 0,
    "grid.clusters": 3,
    "grid.connectivity": 8,
    "fleet.n_uavs": 3,
    "fleet.energy_budget": 2000.0,
    "fleet.e_translate": 23.0,
    "fleet.e_rotate_per_45deg": 2.0,
    "fleet.diagonal_factor": 1.0,
    "fleet.dz": 2.0,
    "fleet.see_positions": None,
    **{f"radio.{f.name}": f.default for f in fields(RadioConfig)},
    "objective.eps": 0.005,
    "objective.n_meetings": 4,
    "objective.t_sys_ratio": 1.0 / 3.0,
    "objective.pod": 0.63,
    "objective.attraction_gamma": 0.1,
    "objective.frontier_penalty": 1.0,
    "anneal.t_init": 1.83e-3,
    "anneal.t_end": 2.11e-5,
    "anneal.cooling": 0.954,
    "anneal.chains": 15,
    "anneal.moves_per_temp": 200,
    "anneal.workers": 1,
}


def flatten(mapping: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in mapping.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(flatten(value, name + "."))
        else:
            out[name] = value
    return out


def default_see_positions(width: int, height: int) -> list[list[int]]:
    """Centre, then the four edge midpoints."""
    cx, cy = width // 2, height // 2
    return [[cx, cy], [cx, 0], [width - 1, cy], [cx, height - 1], [0, cy]]


@dataclass
class Scenario:
    config: dict
    base_dir: Path = field(default_factory=Path.cwd)

    def __post_init__(self):
        cfg = flatten(self.config)
        unknown = sorted(set(cfg) - set(DEFAULTS))
        if unknown:
            raise ScenarioError(f"unknown keys: {', '.join(unknown)}")
        merged = copy.deepcopy(DEFAULTS)
        merged.update(cfg)
        if merged["use_case"] not in USE_CASES:
            raise ScenarioError(f"use_case must be one of {sorted(USE_CASES)}")
        if merged["seeds"] is None:
            merged["seeds"] = list(range(int(merged["trials"])))
        merged["seeds"] = [int(s) for s in merged["seeds"]]
        if int(merged["trials"]) != len(merged["seeds"]):
            raise ScenarioError("trials must equal the number of seeds")
        if int(merged["trials"]) < 1:
            raise ScenarioError("trials must be >= 1")
        if int(merged["fleet.n_uavs"]) < 1:
            raise ScenarioError("fleet.n_uavs must be >= 1")
        if merged["grid.kind"] not in ("uniform", "clustered", "file"):
            raise ScenarioError("grid.kind must be uniform, clustered or file")
        if merged["grid.kind"] == "file" and not merged["grid.file"]:
            raise ScenarioError("grid.kind=file needs grid.file")
        self.config = merged
        try:
            self.radio(), self.objective(), self.anneal(0), self.energy()
            grid = self.grid()
            for k in range(self.trials):
                self.mission(k, grid)
        except ScenarioError:
            raise
        except (ValueError, TypeError) as exc:
            raise ScenarioError(str(exc)) from exc

    # ---- accessors ---------------------------------------------------------

    @property
    def use_case(self) -> UseCase:
        return USE_CASES[self.config["use_case"]]

    @property
    def trials(self) -> int:
        return int(self.config["trials"])

    @property
    def seeds(self) -> list[int]:
        return self.config["seeds"]

    def _section(self, name: str) -> dict:
        pre = name + "."
        return {k[len(pre):]: v for k, v in self.config.items() if k.startswith(pre)}

    def radio(self) -> RadioConfig:
        return RadioConfig(**{k: float(v) for k, v in self._section("radio").items()})

    def energy(self) -> EnergyModel:
        c = self.config
        return EnergyModel(float(c["fleet.e_translate"]), float(c["fleet.e_rotate_per_45deg"]),
                           float(c["fleet.diagonal_factor"]))

    def objective(self) -> ObjectiveConfig:
        c, uc = self.config, self.use_case
        return ObjectiveConfig(float(c["objective.eps"]), float(c["objective.n_meetings"]),
                               uc.w1, uc.w2, uc.role_based, float(c["objective.t_sys_ratio"]))

    def anneal(self, trial: int) -> AnnealConfig:
        c = self.config
        return AnnealConfig(float(c["anneal.t_init"]), float(c["anneal.t_end"]), float(c["anneal.cooling"]),
                            int(c["anneal.chains"]), self.seeds[trial], int(c["anneal.moves_per_temp"]),
                            int(c["anneal.workers"]))

    def grid(self) -> GridWorld:
        c = self.config
        conn = int(c["grid.connectivity"])
        kind = c["grid.kind"]
        if kind == "file":
            path = Path(c["grid.file"])
            if not path.is_absolute():
                path = self.base_dir / path
            return load_poc_map(path, conn)
        args = (int(c["grid.width"]), int(c["grid.height"]), float(c["grid.cell_size"]), float(c["grid.total_poc"]))
        if kind == "uniform":
            return uniform_map(*args, connectivity=conn)
        return clustered_map(*args, seed=int(c["grid.seed"]), n_clusters=int(c["grid.clusters"]), connectivity=conn)

    def see_position(self, grid: GridWorld, trial: int) -> CellIndex:
        positions = self.config["fleet.see_positions"] or default_see_positions(grid.width, grid.height)
        col, row = positions[trial % len(positions)]
        cell = CellIndex(int(col), int(row))
        if not grid.is_valid(cell):
            raise ScenarioError(f"static EE position ({col},{row}) is not a valid cell")
        return cell

    def specs(self, grid: GridWorld, trial: int) -> list[AgentSpec]:
        c, uc = self.config, self.use_case
        n = int(c["fleet.n_uavs"])
        specs = [AgentSpec(i, AgentKind.UAV, uc.uav_roles, float(c["fleet.energy_budget"])) for i in range(n)]
        if uc.external is AgentKind.STATIC_EE:
            specs.append(AgentSpec(n, AgentKind.STATIC_EE, {Role.RELAY}, fixed_position=self.see_position(grid, trial)))
        elif uc.external is AgentKind.MOBILE_EE:
            specs.append(AgentSpec(n, AgentKind.MOBILE_EE, {Role.RELAY}))
        return specs

    def mission(self, trial: int, grid: GridWorld | None = None) -> Mission:
        grid = grid or self.grid()
        specs = self.specs(grid, trial)
        loop = None
        if any(s.kind is AgentKind.MOBILE_EE for s in specs):
            loop = escort_loop(grid, float(self.config["objective.frontier_penalty"]))
        return Mission(grid, specs, self.radio(), self.objective(), self.energy(),
                       float(self.config["fleet.dz"]), loop)

    def to_json(self) -> dict:
        return dict(self.config)


def load_scenario(path) -> Scenario:
    """Reads a YAML scenario, or the ``scenario`` block of a run manifest (JSON)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot parse {path}: {exc}") from exc
    if isinstance(data, dict) and path.suffix == ".json" and "scenario" in data:
        data = data["scenario"]
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping")
    return Scenario(data, path.parent.resolve())
