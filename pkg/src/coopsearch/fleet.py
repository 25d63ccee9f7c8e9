"""Agents, altitude stacking, energy accounting and path feasibility."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .gridworld import CellIndex, GridWorld, cell_center


class FleetError(ValueError):
    pass


class AgentKind(str, enum.Enum):
    UAV = "UAV"
    STATIC_EE = "StaticEE"
    MOBILE_EE = "MobileEE"


class Role(str, enum.Enum):
    EXPLORER = "ETD"
    RELAY = "R"


@dataclass(frozen=True)
class EnergyModel:
    e_translate: float = 23.0
    e_rotate_per_45deg: float = 2.0
    diagonal_factor: float = 1.0


@dataclass(frozen=True)
class AgentSpec:
    id: int
    kind: AgentKind
    roles: frozenset = field(default_factory=lambda: frozenset({Role.EXPLORER}))
    energy_budget: float | None = None
    fixed_position: CellIndex | None = None

    def __post_init__(self):
        object.__setattr__(self, "roles", frozenset(Role(r) for r in self.roles))
        if not self.roles:
            raise FleetError(f"agent {self.id}: roles must be non-empty")
        if self.kind is AgentKind.UAV and not (self.energy_budget and self.energy_budget > 0):
            raise FleetError(f"UAV {self.id}: energy_budget must be positive")
        if self.kind is AgentKind.STATIC_EE and self.fixed_position is None:
            raise FleetError(f"static EE {self.id}: fixed_position required")

    @property
    def is_explorer(self) -> bool:
        return Role.EXPLORER in self.roles

    @property
    def is_relay(self) -> bool:
        return Role.RELAY in self.roles


@dataclass(frozen=True)
class KinematicState:
    cell: CellIndex
    position: tuple[float, float, float]
    yaw: float = 0.0


@dataclass(frozen=True)
class AgentPath:
    cells: tuple[CellIndex, ...]

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(CellIndex(*c) for c in self.cells))

    @property
    def lifetime(self) -> int:
        return len(self.cells)

    def __len__(self):
        return len(self.cells)


def altitude(spec: AgentSpec, n_agents: int, dz: float = 2.0) -> float:
    """Flight altitude; UAV ids are assumed to be 0..n_uavs-1."""
    if spec.kind is AgentKind.UAV:
        return dz * (spec.id + 1)
    if spec.kind is AgentKind.MOBILE_EE:
        return dz * n_agents
    return 0.0


def kinematic_state(grid: GridWorld, spec: AgentSpec, cell, n_agents: int,
                    dz: float = 2.0, yaw: float = 0.0) -> KinematicState:
    x, y = cell_center(grid, cell)
    return KinematicState(CellIndex(*cell), (x, y, altitude(spec, n_agents, dz)), yaw)


def yaw_rotation(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def _heading(frm, to) -> float:
    return math.atan2(to[1] - frm[1], to[0] - frm[0])


def step_energy(frm, heading_before: float | None, to, e_translate: float = 23.0,
                e_rotate_per_45deg: float = 2.0, diagonal_factor: float = 1.0,
                connectivity: int = 8) -> tuple[float, float | None]:
    """Energy of one step and the heading after it.

    ``heading_before=None`` means no heading yet (the first move is not charged a
    rotation).
    """
    dc, dr = to[0] - frm[0], to[1] - frm[1]
    if (dc, dr) == (0, 0):
        return 0.0, heading_before
    adjacent = max(abs(dc), abs(dr)) == 1 if connectivity == 8 else abs(dc) + abs(dr) == 1
    if not adjacent:
        raise FleetError(f"cells {tuple(frm)} -> {tuple(to)} are not adjacent")
    heading = _heading(frm, to)
    cost = e_translate * (diagonal_factor if dc and dr else 1.0)
    if heading_before is not None:
        turn = abs((heading - heading_before + math.pi) % (2 * math.pi) - math.pi)
        cost += e_rotate_per_45deg * round(turn / (math.pi / 4))
    return cost, heading


def path_step_costs(cells: Sequence, energy: EnergyModel = EnergyModel(), connectivity: int = 8) -> np.ndarray:
    """Per-step energy of a UAV path; entering the start cell is one translation."""
    if not len(cells):
        return np.zeros(0)
    costs = [energy.e_translate]
    heading = None
    for a, b in zip(cells[:-1], cells[1:]):
        if tuple(a) == tuple(b):
            raise FleetError(f"UAV path holds position at cell {tuple(a)}")
        cost, heading = step_energy(a, heading, b, energy.e_translate, energy.e_rotate_per_45deg,
                                    energy.diagonal_factor, connectivity)
        costs.append(cost)
    return np.array(costs)


@dataclass
class Feasibility:
    feasible: bool
    step: int | None = None
    reason: str = ""
    residual_energy: float | None = None

    def __bool__(self):
        return self.feasible


def validate_path(spec: AgentSpec, path: AgentPath, grid: GridWorld,
                  energy: EnergyModel = EnergyModel()) -> Feasibility:
    cells = path.cells
    if not cells:
        return Feasibility(False, 0, "empty path")
    for s, c in enumerate(cells):
        if not grid.is_valid(c):
            return Feasibility(False, s, f"cell {tuple(c)} invalid or out of bounds")
    if spec.kind is AgentKind.STATIC_EE:
        if any(c != spec.fixed_position for c in cells):
            return Feasibility(False, 0, "static EE moved")
        return Feasibility(True)
    for s in range(1, len(cells)):
        a, b = cells[s - 1], cells[s]
        if not grid.adjacent(a, b):
            return Feasibility(False, s, f"non-adjacent move {tuple(a)} -> {tuple(b)}")
    if spec.kind is not AgentKind.UAV:
        return Feasibility(True)
    spent = np.cumsum(path_step_costs(cells, energy, grid.connectivity))
    over = np.nonzero(spent > spec.energy_budget + 1e-9)[0]
    if len(over):
        s = int(over[0])
        return Feasibility(False, s, f"energy {spent[s]:g} exceeds budget {spec.energy_budget:g}")
    return Feasibility(True, residual_energy=float(spec.energy_budget - spent[-1]))


def clip_or_extend_path(path: AgentPath, target_len: int) -> AgentPath:
    cells = path.cells
    if not cells:
        raise FleetError("cannot adapt an empty path")
    if target_len <= len(cells):
        return AgentPath(cells[:target_len])
    first, last = cells[0], cells[-1]
    if max(abs(first[0] - last[0]), abs(first[1] - last[1])) > 1:
        raise FleetError("extension needs a cyclic path (last cell adjacent or equal to first)")
    return AgentPath(tuple(cells[k % len(cells)] for k in range(target_len)))


PATH_CSV_HEADER = ["agent_id", "step", "col", "row", "x_m", "y_m", "z_m", "residual_energy"]


def write_paths_csv(fh, grid: GridWorld, specs: Sequence[AgentSpec], paths: Sequence[AgentPath],
                    energy: EnergyModel = EnergyModel(), dz: float = 2.0) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(PATH_CSV_HEADER)
    for spec, path in zip(specs, paths):
        z = altitude(spec, len(specs), dz)
        if spec.kind is AgentKind.UAV:
            residual = spec.energy_budget - np.cumsum(path_step_costs(path.cells, energy, grid.connectivity))
        else:
            residual = [None] * len(path)
        for s, c in enumerate(path.cells):
            x, y = cell_center(grid, c)
            w.writerow([spec.id, s, c.col, c.row, repr(x), repr(y), repr(z),
                        "" if residual[s] is None else repr(float(residual[s]))])
