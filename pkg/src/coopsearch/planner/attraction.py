"""Greedy initial solution: each UAV follows the field of unclaimed probability mass."""

from __future__ import annotations

import numpy as np

from ..gridworld import neighbor_table
from .mission import Mission, MissionPlan


def attraction_paths(mission: Mission, seed: int = 0, gamma: float = 0.1,
                     starts: list[int] | None = None) -> list[np.ndarray]:
    grid = mission.grid
    rng = np.random.default_rng(seed)
    poc = grid.flat_poc
    valid = grid.valid.ravel()
    nbrs = neighbor_table(grid)
    claimed = np.zeros(grid.n_cells, dtype=bool)
    cx, cy = mission.cell_col.astype(float), mission.cell_row.astype(float)
    paths = []
    for u, spec in enumerate(mission.uav_specs):
        if starts is not None:
            start = int(starts[u])
        else:
            free = np.nonzero(valid & ~claimed)[0]
            if not len(free):
                free = np.nonzero(valid)[0]
            if not paths:
                start = int(rng.choice(free))
            else:
                # farthest point from the other UAVs' start cells
                s0 = np.array([p[0] for p in paths])
                gap = np.hypot(cx[free][:, None] - cx[s0][None, :], cy[free][:, None] - cy[s0][None, :]).min(axis=1)
                start = int(free[int(np.argmax(gap))])
        path = [start]
        claimed[start] = True
        while True:
            cand = nbrs[path[-1]]
            if not len(cand):
                break
            mass = poc * ~claimed
            d = np.hypot(cx[cand][:, None] - cx[None, :], cy[cand][:, None] - cy[None, :])
            with np.errstate(divide="ignore"):
                inv = np.where(d > 0, 1.0 / d, 0.0)
            score = mass[cand] + gamma * (inv @ mass)
            nxt = int(cand[int(np.argmax(score))])   # neighbors are row-major: ties -> lowest index
            trial = np.array(path + [nxt], dtype=np.int64)
            if mission.affordable_prefix(trial, spec.energy_budget) < len(trial):
                break
            path.append(nxt)
            claimed[nxt] = True
        paths.append(np.array(path, dtype=np.int64))
    return paths


def attraction_init(mission: Mission, seed: int = 0, gamma: float = 0.1) -> MissionPlan:
    plan = mission.plan_from_uav_paths(attraction_paths(mission, seed, gamma))
    plan.objective_value = mission.objective_value(mission.uav_flat_paths(plan))
    return plan
