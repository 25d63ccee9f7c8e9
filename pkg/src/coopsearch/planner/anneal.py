"""Parallel-chain simulated annealing over UAV trajectories."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..gridworld import neighbor_table
from .mission import Mission, MissionPlan

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnnealConfig:
    t_init: float = 1.83e-3
    t_end: float = 2.11e-5
    cooling: float = 0.954
    chains: int = 15
    seed: int = 0
    moves_per_temp: int = 200
    workers: int = 1

    def __post_init__(self):
        if not 0 < self.t_end <= self.t_init:
            raise ValueError("need 0 < t_end <= t_init")
        if not 0 < self.cooling < 1:
            raise ValueError("cooling must be in (0, 1)")
        if self.chains < 1 or self.moves_per_temp < 1 or self.workers < 1:
            raise ValueError("chains, moves_per_temp and workers must be >= 1")

    def temperatures(self) -> list[float]:
        temps = [self.t_init]
        while temps[-1] * self.cooling >= self.t_end:
            temps.append(temps[-1] * self.cooling)
        return temps


class Proposer:
    """Neighborhood moves on a list of flat-index UAV paths.

    Paths are never modified in place, so unchanged agents share arrays with the
    parent solution. Every proposal is repaired to fit the energy budget by
    truncating the tail.
    """

    MIX = (0.40, 0.25, 0.15, 0.20)  # regrow, tail, head, swap

    def __init__(self, mission: Mission, max_window: int = 6, max_extension: int = 4,
                 novelty_bias: float = 4.0, straight_bias: float = 2.0):
        self.mission = mission
        self.novelty_bias = novelty_bias
        self.straight_bias = straight_bias
        poc = self.mission.grid.flat_poc
        self._poc_rel = poc / poc.max() if poc.max() > 0 else poc
        self._unvisited = np.ones(mission.grid.n_cells, dtype=bool)
        self.grid = mission.grid
        self.col = mission.cell_col
        self.row = mission.cell_row
        self.nbrs = neighbor_table(self.grid)
        self.budgets = [s.energy_budget for s in mission.uav_specs]
        self.max_window = max_window
        self.max_extension = max_extension
        self.king = self.grid.connectivity == 8
        self._cum = np.cumsum(self.MIX)

    def dist(self, a, b):
        dc = np.abs(self.col[a] - self.col[b])
        dr = np.abs(self.row[a] - self.row[b])
        return np.maximum(dc, dr) if self.king else dc + dr

    def _pick(self, cand, cur: int, prev: int | None, rng) -> int:
        """Random successor, favouring unvisited mass and straight continuation."""
        w = 1.0 + self.novelty_bias * self._unvisited[cand] * self._poc_rel[cand]
        if prev is not None:
            straight = (self.col[cand] - self.col[cur] == self.col[cur] - self.col[prev]) & \
                       (self.row[cand] - self.row[cur] == self.row[cur] - self.row[prev])
            w = w + self.straight_bias * straight
        return int(cand[np.searchsorted(np.cumsum(w), rng.random() * w.sum(), side="right")])

    def random_walk(self, start: int, k: int, rng, previous: int | None = None) -> list[int] | None:
        out, cur, prev = [], start, previous
        for _ in range(k):
            cand = self.nbrs[cur]
            if prev is not None and len(cand) > 1:
                cand = cand[cand != prev]
            if not len(cand):
                return out or None
            prev, cur = cur, self._pick(cand, cur, prev, rng)
            out.append(cur)
        return out

    def bridge(self, a: int, b: int, m: int, rng, previous: int | None = None) -> list[int] | None:
        """m intermediate cells joining a to b by adjacent moves."""
        out, cur, prev = [], a, previous
        for k in range(1, m + 1):
            rem = m + 1 - k
            cand = self.nbrs[cur]
            d = self.dist(cand, b)
            ok = (d <= rem) & ((d >= 1) if rem == 1 else True)
            if not self.king:
                ok &= (rem - d) % 2 == 0
            cand = cand[ok]
            if not len(cand):
                return None
            prev, cur = cur, self._pick(cand, cur, prev, rng)
            out.append(cur)
        if int(self.dist(cur, b)) != 1:
            return None
        return out

    def _regrow(self, p, rng):
        L = len(p)
        if L < 3:
            return self._endpoint(p, rng)
        a = int(rng.integers(1, L - 1))
        wl = int(rng.integers(1, min(self.max_window, L - 1 - a) + 1))
        b = a + wl
        d = int(self.dist(p[a - 1], p[b]))
        lo = 1 if d == 0 else d - 1
        hi = wl + 2
        if lo > hi:
            return None
        m = int(rng.integers(lo, hi + 1))
        mid = self.bridge(int(p[a - 1]), int(p[b]), m, rng, int(p[a - 2]) if a >= 2 else None)
        if mid is None:
            return None
        return np.concatenate([p[:a], np.array(mid, dtype=np.int64), p[b:]])

    def _rewalk_tail(self, p, rng):
        """Cut the path after a random cell and walk on from there, in one move."""
        L = len(p)
        cut = int(rng.integers(1, L))
        k = int(rng.integers(1, L - cut + self.max_extension + 1))
        walk = self.random_walk(int(p[cut - 1]), k, rng, int(p[cut - 2]) if cut >= 2 else None)
        if walk is None:
            return None
        return np.concatenate([p[:cut], np.array(walk, dtype=np.int64)])

    def _endpoint(self, p, rng):
        L = len(p)
        r = rng.random()
        if L == 1 or r < 0.4:
            k = int(rng.integers(1, self.max_extension + 1))
            walk = self.random_walk(int(p[-1]), k, rng, int(p[-2]) if L > 1 else None)
            if walk is None:
                return None
            return np.concatenate([p, np.array(walk, dtype=np.int64)])
        if r < 0.7:
            return self._rewalk_tail(p, rng)
        k = int(rng.integers(1, min(3, L - 1) + 1))
        return p[:-k]

    def _reroot(self, p, rng):
        L = len(p)
        r = rng.random()
        if L == 1 or r < 0.4:
            k = int(rng.integers(1, self.max_extension + 1))
            walk = self.random_walk(int(p[0]), k, rng, int(p[1]) if L > 1 else None)
            if walk is None:
                return None
            return np.concatenate([np.array(walk[::-1], dtype=np.int64), p])
        if r < 0.6:
            # new head: re-walk the reversed path's tail, then restore the direction
            new = self._rewalk_tail(p[::-1], rng)
            return None if new is None else new[::-1].copy()
        if r < 0.8:
            return p[::-1].copy()
        k = int(rng.integers(1, min(3, L - 1) + 1))
        return p[k:]

    def _swap(self, paths, rng):
        u, v = (int(x) for x in rng.choice(len(paths), size=2, replace=False))
        A, B = paths[u], paths[v]
        if len(A) < 2 or len(B) < 2:
            return None
        p = int(rng.integers(len(A) - 1))
        ok = (self.dist(A[p], B[1:]) == 1) & (self.dist(B[:-1], A[p + 1]) == 1)
        cands = np.nonzero(ok)[0]
        if not len(cands):
            return None
        q = int(cands[rng.integers(len(cands))])
        return {u: np.concatenate([A[: p + 1], B[q + 1:]]), v: np.concatenate([B[: q + 1], A[p + 1:]])}

    def propose(self, paths: Sequence[np.ndarray], rng) -> list[np.ndarray] | None:
        self._unvisited = np.ones(self.mission.grid.n_cells, dtype=bool)
        self._unvisited[np.concatenate(paths)] = False
        r = rng.random()
        op = int(np.searchsorted(self._cum, r, side="right"))
        if op == 3 and len(paths) < 2:
            op = 0
        if op == 3:
            changed = self._swap(paths, rng)
        else:
            u = int(rng.integers(len(paths)))
            fn = (self._regrow, self._endpoint, self._reroot)[op]
            new = fn(paths[u], rng)
            changed = None if new is None else {u: new}
        if not changed:
            return None
        out = list(paths)
        for u, new in changed.items():
            n = self.mission.affordable_prefix(new, self.budgets[u])
            if n == 0:
                return None
            out[u] = new[:n] if n < len(new) else new
        return out


def run_chain(mission: Mission, start: Sequence[np.ndarray], anneal: AnnealConfig, seed,
              callback: Callable | None = None) -> tuple[float, list[np.ndarray]]:
    rng = np.random.default_rng(seed)
    proposer = Proposer(mission)
    cur = list(start)
    cur_j = mission.objective_value(cur)
    best, best_j = cur, cur_j
    for temp in anneal.temperatures():
        for _ in range(anneal.moves_per_temp):
            cand = proposer.propose(cur, rng)
            if cand is None:
                continue
            j = mission.objective_value(cand)
            delta = j - cur_j
            if delta >= 0 or rng.random() < math.exp(delta / temp):
                cur, cur_j = cand, j
                if callback is not None:
                    callback(cur)
                if j > best_j:
                    best, best_j = cand, j
    return best_j, best


def _chain_task(args):
    return run_chain(*args)


def optimize(initial: MissionPlan, mission: Mission, anneal: AnnealConfig = AnnealConfig(),
             callback: Callable | None = None) -> MissionPlan:
    """Best plan over ``anneal.chains`` independent chains started from ``initial``.

    EE paths are not optimised; they are re-derived from the UAV paths.
    ``callback`` receives every accepted solution and only runs with ``workers == 1``.
    """
    start = mission.uav_flat_paths(initial)
    seeds = np.random.SeedSequence(anneal.seed).spawn(anneal.chains)
    if anneal.workers > 1 and anneal.chains > 1:
        with ProcessPoolExecutor(max_workers=anneal.workers) as pool:
            results = list(pool.map(_chain_task, [(mission, start, anneal, sd) for sd in seeds]))
    else:
        results = [run_chain(mission, start, anneal, sd, callback) for sd in seeds]
    best_k = max(range(len(results)), key=lambda k: (results[k][0], -k))
    best_j, best = results[best_k]
    log.debug("chains J=%s, best chain %d", [r[0] for r in results], best_k)
    plan = mission.plan_from_uav_paths(best)
    plan.objective_value = best_j
    return plan
