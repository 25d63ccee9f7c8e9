"""Mission setup, objective evaluation and step-by-step simulation."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from ..coop import (KnowledgeLedger, VomState, cooperation_term, cooperation_term_role_based,
                    detect_exchanges, vom, vom_value)
from ..fleet import (AgentKind, AgentPath, AgentSpec, EnergyModel, FleetError, altitude,
                     clip_or_extend_path, validate_path)
from ..gridworld import GridWorld, cell_center
from ..metrics import MissionTrace
from ..radio import RadioConfig, agent_csi, link_csi, pairwise_csi


class PlanningError(RuntimeError):
    pass


@dataclass(frozen=True)
class ObjectiveConfig:
    time_discount_eps: float = 0.005
    n_meetings: float = 4
    w1: float = 0.0
    w2: float = 0.0
    role_based: bool = False
    t_sys_ratio: float = 1.0 / 3.0

    def __post_init__(self):
        if self.time_discount_eps < 0:
            raise ValueError("time_discount_eps must be >= 0")
        if self.n_meetings < 1:
            raise ValueError("n_meetings must be >= 1")
        if self.w1 < 0 or self.w2 < 0:
            raise ValueError("weights must be >= 0")
        if self.t_sys_ratio <= 0:
            raise ValueError("t_sys_ratio must be > 0")

    @property
    def cooperative(self) -> bool:
        return self.w1 > 0 or self.w2 > 0


@dataclass
class MissionPlan:
    paths: list[AgentPath]
    objective_value: float | None = None
    trace: MissionTrace | None = None

    @property
    def mission_length(self) -> int:
        return max(len(p) for p in self.paths)


# direction index of a move (dcol, drow), counter-clockwise in 45 degree steps
_DIR = {(1, 0): 0, (1, 1): 1, (0, 1): 2, (-1, 1): 3, (-1, 0): 4, (-1, -1): 5, (0, -1): 6, (1, -1): 7}
_DIR_TABLE = np.full((3, 3), -1, dtype=np.int64)
for (_dc, _dr), _k in _DIR.items():
    _DIR_TABLE[_dc + 1, _dr + 1] = _k


@dataclass
class Mission:
    """Everything needed to score a plan. UAVs must come first, with ids 0..U-1."""

    grid: GridWorld
    specs: list[AgentSpec]
    radio: RadioConfig = field(default_factory=RadioConfig)
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    energy: EnergyModel = field(default_factory=EnergyModel)
    dz: float = 2.0
    escort_loop: AgentPath | None = None

    def __post_init__(self):
        for k, spec in enumerate(self.specs):
            if spec.id != k:
                raise PlanningError("agent ids must be 0..n-1 in order")
        kinds = [s.kind for s in self.specs]
        n_uav = sum(k is AgentKind.UAV for k in kinds)
        if n_uav == 0:
            raise PlanningError("mission needs at least one UAV")
        if any(k is AgentKind.UAV for k in kinds[n_uav:]):
            raise PlanningError("UAVs must precede external entities")
        if AgentKind.MOBILE_EE in kinds and self.escort_loop is None:
            raise PlanningError("a mobile EE needs an escort loop")
        g = self.grid
        idx = np.arange(g.n_cells)
        self.cell_col = idx % g.width
        self.cell_row = idx // g.width
        self.cell_x = (self.cell_col + 0.5) * g.cell_size
        self.cell_y = (self.cell_row + 0.5) * g.cell_size
        self.n_uavs = n_uav
        A = len(self.specs)
        self.z = np.array([altitude(s, A, self.dz) for s in self.specs])
        self.explorer = np.array([s.is_explorer for s in self.specs])
        is_relay_only = np.array([s.is_relay and not s.is_explorer for s in self.specs])
        off = ~np.eye(A, dtype=bool)
        # peer classes: explorers (inter-UAV links) and pure relays (UAV-EE links)
        self.etd_peers = off & self.explorer[None, :]
        self.r_peers = off & is_relay_only[None, :]
        self.has_etd = self.etd_peers.any(axis=1)
        self.has_r = self.r_peers.any(axis=1)
        self._explorer_idx = np.nonzero(self.explorer)[0]

    # ---- paths -----------------------------------------------------------------

    @property
    def uav_specs(self) -> list[AgentSpec]:
        return self.specs[: self.n_uavs]

    def flat_path(self, path: AgentPath) -> np.ndarray:
        return np.array([c.row * self.grid.width + c.col for c in path.cells], dtype=np.int64)

    def to_agent_path(self, flat: np.ndarray) -> AgentPath:
        return AgentPath(tuple((int(self.cell_col[k]), int(self.cell_row[k])) for k in flat))

    def step_costs(self, flat: np.ndarray) -> np.ndarray:
        """Energy per step of a UAV path (vectorised; first entry is the take-off move)."""
        e = self.energy
        costs = np.empty(len(flat))
        if not len(flat):
            return costs
        costs[0] = e.e_translate
        if len(flat) == 1:
            return costs
        dc = np.diff(self.cell_col[flat])
        dr = np.diff(self.cell_row[flat])
        d = _DIR_TABLE[dc + 1, dr + 1]
        move = np.where((dc != 0) & (dr != 0), e.e_translate * e.diagonal_factor, e.e_translate)
        turn = np.abs(np.diff(d)) % 8
        turn = np.minimum(turn, 8 - turn)
        costs[1:] = move
        costs[2:] += e.e_rotate_per_45deg * turn
        return costs

    def affordable_prefix(self, flat: np.ndarray, budget: float) -> int:
        spent = np.cumsum(self.step_costs(flat))
        return int(np.searchsorted(spent, budget + 1e-9, side="right"))

    def escort_path(self, length: int) -> AgentPath:
        return clip_or_extend_path(self.escort_loop, length)

    def agent_cells(self, uav_paths: Sequence[np.ndarray]) -> np.ndarray:
        """(A, S) flat cells of every agent, -1 after an agent's lifetime."""
        S = max(len(p) for p in uav_paths)
        A = len(self.specs)
        cells = np.full((A, S), -1, dtype=np.int64)
        for i, p in enumerate(uav_paths):
            cells[i, : len(p)] = p
        for spec in self.specs[self.n_uavs:]:
            if spec.kind is AgentKind.STATIC_EE:
                cells[spec.id] = self.grid.flat(spec.fixed_position)
            else:
                cells[spec.id] = self.flat_path(self.escort_path(S))
        return cells

    def plan_from_uav_paths(self, uav_paths: Sequence[np.ndarray]) -> MissionPlan:
        cells = self.agent_cells(uav_paths)
        paths = [self.to_agent_path(p) for p in uav_paths]
        paths += [self.to_agent_path(cells[spec.id]) for spec in self.specs[self.n_uavs:]]
        return MissionPlan(paths)

    def uav_flat_paths(self, plan: MissionPlan) -> list[np.ndarray]:
        return [self.flat_path(p) for p in plan.paths[: self.n_uavs]]

    def validate(self, plan: MissionPlan) -> None:
        if len(plan.paths) != len(self.specs):
            raise PlanningError("plan must hold one path per agent")
        for spec, path in zip(self.specs, plan.paths):
            rep = validate_path(spec, path, self.grid, self.energy)
            if not rep:
                raise PlanningError(f"agent {spec.id} infeasible at step {rep.step}: {rep.reason}")

    # ---- objective ---------------------------------------------------------------

    @cached_property
    def _discount_cache(self) -> np.ndarray:
        return np.exp(-self.objective.time_discount_eps * np.arange(4096))

    def _discount(self, S: int) -> np.ndarray:
        if S <= len(self._discount_cache):
            return self._discount_cache[:S]
        return np.exp(-self.objective.time_discount_eps * np.arange(S))

    def poc_gain(self, cells: np.ndarray) -> np.ndarray:
        """POC collected per step by first explorer visits."""
        S = cells.shape[1]
        ex = cells[self._explorer_idx].T.ravel()      # step-major, then agent index
        ok = np.nonzero(ex >= 0)[0]
        uniq, first = np.unique(ex[ok], return_index=True)
        steps = ok[first] // len(self._explorer_idx)
        return np.bincount(steps, weights=self.grid.flat_poc[uniq], minlength=S)

    def coop_terms(self, cells: np.ndarray) -> np.ndarray:
        """C_i(s) for every agent and step, shape (A, S)."""
        obj = self.objective
        A, S = cells.shape
        alive = cells >= 0
        safe = np.where(alive, cells, 0)
        pos = np.stack([self.cell_x[safe], self.cell_y[safe],
                        np.broadcast_to(self.z[:, None], (A, S))], axis=-1)
        diff = pos[:, None] - pos[None, :]
        csi = link_csi(self.radio, np.sqrt((diff**2).sum(-1)))          # (A, A, S)
        live = alive[:, None, :] & alive[None, :, :]
        live &= ~np.eye(A, dtype=bool)[:, :, None]
        exch = live & (csi >= 0)
        lifetimes = alive.sum(axis=1)
        tau = (lifetimes / obj.n_meetings)[:, None]
        t_sys = tau * obj.t_sys_ratio
        steps = np.arange(S)

        def vom_from(flags):
            last = np.maximum.accumulate(np.where(flags, steps, 0), axis=1)
            last_pre = np.concatenate([np.zeros((A, 1), dtype=last.dtype), last[:, :-1]], axis=1)
            return vom_value(steps - last_pre, tau, t_sys)

        def best_csi(peers):
            m = live & peers[:, :, None]
            best = np.where(m, csi, -np.inf).max(axis=1)
            return np.where(np.isfinite(best), best, -1.0)

        if obj.role_based:
            v_etd = vom_from((exch & self.etd_peers[:, :, None]).any(axis=1))
            v_r = vom_from((exch & self.r_peers[:, :, None]).any(axis=1))
        else:
            v_etd = v_r = vom_from(exch.any(axis=1))
        c = np.zeros((A, S))
        if obj.w1:
            c += np.where(self.has_etd[:, None], obj.w1 * v_etd * best_csi(self.etd_peers), 0.0)
        if obj.w2:
            c += np.where(self.has_r[:, None], obj.w2 * v_r * best_csi(self.r_peers), 0.0)
        return np.where(alive, c, 0.0)

    def objective_value(self, uav_paths: Sequence[np.ndarray]) -> float:
        cells = self.agent_cells(uav_paths)
        gain = self.poc_gain(cells) * self._discount(cells.shape[1])
        if not self.objective.cooperative:
            return float(gain.sum())
        return float((gain * (1.0 + self.coop_terms(cells).sum(axis=0))).sum())

    # ---- full simulation -------------------------------------------------------------

    def simulate(self, plan: MissionPlan) -> MissionTrace:
        """Step-by-step replay producing the full trace; independent of ``objective_value``."""
        obj = self.objective
        A = len(self.specs)
        S = plan.mission_length
        g = self.grid
        cells = np.full((A, S), -1, dtype=np.int64)
        positions = np.zeros((A, S, 3))
        for spec, path in zip(self.specs, plan.paths):
            for s, c in enumerate(path.cells):
                cells[spec.id, s] = g.flat(c)
                positions[spec.id, s] = (*cell_center(g, c), self.z[spec.id])
        alive = cells >= 0
        lifetimes = np.array([len(p) for p in plan.paths])
        tau = lifetimes / obj.n_meetings
        states = {"etd": VomState(tau, tau * obj.t_sys_ratio), "r": VomState(tau, tau * obj.t_sys_ratio)}
        etd_ids = np.nonzero(self.etd_peers.any(axis=0))[0]
        r_ids = np.nonzero(self.r_peers.any(axis=0))[0]

        ledger = KnowledgeLedger(A, g.n_cells)
        snapshots = np.zeros((S, A, A, g.n_cells), dtype=np.int32)
        credited = np.zeros((A, S), dtype=bool)
        gain = np.zeros(S)
        csi_all = np.full((S, A, A), np.nan)
        v_all = np.full((A, S), np.nan)
        v_etd_all = np.full((A, S), np.nan)
        v_r_all = np.full((A, S), np.nan)
        coop_all = np.zeros((A, S))
        exchanges_all = []
        seen: set[int] = set()
        J = 0.0
        for s in range(S):
            for i in range(A):
                c = int(cells[i, s])
                if c >= 0 and self.explorer[i]:
                    ledger.record_visit(i, c)
                    if c not in seen:
                        seen.add(c)
                        credited[i, s] = True
                        gain[s] += g.flat_poc[c]
            csi = pairwise_csi(positions[:, s], alive[:, s], self.radio)
            csi_all[s] = csi
            exchanges = detect_exchanges(csi)
            c_sum = 0.0
            for i in range(A):
                if not alive[i, s]:
                    continue
                ve = vom(states["etd"], i, s)
                vr = vom(states["r"], i, s) if obj.role_based else ve
                v_etd_all[i, s], v_r_all[i, s] = ve, vr
                if not obj.role_based:
                    v_all[i, s] = ve
                c_etd = cooperation_term(ve, agent_csi(csi, i, [j for j in etd_ids if j != i])) \
                    if self.has_etd[i] else 0.0
                c_r = cooperation_term(vr, agent_csi(csi, i, [j for j in r_ids if j != i])) \
                    if self.has_r[i] else 0.0
                coop_all[i, s] = cooperation_term_role_based(c_etd, c_r, obj.w1, obj.w2)
                c_sum += coop_all[i, s]
            J += np.exp(-obj.time_discount_eps * s) * gain[s] * (1.0 + c_sum)
            for i, j in exchanges:
                for a, b in ((i, j), (j, i)):
                    if not obj.role_based:
                        states["etd"].last_exchange_step[a] = s
                    else:
                        if self.etd_peers[a, b]:
                            states["etd"].last_exchange_step[a] = s
                        if self.r_peers[a, b]:
                            states["r"].last_exchange_step[a] = s
            ledger.apply_exchanges(exchanges)
            snapshots[s] = ledger.counts
            exchanges_all.append(exchanges)
        return MissionTrace(
            agent_ids=[sp.id for sp in self.specs], kinds=[sp.kind.value for sp in self.specs],
            explorer=self.explorer.copy(), lifetimes=lifetimes, cells=cells, positions=positions,
            alive=alive, credited=credited, poc_gain=gain, csi=csi_all, exchanges=exchanges_all,
            ledger=snapshots, vom=v_all, vom_etd=v_etd_all, vom_r=v_r_all, coop=coop_all,
            objective_value=float(J), eps=obj.time_discount_eps,
            poc=g.flat_poc, valid=g.valid.ravel().copy(),
        )


def evaluate_objective(plan: MissionPlan, mission: Mission) -> tuple[float, MissionTrace]:
    """J of a feasible plan together with its full mission trace."""
    try:
        mission.validate(plan)
    except FleetError as exc:
        raise PlanningError(str(exc)) from exc
    J = mission.objective_value(mission.uav_flat_paths(plan))
    trace = mission.simulate(plan)
    plan.objective_value = J
    plan.trace = trace
    return J, trace
