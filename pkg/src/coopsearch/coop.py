"""Value of Movement, cooperation terms, exchange detection and knowledge merging."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class VomState:
    """Per-agent VoM bookkeeping; ``last_exchange_step[i]`` is s_i."""

    tau: np.ndarray
    t_sys: np.ndarray
    last_exchange_step: np.ndarray = field(default=None)

    def __post_init__(self):
        self.tau = np.atleast_1d(np.asarray(self.tau, dtype=float))
        self.t_sys = np.broadcast_to(np.asarray(self.t_sys, dtype=float), self.tau.shape).copy()
        if self.last_exchange_step is None:
            self.last_exchange_step = np.zeros(self.tau.shape, dtype=np.int64)
        else:
            self.last_exchange_step = np.asarray(self.last_exchange_step, dtype=np.int64).copy()
        if np.any(self.tau <= 0) or np.any(self.t_sys <= 0):
            raise ValueError("tau and t_sys must be positive")

    @classmethod
    def from_lifetimes(cls, lifetimes, n_meetings: float = 4, t_sys_ratio: float = 1.0 / 3.0) -> "VomState":
        tau = np.asarray(lifetimes, dtype=float) / n_meetings
        return cls(tau, tau * t_sys_ratio)

    def reset(self, agents, step: int) -> None:
        for i in agents:
            self.last_exchange_step[i] = step


def vom_value(elapsed, tau, t_sys):
    """VoM for ``elapsed`` = s - s_i steps since the last exchange (vectorised)."""
    elapsed = np.asarray(elapsed, dtype=float)
    tau = np.asarray(tau, dtype=float)
    t_sys = np.asarray(t_sys, dtype=float)
    # the exponent is capped at tau/t_sys: beyond tau the value is 1 anyway
    rising = (2.0 * np.exp(np.minimum(elapsed, tau) / t_sys) - 1.0) / np.expm1(tau / t_sys) - 1.0
    out = np.where(elapsed <= tau, np.clip(rising, -1.0, 1.0), 1.0)
    return float(out) if out.ndim == 0 else out


def vom(state: VomState, i: int, s: int) -> float:
    elapsed = s - state.last_exchange_step[i]
    if elapsed < 0:
        raise ValueError(f"step {s} precedes last exchange {state.last_exchange_step[i]} of agent {i}")
    return vom_value(elapsed, state.tau[i], state.t_sys[i])


def vom_minimum(tau: float, t_sys: float) -> float:
    return vom_value(0.0, tau, t_sys)


def cooperation_term(vom_i, csi_i):
    return vom_i * csi_i


def cooperation_term_role_based(c_explorers, c_relays, w1: float, w2: float):
    if w1 < 0 or w2 < 0:
        raise ValueError("weights must be non-negative")
    return w1 * c_explorers + w2 * c_relays


def detect_exchanges(csi_matrix: np.ndarray) -> list[tuple[int, int]]:
    """Pairs (i < j) whose link is feasible (csi >= 0) at this step."""
    csi_matrix = np.asarray(csi_matrix, dtype=float)
    with np.errstate(invalid="ignore"):
        ok = np.triu(csi_matrix >= 0, k=1)
    return [(int(i), int(j)) for i, j in zip(*np.nonzero(ok))]


def apply_exchange_resets(states, exchanges, step: int, classify=None) -> None:
    """Reset VoM of both partners of every exchange.

    ``states`` maps a peer-class name to a VomState. ``classify(i, j)`` returns the
    class names of agent i's VomStates that an exchange with j resets; by default
    every state is reset.
    """
    for i, j in exchanges:
        for a, b in ((i, j), (j, i)):
            names = states.keys() if classify is None else classify(a, b)
            for name in names:
                states[name].last_exchange_step[a] = step


class KnowledgeLedger:
    """``counts[i, n, c]``: agent i's belief of how often agent n visited cell c."""

    def __init__(self, n_agents: int, n_cells: int, counts: np.ndarray | None = None):
        if counts is None:
            counts = np.zeros((n_agents, n_agents, n_cells), dtype=np.int32)
        self.counts = np.asarray(counts)
        if self.counts.shape != (n_agents, n_agents, n_cells):
            raise ValueError("ledger shape mismatch")
        if np.any(self.counts < 0):
            raise ValueError("visit counts are non-negative")

    @property
    def n_agents(self) -> int:
        return self.counts.shape[0]

    def copy(self) -> "KnowledgeLedger":
        return KnowledgeLedger(self.n_agents, self.counts.shape[2], self.counts.copy())

    def record_visit(self, i: int, cell: int) -> None:
        self.counts[i, i, cell] += 1

    def merge_knowledge(self, i: int, j: int) -> None:
        if i == j:
            raise ValueError("an agent cannot exchange with itself")
        merged = np.maximum(self.counts[i], self.counts[j])
        self.counts[i] = merged
        self.counts[j] = merged

    def apply_exchanges(self, exchanges) -> None:
        """Merge all exchanges of one step against the pre-step ledger."""
        if not exchanges:
            return
        pre = self.counts.copy()
        for i, j in exchanges:
            np.maximum(self.counts[i], pre[j], out=self.counts[i])
            np.maximum(self.counts[j], pre[i], out=self.counts[j])

    def visits_believed(self, i: int, cell=None):
        v = self.counts[i].sum(axis=0)
        return v if cell is None else int(v[cell])

    def believed_matrix(self) -> np.ndarray:
        """v[i, c] for all agents and cells."""
        return self.counts.sum(axis=1)


def merge_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Join of two ledger rows."""
    return np.maximum(a, b)


def detection_probability(visits, pod: float):
    return 1.0 - (1.0 - pod) ** np.asarray(visits, dtype=float)


VOM_CSV_HEADER = ["step", "agent_id", "vom", "vom_etd", "vom_r", "csi", "exchanged_with"]


def write_vom_csv(fh, rows) -> None:
    """``rows`` yields (step, agent_id, vom, vom_etd, vom_r, csi, partners)."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(VOM_CSV_HEADER)
    for step, agent, v, v_etd, v_r, csi, partners in rows:
        fmt = lambda x: "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))
        w.writerow([step, agent, fmt(v), fmt(v_etd), fmt(v_r), fmt(csi), ";".join(str(p) for p in partners)])
