"""Mission scoring: exploration, reporting and situational-awareness metrics."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .coop import detection_probability


@dataclass
class MissionTrace:
    """Step-indexed record of one simulated mission.

    Arrays are indexed ``[agent, step]`` unless noted; ``cells`` holds flat cell
    indices and -1 once an agent has left the mission.
    """

    agent_ids: list[int]
    kinds: list[str]
    explorer: np.ndarray            # (A,) bool
    lifetimes: np.ndarray           # (A,)
    cells: np.ndarray               # (A, S)
    positions: np.ndarray           # (A, S, 3)
    alive: np.ndarray               # (A, S)
    credited: np.ndarray            # (A, S) first-visit credit
    poc_gain: np.ndarray            # (S,) POC collected per step
    csi: np.ndarray                 # (S, A, A), NaN for absent links
    exchanges: list[list[tuple[int, int]]]
    ledger: np.ndarray              # (S, A, A, C) end-of-step snapshots
    vom: np.ndarray                 # (A, S); NaN in role-based mode
    vom_etd: np.ndarray             # (A, S)
    vom_r: np.ndarray               # (A, S)
    coop: np.ndarray                # (A, S) C_i(s)
    objective_value: float
    eps: float
    poc: np.ndarray                 # (C,) flat prior
    valid: np.ndarray               # (C,) flat mask

    @property
    def n_steps(self) -> int:
        return self.cells.shape[1]

    @property
    def n_agents(self) -> int:
        return self.cells.shape[0]


@dataclass
class MetricReport:
    E: float
    TPOC: float
    EP: float
    ETR: int
    EART: float
    eart_rate: float
    ETAK: float
    ETAK_sum: float
    ETAK_final: float
    EIK: float
    EIK_sum: float
    EIK_final: float
    Rp: dict = field(default_factory=dict)
    EAK_series: np.ndarray | None = None   # (S, A)
    EIK_series: np.ndarray | None = None   # (S,)

    def scalars(self) -> dict:
        d = asdict(self)
        d.pop("EAK_series")
        d.pop("EIK_series")
        return d


def _discount(trace: MissionTrace, eps: float) -> np.ndarray:
    return np.exp(-eps * np.arange(trace.n_steps))


def first_visits(trace: MissionTrace) -> list[tuple[int, int, int]]:
    """(step, agent, cell) of every first explorer visit, lower index wins ties."""
    seen = set()
    out = []
    for s in range(trace.n_steps):
        for i in range(trace.n_agents):
            c = int(trace.cells[i, s])
            if c < 0 or not trace.explorer[i] or c in seen:
                continue
            seen.add(c)
            out.append((s, i, c))
    return out


def metric_TPOC(trace: MissionTrace) -> float:
    return float(sum(trace.poc[c] for _, _, c in first_visits(trace)))


def metric_E(trace: MissionTrace, eps: float) -> float:
    return float(sum(math.exp(-eps * s) * trace.poc[c] for s, _, c in first_visits(trace)))


def metric_EP(trace: MissionTrace) -> float:
    visited = {c for _, _, c in first_visits(trace) if trace.valid[c]}
    return len(visited) / int(trace.valid.sum())


def report_counts(trace: MissionTrace) -> np.ndarray:
    """Rp_i at mission end: steps at which agent i had at least one feasible link."""
    with np.errstate(invalid="ignore"):
        linked = np.any(trace.csi >= 0, axis=2)     # (S, A); NaN compares False
    return linked.sum(axis=0)


def metric_ETR(trace: MissionTrace) -> int:
    return int(report_counts(trace)[trace.explorer].sum())


def metric_EART(trace: MissionTrace) -> tuple[float, float]:
    """Mean reporting interval over explorers, and the literal reports-per-step rate."""
    rp = report_counts(trace)[trace.explorer]
    life = trace.lifetimes[trace.explorer].astype(float)
    if not len(life):
        return 0.0, 0.0
    interval = np.where(rp > 0, life / np.maximum(rp, 1), life)
    return float(interval.mean()), float((rp / life).mean())


def knowledge_series(trace: MissionTrace, pod: float) -> tuple[np.ndarray, np.ndarray]:
    """EAK_i(s) as (S, A) and the intersected knowledge per step as (S,)."""
    valid = trace.valid
    believed = trace.ledger.sum(axis=2)[:, :, valid]          # (S, A, VC)
    p = detection_probability(believed, pod)
    eak = p.mean(axis=2)
    eik = p.min(axis=1).mean(axis=1)
    return eak, eik


def metric_ETAK(trace: MissionTrace, pod: float) -> tuple[float, float, float, np.ndarray]:
    """(time-normalised mean, raw time sum, final-step mean, EAK series)."""
    eak, _ = knowledge_series(trace, pod)
    raw = float(eak.sum() / trace.n_agents)
    return raw / trace.n_steps, raw, float(eak[-1].mean()), eak


def metric_EIK(trace: MissionTrace, pod: float) -> tuple[float, float, float, np.ndarray]:
    _, eik = knowledge_series(trace, pod)
    raw = float(eik.sum())
    return raw / trace.n_steps, raw, float(eik[-1]), eik


def score(trace: MissionTrace, pod: float = 0.63, eps: float | None = None) -> MetricReport:
    eps = trace.eps if eps is None else eps
    etak, etak_sum, etak_final, eak = metric_ETAK(trace, pod)
    eik, eik_sum, eik_final, eik_series = metric_EIK(trace, pod)
    eart, rate = metric_EART(trace)
    rp = report_counts(trace)
    return MetricReport(
        E=metric_E(trace, eps), TPOC=metric_TPOC(trace), EP=metric_EP(trace),
        ETR=metric_ETR(trace), EART=eart, eart_rate=rate,
        ETAK=etak, ETAK_sum=etak_sum, ETAK_final=etak_final,
        EIK=eik, EIK_sum=eik_sum, EIK_final=eik_final,
        Rp={str(trace.agent_ids[i]): int(rp[i]) for i in range(trace.n_agents) if trace.explorer[i]},
        EAK_series=eak, EIK_series=eik_series,
    )


def write_report(report: MetricReport, trace: MissionTrace, out_dir, stem: str = "metrics") -> Path:
    """Writes ``<stem>.json`` plus the per-step EAK/EIK series CSVs."""
    out_dir = Path(out_dir)
    eak_name, eik_name = f"{stem}_eak_series.csv", f"{stem}_eik_series.csv"
    with open(out_dir / eak_name, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "agent_id", "eak"])
        for s in range(report.EAK_series.shape[0]):
            for i, aid in enumerate(trace.agent_ids):
                w.writerow([s, aid, repr(float(report.EAK_series[s, i]))])
    with open(out_dir / eik_name, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "eik"])
        for s, v in enumerate(report.EIK_series):
            w.writerow([s, repr(float(v))])
    payload = report.scalars()
    payload["series"] = {"eak": eak_name, "eik": eik_name}
    path = out_dir / f"{stem}.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
