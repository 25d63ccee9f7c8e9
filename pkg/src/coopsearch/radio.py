"""Link budget and communication strength index between agents."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 3e8
MIN_DISTANCE_M = 0.1


@dataclass(frozen=True)
class RadioConfig:
    """Defaults: IEEE 802.11g at 2.4 GHz, 100 mW, isotropic antennas."""

    frequency_hz: float = 2.4e9
    tx_power_dbm: float = 20.0
    gain_tx: float = 1.0
    gain_rx: float = 1.0
    sensitivity_dbm: float = -73.0
    path_loss_exponent: float = 2.0
    smoothing_k: float = 0.4
    smoothing_eps: float = 1e-6

    def __post_init__(self):
        if self.frequency_hz <= 0:
            raise ValueError("frequency_hz must be positive")
        if self.path_loss_exponent < 1:
            raise ValueError("path_loss_exponent must be >= 1")
        if self.smoothing_k <= 0:
            raise ValueError("smoothing_k must be positive")
        if self.gain_tx <= 0 or self.gain_rx <= 0:
            raise ValueError("antenna gains are linear and must be positive")


@dataclass(frozen=True)
class LinkSample:
    step: int
    agent_i: int
    agent_j: int
    distance_m: float
    erp_dbm: float
    csi: float


def watts_to_dbm(p_w: float) -> float:
    return 10.0 * math.log10(p_w * 1e3)


def received_power(config: RadioConfig, distance_m):
    """Estimated received power in dBm (log-distance form of Friis)."""
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    loss = 10.0 * config.path_loss_exponent * np.log10(4.0 * math.pi * d * config.frequency_hz / SPEED_OF_LIGHT)
    erp = config.tx_power_dbm + 10.0 * math.log10(config.gain_tx) + 10.0 * math.log10(config.gain_rx) - loss
    return float(erp) if erp.ndim == 0 else erp


def csi_smooth(config: RadioConfig, erp_dbm):
    x = config.smoothing_k * (np.asarray(erp_dbm, dtype=float) - (config.sensitivity_dbm - config.smoothing_eps))
    out = x / (1.0 + np.abs(x))
    return float(out) if out.ndim == 0 else out


def link_csi(config: RadioConfig, distance_m):
    """csi as a function of 3D distance, with the distance floored for totality."""
    return csi_smooth(config, received_power(config, np.maximum(distance_m, MIN_DISTANCE_M)))


def connectivity_range(config: RadioConfig, hi: float = 1e7, tol: float = 1e-6) -> float:
    """Distance at which csi changes sign, by bisection on the link model."""
    lo = MIN_DISTANCE_M
    if link_csi(config, lo) < 0:
        return 0.0
    if link_csi(config, hi) >= 0:
        return math.inf
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if link_csi(config, mid) >= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pairwise_csi(positions: np.ndarray, alive: np.ndarray, config: RadioConfig) -> np.ndarray:
    """Symmetric csi matrix for one step; NaN marks absent links and the diagonal.

    ``positions`` is (n_agents, 3) in metres, ``alive`` a boolean mask.
    """
    positions = np.asarray(positions, dtype=float)
    alive = np.asarray(alive, dtype=bool)
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    csi = link_csi(config, dist)
    mask = alive[:, None] & alive[None, :]
    np.fill_diagonal(mask, False)
    return np.where(mask, csi, np.nan)


def agent_csi(csi_matrix: np.ndarray, i: int, peers=None) -> float:
    """Best link of agent ``i``; -1 when no live peer is reachable.

    ``peers`` optionally restricts the candidate set (boolean mask or index list).
    """
    row = np.asarray(csi_matrix, dtype=float)[i].copy()
    if peers is not None:
        keep = np.zeros(row.shape, dtype=bool)
        keep[peers] = True
        row[~keep] = np.nan
    row[i] = np.nan
    if np.all(np.isnan(row)):
        return -1.0
    return float(np.nanmax(row))


def link_samples(step: int, positions: np.ndarray, alive: np.ndarray, config: RadioConfig,
                 ids=None) -> list[LinkSample]:
    positions = np.asarray(positions, dtype=float)
    ids = list(range(len(positions))) if ids is None else list(ids)
    out = []
    for a in range(len(positions)):
        for b in range(a + 1, len(positions)):
            if not (alive[a] and alive[b]):
                continue
            d = max(float(np.linalg.norm(positions[a] - positions[b])), MIN_DISTANCE_M)
            erp = received_power(config, d)
            out.append(LinkSample(step, ids[a], ids[b], d, erp, csi_smooth(config, erp)))
    return out


CONNECTIVITY_CSV_HEADER = ["step", "agent_i", "agent_j", "distance_m", "erp_dbm", "csi"]


def write_connectivity_csv(fh, samples) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CONNECTIVITY_CSV_HEADER)
    for ls in samples:
        w.writerow([ls.step, ls.agent_i, ls.agent_j, repr(ls.distance_m), repr(ls.erp_dbm), repr(ls.csi)])
