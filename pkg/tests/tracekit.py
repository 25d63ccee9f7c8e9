"""Hand-built mission traces for metric tests."""

import numpy as np

from coopsearch.metrics import MissionTrace


def make_trace(cells, poc, csi=None, explorer=None, lifetimes=None, ledger=None, eps=0.005, valid=None):
    cells = np.asarray(cells, dtype=np.int64)
    A, S = cells.shape
    poc = np.asarray(poc, dtype=float)
    C = len(poc)
    explorer = np.ones(A, dtype=bool) if explorer is None else np.asarray(explorer, dtype=bool)
    alive = cells >= 0
    if lifetimes is None:
        lifetimes = alive.sum(axis=1)
    if csi is None:
        csi = np.full((S, A, A), np.nan)
    if ledger is None:
        ledger = np.zeros((S, A, A, C), dtype=np.int32)
    valid = np.ones(C, dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
    nan = np.full((A, S), np.nan)
    return MissionTrace(
        agent_ids=list(range(A)), kinds=["UAV"] * A, explorer=explorer, lifetimes=np.asarray(lifetimes),
        cells=cells, positions=np.zeros((A, S, 3)), alive=alive, credited=np.zeros((A, S), dtype=bool),
        poc_gain=np.zeros(S), csi=np.asarray(csi, dtype=float), exchanges=[[] for _ in range(S)],
        ledger=np.asarray(ledger), vom=nan, vom_etd=nan, vom_r=nan, coop=np.zeros((A, S)),
        objective_value=0.0, eps=eps, poc=poc, valid=valid)


def link_steps(n_agents, n_steps, links):
    """csi tensor with value 0.5 on every (step, i, j) in ``links``, -0.5 elsewhere."""
    csi = np.full((n_steps, n_agents, n_agents), -0.5)
    for s, i, j in links:
        csi[s, i, j] = csi[s, j, i] = 0.5
    for s in range(n_steps):
        np.fill_diagonal(csi[s], np.nan)
    return csi
