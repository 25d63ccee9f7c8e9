"""Perimeter loop for a mobile external entity."""

from __future__ import annotations

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from ..fleet import AgentPath, clip_or_extend_path
from ..gridworld import GridWorld, neighbor_table
from .mission import PlanningError


def frontier_distance(grid: GridWorld) -> np.ndarray:
    """Chessboard distance of each valid cell to the nearest invalid or outside cell (1 on the rim)."""
    padded = np.pad(grid.valid, 1, constant_values=False)
    metric = "chessboard" if grid.connectivity == 8 else "taxicab"
    return ndimage.distance_transform_cdt(padded, metric=metric)[1:-1, 1:-1]


def frontier_graph(grid: GridWorld, frontier_penalty: float = 1.0):
    """Sparse digraph over cells; entering a cell costs 1 + penalty * (rim distance - 1)."""
    depth = frontier_distance(grid).ravel().astype(float)
    weight = 1.0 + frontier_penalty * np.maximum(depth - 1.0, 0.0)
    rows, cols, vals = [], [], []
    for k, nbrs in enumerate(neighbor_table(grid)):
        rows.extend([k] * len(nbrs))
        cols.extend(nbrs.tolist())
        vals.extend(weight[nbrs].tolist())
    n = grid.n_cells
    return coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def _shortest(graph, src: int, dst: int) -> list[int] | None:
    dist, pred = dijkstra(graph, indices=src, return_predecessors=True)
    if not np.isfinite(dist[dst]):
        return None
    path = [dst]
    while path[-1] != src:
        path.append(int(pred[path[-1]]))
    return path[::-1]


def escort_loop(grid: GridWorld, frontier_penalty: float = 1.0) -> AgentPath:
    """Closed loop through the AoI vertices, hugging the area frontier."""
    verts = grid.aoi_vertices
    if len(verts) < 3:
        raise PlanningError("escort loop needs at least 3 AoI vertices")
    graph = frontier_graph(grid, frontier_penalty)
    loop: list[int] = []
    for k, v in enumerate(verts):
        nxt = verts[(k + 1) % len(verts)]
        seg = _shortest(graph, grid.flat(v), grid.flat(nxt))
        if seg is None:
            raise PlanningError(f"AoI vertex ({nxt.col},{nxt.row}) unreachable from ({v.col},{v.row})")
        loop.extend(seg[1:] if loop else seg)
    loop = loop[:-1]  # the closing vertex is the loop's first cell
    return AgentPath(tuple(grid.unflat(k) for k in loop))


def mobile_ee_path(grid: GridWorld, max_path_len: int, frontier_penalty: float = 1.0) -> AgentPath:
    return clip_or_extend_path(escort_loop(grid, frontier_penalty), max_path_len)
