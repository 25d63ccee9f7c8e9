"""Discretized mission area with a probability-of-containment prior."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np
from shapely.geometry import LinearRing


class GridError(ValueError):
    """Raised for malformed maps, invariant breaches and invalid cells."""


class CellIndex(NamedTuple):
    col: int
    row: int


# row-major neighbor offsets (drow, dcol)
_MOORE = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
_VON_NEUMANN = [(-1, 0), (0, -1), (0, 1), (1, 0)]


@dataclass(frozen=True, eq=False)
class GridWorld:
    """Immutable grid; ``poc`` and ``valid`` are indexed ``[row, col]``."""

    width: int
    height: int
    cell_size: float
    poc: np.ndarray
    valid: np.ndarray
    aoi_vertices: tuple[CellIndex, ...] = ()
    connectivity: int = 8
    _flat_poc: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        poc = np.array(self.poc, dtype=float)
        valid = np.array(self.valid, dtype=bool)
        poc[~valid] = 0.0
        poc.setflags(write=False)
        valid.setflags(write=False)
        object.__setattr__(self, "poc", poc)
        object.__setattr__(self, "valid", valid)
        object.__setattr__(self, "aoi_vertices", tuple(CellIndex(*v) for v in self.aoi_vertices))
        flat = poc.ravel().copy()
        flat.setflags(write=False)
        object.__setattr__(self, "_flat_poc", flat)
        _check_invariants(self)

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    @property
    def total_poc(self) -> float:
        return float(self.poc[self.valid].sum())

    @property
    def n_valid(self) -> int:
        return int(self.valid.sum())

    @property
    def flat_poc(self) -> np.ndarray:
        return self._flat_poc

    def flat(self, c: CellIndex) -> int:
        return c[1] * self.width + c[0]

    def unflat(self, k: int) -> CellIndex:
        return CellIndex(int(k % self.width), int(k // self.width))

    def in_bounds(self, c) -> bool:
        return 0 <= c[0] < self.width and 0 <= c[1] < self.height

    def is_valid(self, c) -> bool:
        return self.in_bounds(c) and bool(self.valid[c[1], c[0]])

    def offsets(self):
        return _MOORE if self.connectivity == 8 else _VON_NEUMANN

    def step_distance(self, a, b) -> int:
        """Moves needed between two cells on an unobstructed grid."""
        dc, dr = abs(a[0] - b[0]), abs(a[1] - b[1])
        return max(dc, dr) if self.connectivity == 8 else dc + dr

    def adjacent(self, a, b) -> bool:
        if self.connectivity == 8:
            return max(abs(a[0] - b[0]), abs(a[1] - b[1])) == 1
        return abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


def _check_invariants(grid: GridWorld) -> None:
    if grid.width <= 0 or grid.height <= 0:
        raise GridError("grid dimensions must be positive")
    if grid.cell_size <= 0:
        raise GridError("cell_size must be positive")
    if grid.connectivity not in (4, 8):
        raise GridError("connectivity must be 4 or 8")
    if grid.poc.shape != (grid.height, grid.width) or grid.valid.shape != grid.poc.shape:
        raise GridError(f"poc/valid arrays must have shape ({grid.height}, {grid.width})")
    if not grid.valid.any():
        raise GridError("no valid cells")
    bad = np.argwhere(~np.isfinite(grid.poc) | (grid.poc < 0) | (grid.poc > 1))
    if len(bad):
        row, col = bad[0]
        raise GridError(f"poc out of [0,1] at cell ({col},{row}): {grid.poc[row, col]!r}")
    total = grid.poc[grid.valid].sum()
    if total > 1.0 + 1e-12:
        raise GridError(f"total POC {total:.6f} exceeds 1")
    verts = grid.aoi_vertices
    if verts:
        for v in verts:
            if not grid.is_valid(v):
                raise GridError(f"AoI vertex ({v.col},{v.row}) is not a valid cell")
        if len(set(verts)) < 3:
            raise GridError("AoI needs at least 3 distinct vertices")
        if not LinearRing([(v.col, v.row) for v in verts]).is_simple:
            raise GridError("AoI vertices form a self-intersecting cycle")


def cell_center(grid: GridWorld, c) -> tuple[float, float]:
    if not grid.is_valid(c):
        raise GridError(f"cell {tuple(c)} is outside the grid or invalid")
    return ((c[0] + 0.5) * grid.cell_size, (c[1] + 0.5) * grid.cell_size)


def neighbors(grid: GridWorld, c) -> list[CellIndex]:
    """Valid neighbors of ``c`` in row-major order."""
    if not grid.is_valid(c):
        raise GridError(f"cell {tuple(c)} is outside the grid or invalid")
    out = []
    for dr, dc in grid.offsets():
        n = CellIndex(c[0] + dc, c[1] + dr)
        if grid.is_valid(n):
            out.append(n)
    return out


def neighbor_table(grid: GridWorld) -> list[np.ndarray]:
    """Flat-index adjacency lists for every cell (empty for invalid cells)."""
    table = []
    for k in range(grid.n_cells):
        c = grid.unflat(k)
        if grid.is_valid(c):
            table.append(np.array([grid.flat(n) for n in neighbors(grid, c)], dtype=np.int64))
        else:
            table.append(np.empty(0, dtype=np.int64))
    return table


def corner_aoi(valid: np.ndarray) -> tuple[CellIndex, ...]:
    h, w = valid.shape
    """Valid grid corners as the default AoI; empty when fewer than 3 are distinct."""
    corners = [CellIndex(0, 0), CellIndex(w - 1, 0), CellIndex(w - 1, h - 1), CellIndex(0, h - 1)]
    out = tuple(dict.fromkeys(c for c in corners if valid[c.row, c.col]))
    return out if len(out) >= 3 else ()


def uniform_map(width: int, height: int, cell_size: float, total_poc: float = 0.648,
                valid: np.ndarray | None = None, connectivity: int = 8) -> GridWorld:
    if valid is None:
        valid = np.ones((height, width), dtype=bool)
    poc = np.where(valid, total_poc / valid.sum(), 0.0)
    return GridWorld(width, height, cell_size, poc, valid, corner_aoi(valid), connectivity)


def clustered_map(width: int, height: int, cell_size: float, total_poc: float = 0.648,
                  seed: int = 0, n_clusters: int = 3, sigma: float | None = None,
                  background: float = 0.1, connectivity: int = 8, min_separation: float = 2.5) -> GridWorld:
    """Gaussian blobs at seeded centres, normalised to ``total_poc``.

    Centres keep ``sigma`` away from the border and ``min_separation * sigma``
    from each other, so every blob is a distinct area of interest. The
    separation is relaxed when it cannot be met. ``background`` is the fraction
    of mass spread uniformly over all cells.
    """
    rng = np.random.default_rng(seed)
    sigma = sigma if sigma is not None else max(width, height) / 8.0
    margin = min(sigma, width / 2.0, height / 2.0)
    centres: list[tuple[float, float]] = []
    sep = min_separation * sigma
    while len(centres) < n_clusters:
        for _ in range(200):
            c = (rng.uniform(margin, width - margin), rng.uniform(margin, height - margin))
            if all(np.hypot(c[0] - x, c[1] - y) >= sep for x, y in centres):
                centres.append(c)
                break
        else:
            sep *= 0.8
    rows, cols = np.mgrid[0:height, 0:width]
    field_ = np.zeros((height, width))
    for cx, cy in centres:
        amp = rng.uniform(0.5, 1.0)
        field_ += amp * np.exp(-((cols + 0.5 - cx) ** 2 + (rows + 0.5 - cy) ** 2) / (2 * sigma**2))
    field_ /= field_.sum()
    field_ = (1.0 - background) * field_ + background / field_.size
    poc = total_poc * field_
    valid = np.ones((height, width), dtype=bool)
    return GridWorld(width, height, cell_size, poc, valid, corner_aoi(valid), connectivity)


def dumps_poc_map(grid: GridWorld) -> str:
    lines = [f"grid {grid.width} {grid.height} {grid.cell_size!r}"]
    for r in range(grid.height):
        vals = [repr(float(grid.poc[r, c])) if grid.valid[r, c] else "-1" for c in range(grid.width)]
        lines.append(" ".join(vals))
    if grid.aoi_vertices:
        lines.append("aoi " + " ".join(f"{v.col},{v.row}" for v in grid.aoi_vertices))
    return "\n".join(lines) + "\n"


def save_poc_map(grid: GridWorld, path) -> None:
    Path(path).write_text(dumps_poc_map(grid), encoding="utf-8")


def loads_poc_map(text: str, connectivity: int = 8) -> GridWorld:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise GridError("empty map")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "grid":
        raise GridError("first line must be 'grid <width> <height> <cell_size_m>'")
    try:
        width, height, cell_size = int(head[1]), int(head[2]), float(head[3])
    except ValueError as exc:
        raise GridError(f"bad header: {lines[0]!r}") from exc
    body = lines[1:]
    aoi: list[CellIndex] = []
    if body and body[-1].startswith("aoi"):
        for tok in body[-1].split()[1:]:
            try:
                col, row = (int(t) for t in tok.split(","))
            except ValueError as exc:
                raise GridError(f"bad aoi vertex {tok!r}") from exc
            aoi.append(CellIndex(col, row))
        body = body[:-1]
    if len(body) != height:
        raise GridError(f"expected {height} rows of poc values, got {len(body)}")
    poc = np.zeros((height, width))
    valid = np.ones((height, width), dtype=bool)
    for r, ln in enumerate(body):
        toks = ln.split()
        if len(toks) != width:
            raise GridError(f"row {r}: expected {width} values, got {len(toks)}")
        for c, tok in enumerate(toks):
            try:
                v = float(tok)
            except ValueError as exc:
                raise GridError(f"cell ({c},{r}): not a number {tok!r}") from exc
            if v == -1:
                valid[r, c] = False
            else:
                poc[r, c] = v
    return GridWorld(width, height, cell_size, poc, valid, tuple(aoi) or corner_aoi(valid), connectivity)


def load_poc_map(source, connectivity: int = 8) -> GridWorld:
    return loads_poc_map(Path(source).read_text(encoding="utf-8"), connectivity)


def cells_to_flat(grid: GridWorld, cells: Iterable) -> np.ndarray:
    return np.array([c[1] * grid.width + c[0] for c in cells], dtype=np.int64)
