import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coopsearch.gridworld import (CellIndex, GridError, GridWorld, cell_center, clustered_map,
                                  dumps_poc_map, load_poc_map, loads_poc_map, neighbor_table,
                                  neighbors, save_poc_map, uniform_map)


def test_cell_center():
    g = uniform_map(5, 5, 10.0)
    assert cell_center(g, (0, 0)) == (5.0, 5.0)
    assert cell_center(g, (3, 2)) == (35.0, 25.0)
    assert cell_center(uniform_map(2, 2, 1.0), (0, 0)) == (0.5, 0.5)
    with pytest.raises(GridError):
        cell_center(g, (5, 0))


def test_neighbors_counts():
    g = uniform_map(5, 5, 1.0)
    assert len(neighbors(g, (2, 2))) == 8
    assert len(neighbors(g, (0, 0))) == 3
    assert len(neighbors(uniform_map(5, 5, 1.0, connectivity=4), (2, 2))) == 4


def test_neighbors_masked():
    valid = np.zeros((5, 5), dtype=bool)
    valid[2, 2] = True
    valid[0, 0] = True
    g = uniform_map(5, 5, 1.0, valid=valid)
    assert neighbors(g, (2, 2)) == []
    with pytest.raises(GridError):
        neighbors(g, (1, 1))


def test_neighbors_row_major():
    g = uniform_map(5, 5, 1.0)
    ns = neighbors(g, (2, 2))
    assert ns == sorted(ns, key=lambda c: (c.row, c.col))


@settings(max_examples=50)
@given(st.integers(1, 7), st.integers(1, 7), st.sampled_from([4, 8]), st.integers(0, 2**31))
def test_neighbors_symmetric(w, h, conn, seed):
    valid = np.random.default_rng(seed).random((h, w)) < 0.7
    valid[0, 0] = True
    g = uniform_map(w, h, 1.0, valid=valid, connectivity=conn)
    table = neighbor_table(g)
    for k, ns in enumerate(table):
        for n in ns:
            assert k in table[n]
            assert k != n


def test_uniform_total_poc():
    g = uniform_map(10, 10, 1.0, 0.648)
    assert np.allclose(g.poc, 0.00648)
    assert g.total_poc == pytest.approx(0.648)


def test_clustered_total_poc():
    g = clustered_map(20, 20, 200.0, 0.648, seed=3)
    assert g.total_poc == pytest.approx(0.648)
    assert g.poc.max() > 3 * g.poc.mean()


def test_rejects_cell_above_one():
    text = "grid 2 1 1.0\n1.2 0\n"
    with pytest.raises(GridError, match=r"\(0,0\)"):
        loads_poc_map(text)


def test_rejects_no_valid():
    with pytest.raises(GridError, match="no valid cells"):
        loads_poc_map("grid 2 1 1.0\n-1 -1\n")


def test_rejects_total_above_one():
    with pytest.raises(GridError):
        loads_poc_map("grid 2 1 1.0\n0.6 0.6\n")


def test_rejects_self_intersecting_aoi():
    g = uniform_map(4, 4, 1.0)
    with pytest.raises(GridError, match="self-intersecting"):
        GridWorld(4, 4, 1.0, g.poc, g.valid, ((0, 0), (3, 3), (3, 0), (0, 3)))
    with pytest.raises(GridError):
        GridWorld(4, 4, 1.0, g.poc, g.valid, ((0, 0), (3, 3)))


def test_grid_is_immutable():
    g = uniform_map(3, 3, 1.0)
    with pytest.raises(ValueError):
        g.poc[0, 0] = 0.5


def test_invalid_cells_carry_no_mass():
    valid = np.ones((2, 2), dtype=bool)
    valid[1, 1] = False
    g = GridWorld(2, 2, 1.0, np.full((2, 2), 0.1), valid)
    assert g.poc[1, 1] == 0.0
    assert g.total_poc == pytest.approx(0.3)


@settings(max_examples=30)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31))
def test_map_round_trip(w, h, seed):
    rng = np.random.default_rng(seed)
    valid = rng.random((h, w)) < 0.8
    valid.flat[0] = True
    poc = rng.random((h, w))
    poc = 0.9 * poc / poc.sum()
    g = GridWorld(w, h, 12.5, poc, valid)
    g2 = loads_poc_map(dumps_poc_map(g))
    assert np.array_equal(g2.valid, g.valid)
    assert np.array_equal(g2.poc, g.poc)
    assert g2.cell_size == g.cell_size


def test_file_round_trip(tmp_path):
    g = clustered_map(6, 4, 50.0, 0.5, seed=1)
    p = tmp_path / "m.txt"
    save_poc_map(g, p)
    g2 = load_poc_map(p)
    assert np.array_equal(g2.poc, g.poc)
    assert g2.aoi_vertices == g.aoi_vertices
    assert g2.aoi_vertices[0] == CellIndex(0, 0)


@pytest.mark.parametrize("seed", range(6))
def test_clustered_blobs_are_distinct(seed):
    g = clustered_map(20, 20, 250.0, 0.648, seed=seed, background=0.0)
    # separated centres leave one local maximum per blob
    from scipy.ndimage import maximum_filter
    peaks = np.argwhere((g.poc == maximum_filter(g.poc, size=3)) & (g.poc > 0.2 * g.poc.max()))
    assert len(peaks) >= 3
    assert g.total_poc == pytest.approx(0.648)
