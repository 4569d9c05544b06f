import numpy as np
import pytest

from gridseg.voxel_grid import (
    CellKind,
    CellSize,
    build_grid,
    cell_index,
    occupied_below,
)
from gridseg.errors import ContractViolationError


class TestCellIndex:
    def test_mixed_sign_coordinates(self):
        assert cell_index((3.2, -1.7, 0.5), CellSize(1.5, 1.0, 0.2)) == (2, -2, 2)

    def test_origin(self):
        assert cell_index((0.0, 0.0, 0.0), CellSize(0.7, 2.0, 5.0)) == (0, 0, 0)

    def test_floor_not_truncation(self):
        assert cell_index((-0.1, -0.1, -0.1), CellSize(1.0, 1.0, 1.0)) == (-1, -1, -1)

    def test_positive_cellsize_required(self):
        with pytest.raises(ContractViolationError):
            CellSize(0.0, 1.0, 1.0)


class TestBuildGrid:
    def test_empty_cloud(self):
        grid = build_grid(np.zeros((0, 3)), CellSize(1, 1, 1))
        assert len(grid.cells) == 0

    def test_two_points_one_cell(self):
        pts = np.array([[0.1, 0.1, 0.1], [0.3, 0.3, 0.3]])
        grid = build_grid(pts, CellSize(1, 1, 1))
        assert len(grid.cells) == 1
        cell = grid.cells[(0, 0, 0)]
        assert sorted(cell.point_ids.tolist()) == [0, 1]
        np.testing.assert_allclose(cell.centroid, [0.2, 0.2, 0.2])
        assert cell.kind is CellKind.UNCLASSIFIED

    def test_partition_and_containment(self, rng):
        cs = CellSize(1.5, 1.0, 0.2)
        pts = rng.uniform(-30, 30, size=(5000, 3))
        grid = build_grid(pts, cs)
        seen = np.concatenate([c.point_ids for c in grid.cells.values()])
        assert len(seen) == 5000
        assert len(np.unique(seen)) == 5000
        for idx, cell in grid.cells.items():
            for pid in cell.point_ids[:5]:
                assert cell_index(pts[pid], cs) == idx
            lo = np.array(idx) * cs.as_array()
            hi = lo + cs.as_array()
            assert np.all(cell.centroid >= lo - 1e-12)
            assert np.all(cell.centroid <= hi + 1e-12)

    def test_content_is_order_independent(self, rng):
        pts = rng.uniform(-10, 10, size=(800, 3))
        perm = rng.permutation(len(pts))
        g1 = build_grid(pts, CellSize(1, 1, 1))
        g2 = build_grid(pts[perm], CellSize(1, 1, 1))
        assert set(g1.cells) == set(g2.cells)
        inv = np.empty(len(pts), dtype=int)
        inv[perm] = np.arange(len(pts))
        for idx in g1.cells:
            ids1 = set(g1.cells[idx].point_ids.tolist())
            ids2 = {int(perm[i]) for i in g2.cells[idx].point_ids}
            assert ids1 == ids2
            np.testing.assert_array_equal(g1.cells[idx].centroid, g2.cells[idx].centroid)


class TestOccupiedBelow:
    def _grid(self):
        pts = np.array(
            [
                [0.5, 0.5, 0.5],  # iz = 0
                [0.5, 0.5, 3.5],  # iz = 3
                [5.5, 0.5, 2.5],  # lone cell in another column
            ]
        )
        return build_grid(pts, CellSize(1, 1, 1))

    def test_finds_nearest_occupied(self):
        grid = self._grid()
        below = occupied_below(grid, (0, 0, 3))
        assert below is not None and below.index == (0, 0, 0)

    def test_nothing_below_bottom(self):
        grid = self._grid()
        assert occupied_below(grid, (0, 0, 0)) is None

    def test_single_cell_column(self):
        grid = self._grid()
        assert occupied_below(grid, (5, 0, 2)) is None

    def test_matches_brute_force(self, rng):
        pts = rng.uniform(-8, 8, size=(600, 3))
        grid = build_grid(pts, CellSize(1, 1, 1))
        for idx in grid.cells:
            got = occupied_below(grid, idx)
            same_col = [
                other
                for other in grid.cells
                if other[:2] == idx[:2] and other[2] < idx[2]
            ]
            if not same_col:
                assert got is None
            else:
                assert got is not None
                assert got.index == max(same_col, key=lambda t: t[2])
