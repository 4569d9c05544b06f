"""Ground region expansion over tentative-ground cell centroids.

A KD-tree over the centroids of tentative-ground cells drives a breadth-first
expansion from the seed cell under the robot.  Radius queries (rather than
grid adjacency) let the region bridge scan-line gaps at fine grid
resolutions.  Each dequeued cell then runs a five-step refinement that routes
its points to the ground or non-ground output:

1. split the cell's points into plane inliers and outliers (stored fit);
2. reject when there are no inliers;
3. score bounding-box sparsity of both subsets; equal classes = ambiguous;
4. for ambiguous cells, reject when elevated above the lowest neighboring
   ground cell or when an occupied non-ground cell sits below in the column;
5. otherwise route inliers to ground, outliers to non-ground.

In the fine phase (phase 2) neighbor admission additionally requires the
centroid height difference to stay within the height gate.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .cell_geometry import GeometryParams, bbox_sparsity
from .cloud_io import SyntheticSeedInfo
from .errors import ConfigError, ContractViolationError
from .voxel_grid import CellIndex, GridCell, GroundState, VoxelGrid, cell_index, occupied_below


@dataclass(frozen=True)
class ExpansionParams:
    search_radius: float = 5.0
    height_gate: float = 0.25
    ambiguity_elevation_threshold: float = 0.3
    phase: int = 1

    def __post_init__(self):
        if self.search_radius <= 0 or self.height_gate <= 0:
            raise ConfigError("search_radius and height_gate must be positive")
        if self.ambiguity_elevation_threshold <= 0:
            raise ConfigError("ambiguity_elevation_threshold must be positive")
        if self.phase not in (1, 2):
            raise ConfigError("phase must be 1 or 2")


class CentroidIndex:
    """Exact fixed-radius neighbor queries over cell centroids."""

    def __init__(self, cell_ids: list[CellIndex], centroids: np.ndarray):
        self.cell_ids = list(cell_ids)
        self._centroids = np.asarray(centroids, dtype=np.float64).reshape(-1, 3)
        self._tree = cKDTree(self._centroids) if len(self.cell_ids) else None

    def __len__(self) -> int:
        return len(self.cell_ids)

    def query(self, center, radius: float) -> list[CellIndex]:
        """Cell ids within Euclidean distance radius (inclusive), sorted."""
        if self._tree is None:
            return []
        hits = self._tree.query_ball_point(np.asarray(center, dtype=np.float64), radius)
        return sorted(self.cell_ids[k] for k in hits)

    def query_all_within(self, radius: float) -> dict[CellIndex, list[CellIndex]]:
        """Neighbor lists for every indexed centroid, in one batched pass."""
        if self._tree is None:
            return {}
        lists = self._tree.query_ball_point(self._centroids, radius)
        return {
            self.cell_ids[k]: sorted(self.cell_ids[j] for j in hits)
            for k, hits in enumerate(lists)
        }


@dataclass
class ExpansionLog:
    """Optional debug trace: admission edges and per-cell routing decisions."""

    edges: list[tuple[CellIndex, CellIndex, float]] = field(default_factory=list)
    routes: list[tuple[CellIndex, str, str]] = field(default_factory=list)

    def to_text(self) -> str:
        lines = []
        for i, j, dz in self.edges:
            lines.append(f"EDGE {i[0]},{i[1]},{i[2]} -> {j[0]},{j[1]},{j[2]} dz={dz:.6f}")
        for idx, route, reason in self.routes:
            lines.append(f"ROUTE {idx[0]},{idx[1]},{idx[2]} {route} {reason}")
        return "\n".join(lines)


def build_centroid_index(cells) -> CentroidIndex:
    """Index the centroids of the given (tentative ground) cells."""
    ordered = sorted(cells, key=lambda c: c.index)
    if not ordered:
        return CentroidIndex([], np.empty((0, 3)))
    centroids = np.vstack([c.centroid for c in ordered])
    return CentroidIndex([c.index for c in ordered], centroids)


def select_seed(grid: VoxelGrid, seed_info: SyntheticSeedInfo | None) -> CellIndex:
    """Cell containing the synthetic point directly below the robot."""
    if seed_info is None or seed_info.count < 1:
        raise ConfigError("seed selection requires injected synthetic points")
    idx = cell_index((0.0, 0.0, -seed_info.depth), grid.cellsize)
    if idx not in grid.cells:
        raise ConfigError(f"seed cell {idx} is not occupied; was injection skipped?")
    return idx


def _cell_height(cell: GridCell, points: np.ndarray) -> float:
    """Height of a cell: mean z of its ground inliers, else centroid z."""
    if cell.inlier_ids is not None and len(cell.inlier_ids) > 0:
        return float(points[cell.inlier_ids, 2].mean())
    return float(cell.centroid[2])


def refine_cell(
    cell: GridCell,
    grid: VoxelGrid,
    points: np.ndarray,
    neighbor_ground_cells: list[GridCell],
    geometry: GeometryParams,
    expansion: ExpansionParams,
) -> tuple[bool, str]:
    """Decide whether a dequeued cell's inliers are routed to ground.

    Returns (is_ground, reason).  Cells without a stored plane partition
    (line cells, fit failures) route non-ground.
    """
    if cell.plane is None or cell.inlier_ids is None or cell.outlier_ids is None:
        return False, "no plane fit"
    if len(cell.inlier_ids) == 0:
        return False, "no ground inliers"
    if len(cell.outlier_ids) == 0:
        return True, "no outliers"
    s_in = bbox_sparsity(points[cell.inlier_ids], geometry)
    s_out = bbox_sparsity(points[cell.outlier_ids], geometry)
    if s_in != s_out:
        return True, "sparsity unambiguous"
    z_i = float(points[cell.inlier_ids, 2].mean())
    heights = [_cell_height(c, points) for c in neighbor_ground_cells]
    if not heights:
        return False, "ambiguous with no ground neighbors"
    if z_i - min(heights) > expansion.ambiguity_elevation_threshold:
        return False, "ambiguous and elevated above lowest neighbor"
    below = occupied_below(grid, cell.index)
    if below is not None and below.ground_state in (GroundState.NON_GROUND, GroundState.OBSTACLE):
        return False, "ambiguous with non-ground cell below"
    return True, "ambiguous checks passed"


def expand(
    grid: VoxelGrid,
    points: np.ndarray,
    index: CentroidIndex,
    seed: CellIndex,
    geometry: GeometryParams,
    expansion: ExpansionParams,
    log: ExpansionLog | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Breadth-first ground expansion from the seed cell.

    Neighbors are admitted in ascending cell-index order (reproducible runs);
    admitted cells are provisionally marked GROUND, and final point routing
    happens when they are dequeued and refined.  Returns sorted id arrays
    (ground, non-ground) covering exactly the cells that were dequeued;
    points of unreached cells belong to neither list.
    """
    seed_cell = grid.cells.get(seed)
    if seed_cell is None or seed_cell.ground_state is not GroundState.TENTATIVE:
        raise ContractViolationError(f"seed cell {seed} is not tentative ground")

    seed_cell.ground_state = GroundState.GROUND
    queue: deque[CellIndex] = deque([seed])
    in_queue = {seed}
    expanded: set[CellIndex] = set()
    ground_parts: list[np.ndarray] = []
    nonground_parts: list[np.ndarray] = []
    # every dequeued cell is in the index, so its neighbor list can be
    # precomputed in one batched query when the index supports it
    neighbor_map = (
        index.query_all_within(expansion.search_radius)
        if hasattr(index, "query_all_within")
        else None
    )

    while queue:
        i = queue.popleft()
        in_queue.discard(i)
        expanded.add(i)
        ci = grid.cells[i]

        if neighbor_map is not None:
            neighbors = neighbor_map[i]
        else:
            neighbors = index.query(ci.centroid, expansion.search_radius)
        for j in neighbors:
            if j == i or j in expanded or j in in_queue:
                continue
            cj = grid.cells[j]
            if cj.ground_state is not GroundState.TENTATIVE:
                continue
            dz = abs(float(ci.centroid[2]) - float(cj.centroid[2]))
            if expansion.phase == 2 and dz > expansion.height_gate:
                continue
            cj.ground_state = GroundState.GROUND
            queue.append(j)
            in_queue.add(j)
            if log is not None:
                log.edges.append((i, j, dz))

        neighbor_ground = [
            grid.cells[j]
            for j in neighbors
            if j != i and grid.cells[j].ground_state is GroundState.GROUND
        ]
        is_ground, reason = refine_cell(ci, grid, points, neighbor_ground, geometry, expansion)
        if is_ground:
            ground_parts.append(ci.inlier_ids)
            nonground_parts.append(ci.outlier_ids)
        else:
            ci.ground_state = GroundState.NON_GROUND
            nonground_parts.append(ci.point_ids)
        if log is not None:
            log.routes.append((i, "ground" if is_ground else "non_ground", reason))

    def _collect(parts: list[np.ndarray]) -> np.ndarray:
        parts = [p for p in parts if p is not None and len(p)]
        if not parts:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate(parts)).astype(np.int64)

    return _collect(ground_parts), _collect(nonground_parts)
