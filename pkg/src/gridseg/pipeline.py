"""Dual-phase segmentation pipeline.

Phase I bins the full scan into tall cells so vertical structures are caught
early; Phase II re-grids the points of cells Phase I routed to ground
(inliers and outliers alike) at a much finer cell height and repeats the
classification and expansion with the additional per-neighbor height gate.
The final ground set is Phase II's output, mapped back to the original point
order with the synthetic seed points stripped.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .cell_geometry import (
    GeometryParams,
    classify_line_cell,
    classify_planar_cell,
    ransac_plane,
)
from .cloud_io import PointCloud, SyntheticSeedInfo, inject_synthetic_seed, strip_synthetic
from .errors import ConfigError, FitFailureError
from .region_expansion import (
    ExpansionLog,
    ExpansionParams,
    build_centroid_index,
    expand,
    select_seed,
)
from .voxel_grid import CellKind, CellSize, GroundState, VoxelGrid, build_grid

_SEED_MASK = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class PhaseConfig:
    cellsize: CellSize
    geometry: GeometryParams
    expansion: ExpansionParams


@dataclass(frozen=True)
class PipelineConfig:
    phase1: PhaseConfig
    phase2: PhaseConfig
    dist_to_ground: float = 1.723
    robot_radius: float = 2.7
    seed_spacing: float = 0.3
    global_seed: int = 0

    def __post_init__(self):
        if self.phase1.cellsize.sz <= self.phase2.cellsize.sz:
            raise ConfigError("Phase I cell height must exceed Phase II cell height")
        if self.dist_to_ground <= 0 or self.robot_radius < 0 or self.seed_spacing <= 0:
            raise ConfigError("invalid robot geometry parameters")


def make_default_config() -> PipelineConfig:
    """Defaults: 1.5 x 1.0 m cell footprint, 1.5 / 0.2 m cell heights,
    30 deg slope threshold, 0.125 m inlier threshold, 5.0 m search radius,
    robot at 1.723 m above ground with a 2.7 m radius."""
    geometry = GeometryParams()
    return PipelineConfig(
        phase1=PhaseConfig(
            cellsize=CellSize(1.5, 1.0, 1.5),
            geometry=geometry,
            expansion=ExpansionParams(phase=1),
        ),
        phase2=PhaseConfig(
            cellsize=CellSize(1.5, 1.0, 0.2),
            geometry=geometry,
            expansion=ExpansionParams(phase=2),
        ),
    )


@dataclass
class PhaseStats:
    n_points: int = 0
    n_cells: int = 0
    cells_line: int = 0
    cells_planar: int = 0
    cells_non_planar: int = 0
    cells_tentative: int = 0
    cells_obstacle: int = 0
    cells_expanded: int = 0
    cells_routed_ground: int = 0
    points_ground: int = 0
    points_non_ground: int = 0
    runtime_ms: float = 0.0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class SegmentationStats:
    n_points: int = 0
    n_synthetic: int = 0
    phase1: PhaseStats = field(default_factory=PhaseStats)
    phase2: PhaseStats = field(default_factory=PhaseStats)
    runtime_ms: float = 0.0

    def as_dict(self) -> dict:
        return {
            "n_points": self.n_points,
            "n_synthetic": self.n_synthetic,
            "phase1": self.phase1.as_dict(),
            "phase2": self.phase2.as_dict(),
            "runtime_ms": self.runtime_ms,
        }


@dataclass
class SegmentationResult:
    """Per-point ground mask aligned with the input cloud, plus run stats."""

    mask: np.ndarray
    stats: SegmentationStats


@dataclass
class PhaseResult:
    ground_ids: np.ndarray
    nonground_ids: np.ndarray
    ground_cell_point_ids: np.ndarray
    stats: PhaseStats


def _cell_keys(global_seed: int, phase: int, indices: np.ndarray) -> np.ndarray:
    """64-bit RANSAC keys from (global seed, phase, cell index), vectorized.

    A splitmix64-style avalanche over the packed inputs: the key depends only
    on these values, never on scheduling or on which other cells exist, so
    per-cell fits are reproducible across runs, subsets, and point orders.
    """
    mults = np.uint64(0xBF58476D1CE4E5B9), np.uint64(0x94D049BB133111EB)
    h = np.full(len(indices), 0x9E3779B97F4A7C15, dtype=np.uint64)
    seeds = np.array([global_seed & _SEED_MASK, phase], dtype=np.uint64)
    columns = [seeds[0], seeds[1]] + [indices[:, k].astype(np.int64).view(np.uint64) for k in range(3)]
    for value in columns:
        h = (h ^ value) * mults[0]
        h = (h ^ (h >> np.uint64(27))) * mults[1]
        h ^= h >> np.uint64(31)
    return h


def _batched_covariance(cells, points):
    """Population covariance of every cell in one vectorized pass.

    Runs the same two-pass formula as ``covariance`` (center, then average
    outer products) with all sums taken in canonical within-cell order, so
    the result is independent of input point order.
    """
    counts = np.array([len(c) for c in cells])
    order = np.concatenate([c.canon_ids for c in cells])
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    pts = points[order]
    means = np.add.reduceat(pts, starts, axis=0) / counts[:, None]
    centered = pts - np.repeat(means, counts, axis=0)
    prods = centered[:, [0, 0, 0, 1, 1, 2]] * centered[:, [0, 1, 2, 1, 2, 2]]
    m6 = np.add.reduceat(prods, starts, axis=0) / counts[:, None]
    C = np.empty((len(cells), 3, 3))
    C[:, 0, 0] = m6[:, 0]
    C[:, 0, 1] = C[:, 1, 0] = m6[:, 1]
    C[:, 0, 2] = C[:, 2, 0] = m6[:, 2]
    C[:, 1, 1] = m6[:, 3]
    C[:, 1, 2] = C[:, 2, 1] = m6[:, 4]
    C[:, 2, 2] = m6[:, 5]
    return C


def classify_cells(
    grid: VoxelGrid,
    points: np.ndarray,
    geometry: GeometryParams,
    phase: int,
    global_seed: int,
    stats: PhaseStats | None = None,
) -> None:
    """Eigen-classify every cell and gate it into a tentative ground state.

    Covariances and eigen decompositions are batched across cells; planar
    cells get a seeded RANSAC plane (the per-cell seed derives from the
    global seed, phase, and cell index, so runs are reproducible and
    independent of scheduling).  Cells too small for a covariance rank test
    are non-planar, hence non-ground candidates.
    """
    cells = [grid.cells[idx] for idx in sorted(grid.cells)]
    if not cells:
        return
    counts = np.array([len(c) for c in cells])
    C = _batched_covariance(cells, points)
    keys = _cell_keys(global_seed, phase, np.array([c.index for c in cells], dtype=np.int64))

    eligible = counts >= geometry.min_points_for_eigen
    lam = np.zeros((len(cells), 3))
    vec = np.zeros((len(cells), 3, 3))
    if eligible.any():
        w, v = np.linalg.eigh(C[eligible])
        lam[eligible] = np.maximum(w[:, ::-1], 0.0)
        vec[eligible] = v[:, :, ::-1]
    total = lam.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(total > 0, lam[:, 0] / np.where(total > 0, total, 1.0), np.nan)
        flatness = np.where(total > 0, lam[:, 2] / np.where(total > 0, total, 1.0), np.nan)
    is_line = (
        eligible
        & (total > 0)
        & (ratio >= geometry.line_ratio_min)
        & (lam[:, 1] <= geometry.line_cross_ratio_max * lam[:, 2])
    )
    is_planar = (
        eligible & (total > 0) & ~is_line & (flatness <= geometry.planar_flatness_max)
    )

    for k, cell in enumerate(cells):
        if is_line[k]:
            cell.kind = CellKind.LINE
            cell.ground_state = classify_line_cell(vec[k, :, 0], geometry.slope_threshold_deg)
        elif is_planar[k]:
            try:
                plane, in_loc, out_loc = ransac_plane(
                    points[cell.canon_ids],
                    geometry.inlier_threshold,
                    geometry.ransac_iterations,
                    seed=np.random.Generator(np.random.Philox(key=int(keys[k]))),
                )
            except FitFailureError:
                cell.kind = CellKind.NON_PLANAR
                cell.ground_state = GroundState.NON_GROUND
                continue
            cell.kind = CellKind.PLANAR
            cell.plane = plane
            cell.inlier_ids = cell.canon_ids[in_loc]
            cell.outlier_ids = cell.canon_ids[out_loc]
            cell.ground_state = classify_planar_cell(plane, geometry.slope_threshold_deg)
        else:
            cell.kind = CellKind.NON_PLANAR
            cell.ground_state = GroundState.NON_GROUND

    if stats is not None:
        stats.n_cells = len(grid.cells)
        for cell in grid.cells.values():
            if cell.kind is CellKind.LINE:
                stats.cells_line += 1
            elif cell.kind is CellKind.PLANAR:
                stats.cells_planar += 1
            elif cell.kind is CellKind.NON_PLANAR:
                stats.cells_non_planar += 1
            if cell.ground_state is GroundState.TENTATIVE:
                stats.cells_tentative += 1
            elif cell.ground_state is GroundState.OBSTACLE:
                stats.cells_obstacle += 1


def run_phase(
    ids: np.ndarray,
    all_points: np.ndarray,
    cfg: PhaseConfig,
    phase: int,
    global_seed: int,
    seed_info: SyntheticSeedInfo,
    log: ExpansionLog | None = None,
) -> PhaseResult:
    """Run grid build, classification, and expansion on a subset of points.

    ``ids`` index into ``all_points``; the returned id sets are global,
    disjoint, and together cover the subset.
    """
    t0 = time.perf_counter()
    stats = PhaseStats(n_points=len(ids))
    ids = np.asarray(ids, dtype=np.int64)
    if len(ids) == 0:
        return PhaseResult(
            np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.int64), stats
        )

    pts = all_points[ids]
    grid = build_grid(pts, cfg.cellsize)
    classify_cells(grid, pts, cfg.geometry, phase, global_seed, stats)

    tentative = [c for _, c in sorted(grid.cells.items()) if c.ground_state is GroundState.TENTATIVE]
    index = build_centroid_index(tentative)
    seed = select_seed(grid, seed_info)
    expansion = replace(cfg.expansion, phase=phase)
    if log is None:
        log = ExpansionLog()
    ground_local, _ = expand(grid, pts, index, seed, cfg.geometry, expansion, log=log)
    stats.cells_expanded = len(log.routes)

    ground_cell_local: list[np.ndarray] = []
    for _, cell in sorted(grid.cells.items()):
        if cell.ground_state is GroundState.GROUND:
            stats.cells_routed_ground += 1
            ground_cell_local.append(cell.point_ids)

    ground_ids = np.sort(ids[ground_local])
    nonground_ids = np.setdiff1d(ids, ground_ids, assume_unique=False)
    if ground_cell_local:
        fwd = np.sort(ids[np.concatenate(ground_cell_local)])
    else:
        fwd = np.empty(0, dtype=np.int64)

    stats.points_ground = len(ground_ids)
    stats.points_non_ground = len(nonground_ids)
    stats.runtime_ms = (time.perf_counter() - t0) * 1000.0
    return PhaseResult(ground_ids, nonground_ids, fwd, stats)


def segment(
    cloud: PointCloud,
    cfg: PipelineConfig | None = None,
    log1: ExpansionLog | None = None,
    log2: ExpansionLog | None = None,
) -> SegmentationResult:
    """Segment a cloud into ground / non-ground points.

    Deterministic for a fixed configuration (including the global seed), and
    equivariant under permutations of the input point order.
    """
    if cfg is None:
        cfg = make_default_config()
    t0 = time.perf_counter()
    n = len(cloud)
    stats = SegmentationStats(n_points=n)
    if n == 0:
        return SegmentationResult(mask=np.zeros(0, dtype=bool), stats=stats)

    seeded, seed_info = inject_synthetic_seed(
        cloud, cfg.robot_radius, cfg.dist_to_ground, cfg.seed_spacing
    )
    stats.n_synthetic = seed_info.count
    pts = seeded.points
    all_ids = np.arange(len(pts), dtype=np.int64)
    synth_ids = np.arange(n, len(pts), dtype=np.int64)

    r1 = run_phase(all_ids, pts, cfg.phase1, 1, cfg.global_seed, seed_info, log=log1)
    stats.phase1 = r1.stats

    # Phase II sees every point of a Phase-I ground cell (inliers and
    # outliers) so over-segmentation can be corrected; the synthetic lattice
    # is always carried along so the fine grid keeps its seed cell.
    p2_ids = np.union1d(r1.ground_cell_point_ids, synth_ids)
    r2 = run_phase(p2_ids, pts, cfg.phase2, 2, cfg.global_seed, seed_info, log=log2)
    stats.phase2 = r2.stats

    mask_full = np.zeros(len(pts), dtype=bool)
    mask_full[r2.ground_ids] = True
    mask = strip_synthetic(mask_full, seed_info)
    stats.runtime_ms = (time.perf_counter() - t0) * 1000.0
    return SegmentationResult(mask=mask, stats=stats)
