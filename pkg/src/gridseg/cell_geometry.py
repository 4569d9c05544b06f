"""Per-cell geometric characterization.

Each occupied cell is classified from the eigen structure of its point
covariance (line / planar / non-planar), planar cells get a RANSAC plane fit
whose slope against the horizontal gates them as tentative ground, and point
subsets get a bounding-box sparsity class used later to flag ambiguous cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import ConfigError, ContractViolationError, FitFailureError
from .voxel_grid import CellKind, GroundState

_DEGENERATE_CROSS = 1e-12


class Sparsity(IntEnum):
    LOW = 0
    MEDIUM = 1
    HIGH = 2


@dataclass(frozen=True)
class EigenSummary:
    """Sorted eigen decomposition of a cell covariance.

    ``eigenvalues`` are descending and clamped at zero; ``eigenvectors``
    holds unit vectors as columns, matching the eigenvalue order.  ``ratio``
    is the dominant-eigenvalue share, NaN for a degenerate zero matrix.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    ratio: float

    @property
    def e1(self) -> np.ndarray:
        return self.eigenvectors[:, 0]

    @property
    def e2(self) -> np.ndarray:
        return self.eigenvectors[:, 1]

    @property
    def e3(self) -> np.ndarray:
        return self.eigenvectors[:, 2]


@dataclass(frozen=True)
class PlaneModel:
    """Plane n . p + offset = 0 with the normal oriented so normal[2] >= 0.

    ``slope_deg`` is the angle between the normal and the vertical axis,
    i.e. the surface inclination from horizontal, in [0, 90].
    """

    normal: np.ndarray
    offset: float
    slope_deg: float


def make_plane(normal: np.ndarray, offset: float) -> PlaneModel:
    """Normalize, orient (z >= 0), and annotate a plane with its slope."""
    n = np.asarray(normal, dtype=np.float64)
    norm = float(np.linalg.norm(n))
    if norm < _DEGENERATE_CROSS:
        raise ContractViolationError("degenerate plane normal")
    n = n / norm
    offset = float(offset) / norm
    if n[2] < 0:
        n = -n
        offset = -offset
    slope = math.degrees(math.acos(min(1.0, max(-1.0, float(n[2])))))
    return PlaneModel(normal=n, offset=offset, slope_deg=slope)


@dataclass(frozen=True)
class GeometryParams:
    """Thresholds for per-cell classification and plane fitting."""

    line_ratio_min: float = 0.9
    line_cross_ratio_max: float = 8.0
    planar_flatness_max: float = 0.05
    slope_threshold_deg: float = 30.0
    inlier_threshold: float = 0.125
    ransac_iterations: int = 50
    ransac_seed: int = 0
    min_points_for_eigen: int = 3
    sparsity_low_max: float = 0.01
    sparsity_medium_max: float = 0.1

    def __post_init__(self):
        if self.line_ratio_min <= 2.0 / 3.0:
            raise ConfigError("line_ratio_min must exceed 2/3 so Line and Planar stay exclusive")
        if self.line_cross_ratio_max < 1.0:
            raise ConfigError("line_cross_ratio_max must be >= 1")
        for name in (
            "planar_flatness_max",
            "slope_threshold_deg",
            "inlier_threshold",
            "ransac_iterations",
            "min_points_for_eigen",
            "sparsity_low_max",
            "sparsity_medium_max",
        ):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.sparsity_medium_max < self.sparsity_low_max:
            raise ConfigError("sparsity_medium_max must be >= sparsity_low_max")


def covariance(points: np.ndarray) -> np.ndarray:
    """Population covariance (divisor N) of 3D coordinates."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise ContractViolationError("covariance of an empty point set")
    d = pts - pts.mean(axis=0)
    return (d.T @ d) / len(pts)


def eigen_classify(C: np.ndarray, params: GeometryParams):
    """Classify a cell covariance as Line / Planar / Non-Planar.

    Line demands one dominant axis and no meaningful second one: the
    eigenvalue ratio must reach ``line_ratio_min`` and the residual
    cross-section must stay near-isotropic (lambda2 within
    ``line_cross_ratio_max`` times lambda3).  The second condition keeps
    thin-but-flat strips out of the Line class: a sloped surface sliced by
    short grid cells produces strips whose dominant-axis share is line-like
    even though they have a clear surface normal.  Otherwise the cell is
    Planar when the smallest share stays at or below
    ``planar_flatness_max``, else Non-Planar.  A zero matrix (single point,
    or coincident points) is Non-Planar.
    """
    C = np.asarray(C, dtype=np.float64)
    if C.shape != (3, 3) or float(np.abs(C - C.T).max()) > 1e-8:
        raise ContractViolationError("covariance must be a symmetric 3x3 matrix")
    w, v = np.linalg.eigh(C)
    w = np.maximum(w[::-1], 0.0)  # descending, clamped against round-off
    v = v[:, ::-1]
    total = float(w.sum())
    if total <= 0.0:
        summary = EigenSummary(eigenvalues=w, eigenvectors=v, ratio=float("nan"))
        return summary, CellKind.NON_PLANAR
    ratio = float(w[0] / total)
    summary = EigenSummary(eigenvalues=w, eigenvectors=v, ratio=ratio)
    if ratio >= params.line_ratio_min and w[1] <= params.line_cross_ratio_max * w[2]:
        return summary, CellKind.LINE
    if w[2] / total <= params.planar_flatness_max:
        return summary, CellKind.PLANAR
    return summary, CellKind.NON_PLANAR


def classify_line_cell(e1: np.ndarray, slope_threshold_deg: float) -> GroundState:
    """Gate a line cell by its direction: near-horizontal lines are ground candidates.

    The angle is measured between the dominant eigenvector (sign-normalized
    to point upward) and the vertical axis; a line within the slope threshold
    of horizontal is tentative ground, anything steeper is an obstacle.
    """
    v = np.asarray(e1, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm < _DEGENERATE_CROSS:
        raise ContractViolationError("zero line direction")
    v = v / norm
    if v[2] < 0:
        v = -v
    angle = math.degrees(math.acos(min(1.0, max(-1.0, float(v[2])))))
    if angle >= 90.0 - slope_threshold_deg:
        return GroundState.TENTATIVE
    return GroundState.OBSTACLE


def ransac_plane(
    points: np.ndarray,
    inlier_threshold: float,
    iterations: int,
    seed,
) -> tuple[PlaneModel, np.ndarray, np.ndarray]:
    """Seeded RANSAC plane fit returning the model and inlier/outlier indices.

    Each iteration samples 3 distinct points, scores candidates by the count
    of points within ``inlier_threshold`` of the plane, and stops early once a
    candidate captures >= 99% of the points.  The winner is refit by least
    squares on its inliers (smallest eigenvector of the inlier covariance)
    and the inlier set recomputed once; the refit is kept only when it does
    not lose inliers, so the returned count never falls below any sampled
    candidate's.  Deterministic for fixed (points, seed, iterations,
    threshold).
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n = len(pts)
    if n < 3:
        raise FitFailureError(f"plane fit needs at least 3 points, got {n}")
    if inlier_threshold <= 0 or iterations <= 0:
        raise ContractViolationError("inlier_threshold and iterations must be positive")

    center = pts.mean(axis=0)
    q = pts - center

    # candidates are evaluated in blocks so the early exit actually saves
    # work on clean cells; blocked draws consume the generator stream in the
    # same order as one big draw, so results are identical either way
    rng = np.random.default_rng(seed)
    best_count = -1
    best_mask = None
    normal = None
    offset_c = 0.0
    done = 0
    while done < iterations:
        m = min(8, iterations - done)
        done += m
        # 3 distinct indices per candidate: positions of the 3 smallest keys
        ranks = np.argpartition(rng.random((m, n)), 2, axis=1)[:, :3]
        a, b, c = q[ranks[:, 0]], q[ranks[:, 1]], q[ranks[:, 2]]
        d1 = b - a
        d2 = c - a
        normals = np.empty_like(d1)
        normals[:, 0] = d1[:, 1] * d2[:, 2] - d1[:, 2] * d2[:, 1]
        normals[:, 1] = d1[:, 2] * d2[:, 0] - d1[:, 0] * d2[:, 2]
        normals[:, 2] = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        norms = np.sqrt(np.einsum("ij,ij->i", normals, normals))
        valid = norms > _DEGENERATE_CROSS
        if not np.any(valid):
            continue
        normals[valid] /= norms[valid, None]
        offsets = -np.einsum("ij,ij->i", normals, a)
        dists = np.abs(q @ normals.T + offsets)  # (n, m)
        counts = (dists <= inlier_threshold).sum(axis=0)
        counts[~valid] = -1

        # stop after the first candidate reaching 99% inliers; the best
        # candidate seen up to that point (inclusive) wins
        hits = np.flatnonzero(counts >= 0.99 * n)
        cut = int(hits[0]) + 1 if len(hits) else m
        winner = int(np.argmax(counts[:cut]))
        if int(counts[winner]) > best_count:
            best_count = int(counts[winner])
            best_mask = dists[:, winner] <= inlier_threshold
            normal = normals[winner]
            offset_c = float(offsets[winner])
        if len(hits):
            break
    if best_count < 0:
        raise FitFailureError("all sampled triples were collinear")

    inl = q[best_mask]
    if len(inl) >= 3:
        d = inl - inl.mean(axis=0)
        w, v = np.linalg.eigh((d.T @ d) / len(inl))
        refit_n = v[:, 0]
        refit_off = -float(refit_n @ inl.mean(axis=0))
        refit_d = np.abs(q @ refit_n + refit_off)
        refit_mask = refit_d <= inlier_threshold
        if int(refit_mask.sum()) >= best_count:
            normal, offset_c, best_mask = refit_n, refit_off, refit_mask

    # shift the offset back out of the centered frame: n.(p - center) + o = 0
    plane = make_plane(normal, offset_c - float(np.dot(normal, center)))
    inlier_idx = np.flatnonzero(best_mask)
    outlier_idx = np.flatnonzero(~best_mask)
    return plane, inlier_idx, outlier_idx


def classify_planar_cell(plane: PlaneModel, slope_threshold_deg: float) -> GroundState:
    """Tentative ground iff the plane slope does not exceed the threshold (inclusive)."""
    if plane.slope_deg <= slope_threshold_deg:
        return GroundState.TENTATIVE
    return GroundState.NON_GROUND


def bbox_sparsity(points: np.ndarray, params: GeometryParams) -> Sparsity:
    """Bin bounding-box volume per point into Low / Medium / High.

    Extents are floored at 0.01 m so degenerate (flat or single-point) sets
    keep a nonzero volume.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise ContractViolationError("sparsity of an empty point set")
    extents = np.maximum(pts.max(axis=0) - pts.min(axis=0), 0.01)
    score = float(np.prod(extents)) / len(pts)
    if score <= params.sparsity_low_max:
        return Sparsity.LOW
    if score <= params.sparsity_medium_max:
        return Sparsity.MEDIUM
    return Sparsity.HIGH
