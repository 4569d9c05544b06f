"""Reading and writing KITTI-style scans, label files, and segmentation masks.

Scans are ``.bin`` files of consecutive little-endian float32 quadruples
``(x, y, z, intensity)``.  Label files hold one little-endian uint32 per
point; the semantic class id is the low 16 bits (the high 16 bits carry an
instance id and are discarded).  Masks are written one byte per point,
1 = ground, in input order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractViolationError, MalformedFileError

POINT_RECORD_BYTES = 16
LABEL_RECORD_BYTES = 4


@dataclass
class PointCloud:
    """Sensor-frame points with optional per-point reflectance.

    ``valid_mask`` maps back to the original file records when non-finite
    rows were dropped at parse time (None when nothing was dropped), so
    per-record label files can be realigned to the kept points.
    """

    points: np.ndarray  # (N, 3) float64
    intensity: np.ndarray | None = None  # (N,) float64
    dropped_nonfinite: int = 0
    valid_mask: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class SyntheticSeedInfo:
    """Bookkeeping for the lattice of seed points injected below the robot."""

    count: int
    radius: float
    depth: float
    spacing: float


def read_kitti_bin(path: str | Path) -> PointCloud:
    """Parse a KITTI ``.bin`` scan.

    Non-finite records are dropped (LiDAR returns can be invalid) and the
    dropped count is surfaced on the returned cloud.
    """
    data = Path(path).read_bytes()
    if len(data) % POINT_RECORD_BYTES != 0:
        raise MalformedFileError(
            f"{path}: {len(data)} bytes is not a multiple of {POINT_RECORD_BYTES}"
        )
    records = np.frombuffer(data, dtype="<f4").reshape(-1, 4).astype(np.float64)
    finite = np.isfinite(records).all(axis=1)
    dropped = int(len(records) - finite.sum())
    kept = records[finite]
    return PointCloud(
        points=np.ascontiguousarray(kept[:, :3]),
        intensity=kept[:, 3].copy(),
        dropped_nonfinite=dropped,
        valid_mask=finite if dropped else None,
    )


def read_semantic_labels(path: str | Path) -> np.ndarray:
    """Parse a SemanticKITTI ``.label`` file into uint16 class ids."""
    data = Path(path).read_bytes()
    if len(data) % LABEL_RECORD_BYTES != 0:
        raise MalformedFileError(
            f"{path}: {len(data)} bytes is not a multiple of {LABEL_RECORD_BYTES}"
        )
    words = np.frombuffer(data, dtype="<u4")
    return (words & 0xFFFF).astype(np.uint16)


def inject_synthetic_seed(
    cloud: PointCloud, radius: float, depth: float, spacing: float = 0.3
) -> tuple[PointCloud, SyntheticSeedInfo]:
    """Append a square lattice of seed points below the sensor.

    The lattice has pitch ``spacing``, is clipped to the disk of the given
    radius (boundary inclusive, measured in lattice steps so an exact-radius
    ring survives float division), and sits at z = -depth exactly.  Points
    are appended at the tail so stripping is a truncation.
    """
    if radius < 0:
        raise ContractViolationError("radius must be >= 0")
    if depth <= 0 or spacing <= 0:
        raise ContractViolationError("depth and spacing must be > 0")
    steps = int(math.floor(radius / spacing))
    ii, jj = np.mgrid[-steps : steps + 1, -steps : steps + 1]
    keep = (ii * ii + jj * jj) <= (radius / spacing) ** 2
    xs = ii[keep].ravel() * spacing
    ys = jj[keep].ravel() * spacing
    lattice = np.column_stack([xs, ys, np.full(xs.shape, -depth)])
    info = SyntheticSeedInfo(count=len(lattice), radius=radius, depth=depth, spacing=spacing)

    points = np.vstack([cloud.points, lattice]) if len(cloud) else lattice
    intensity = cloud.intensity
    if intensity is not None:
        intensity = np.concatenate([intensity, np.zeros(len(lattice))])
    out = PointCloud(
        points=points,
        intensity=intensity,
        dropped_nonfinite=cloud.dropped_nonfinite,
        valid_mask=cloud.valid_mask,
    )
    return out, info


def strip_synthetic(mask: np.ndarray, info: SyntheticSeedInfo) -> np.ndarray:
    """Drop the tail entries covering injected seed points from a mask."""
    if info.count > len(mask):
        raise ContractViolationError(
            f"cannot strip {info.count} synthetic entries from a mask of length {len(mask)}"
        )
    return mask[: len(mask) - info.count]


def write_mask(path: str | Path, mask: np.ndarray) -> None:
    """Write a per-point ground mask, one byte per point (1 = ground)."""
    data = np.asarray(mask).astype(np.uint8)
    Path(path).write_bytes(data.tobytes())


def read_mask(path: str | Path) -> np.ndarray:
    raw = np.frombuffer(Path(path).read_bytes(), dtype=np.uint8)
    return raw != 0


def write_xyz(path: str | Path, cloud: PointCloud, mask: np.ndarray) -> None:
    """Write an ASCII ``x y z label`` file for inspection in point-cloud viewers."""
    if len(cloud) != len(mask):
        raise ContractViolationError("cloud and mask lengths differ")
    with open(path, "w") as fh:
        for (x, y, z), g in zip(cloud.points, mask):
            fh.write(f"{x:.6f} {y:.6f} {z:.6f} {int(g)}\n")
