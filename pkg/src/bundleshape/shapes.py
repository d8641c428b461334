"""Ten bundle shape measures from streamline geometry.

Measures: length, span, curl, elongation, diameter, volume, total surface
area, total radius of end regions, total area of end regions, and
irregularity. Volume and surface quantities come from an occupancy-grid
voxelization of the streamlines; everything else is computed directly
from coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .io import Bundle

__all__ = [
    "DegenerateBundle",
    "DegenerateSpan",
    "VoxelGrid",
    "ShapeMeasures",
    "MEASURE_NAMES",
    "align_orientations",
    "voxelize",
    "voxelize_points",
    "count_surface_voxels",
    "compute_measures",
]

SPAN_EPS = 1e-6  # mm; spans below this are treated as degenerate

_PACK_BASE = 1 << 21  # per-axis capacity of the packed voxel key


class DegenerateBundle(ValueError):
    """Bundle has zero total arc length; no geometry to measure."""


class DegenerateSpan(ValueError):
    """Mean endpoints coincide (closed loop); span-based measures undefined."""


@dataclass(frozen=True)
class VoxelGrid:
    """Occupancy grid anchored at the bundle's bounding-box min corner."""

    voxel_size: float
    origin: np.ndarray  # (3,) min corner of the bounding box
    indices: np.ndarray  # (n, 3) unique occupied voxel indices, int64

    def __len__(self) -> int:
        return self.indices.shape[0]

    @property
    def occupied(self) -> frozenset:
        """Occupied voxels as a set of (i, j, k) tuples."""
        return frozenset(map(tuple, self.indices))


@dataclass(frozen=True)
class ShapeMeasures:
    """The ten shape scalars for one bundle. Units: mm, mm^2, mm^3."""

    length: float
    span: float
    curl: float
    elongation: float
    diameter: float
    volume: float
    total_surface_area: float
    total_radius_end_regions: float
    total_area_end_regions: float
    irregularity: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "ShapeMeasures":
        vals = np.asarray(values, dtype=np.float64).reshape(10)
        return cls(*(float(v) for v in vals))


MEASURE_NAMES = tuple(f.name for f in fields(ShapeMeasures))


def align_orientations(bundle: Bundle) -> Bundle:
    """Flip streamlines so all run the same way as the longest one.

    The reference is the longest streamline (lowest index on ties). A
    streamline is reversed iff matching its endpoints to the reference
    same-way costs more than matching them swapped. Idempotent.
    """
    lengths = _arc_lengths(bundle)
    ref = bundle.streamlines[int(np.argmax(lengths))]
    ref_first, ref_last = ref[0], ref[-1]
    firsts, lasts = _endpoints(bundle)
    keep = np.linalg.norm(firsts - ref_first, axis=1) + np.linalg.norm(lasts - ref_last, axis=1)
    swap = np.linalg.norm(firsts - ref_last, axis=1) + np.linalg.norm(lasts - ref_first, axis=1)
    aligned = [
        s[::-1] if keep[i] > swap[i] else s for i, s in enumerate(bundle.streamlines)
    ]
    return Bundle(
        tuple(aligned),
        subject_id=bundle.subject_id,
        cluster_id=bundle.cluster_id,
        tract_label=bundle.tract_label,
    )


def _arc_length(s: np.ndarray) -> float:
    return float(np.linalg.norm(np.diff(s, axis=0), axis=1).sum())


def _offsets(bundle: Bundle) -> np.ndarray:
    """Row boundaries of each streamline in the concatenated point array."""
    counts = np.array([s.shape[0] for s in bundle.streamlines])
    return np.concatenate(([0], np.cumsum(counts)))


def _arc_lengths_cat(cat: np.ndarray, off: np.ndarray) -> np.ndarray:
    seg = np.diff(cat, axis=0)
    valid = np.ones(seg.shape[0], dtype=bool)
    valid[off[1:-1] - 1] = False  # drop rows straddling two streamlines
    seg_len = np.sqrt(np.einsum("ij,ij->i", seg, seg))[valid]
    # After compression, streamline j's segments start at off[j] - j. Plain
    # slice sums keep the rounding independent of neighboring streamlines
    # (np.add.reduceat's grouping depends on bucket alignment).
    n = off.shape[0] - 1
    starts = off - np.arange(n + 1)
    return np.array([seg_len[starts[j] : starts[j + 1]].sum() for j in range(n)])


def _endpoints(bundle: Bundle) -> tuple[np.ndarray, np.ndarray]:
    """(firsts, lasts) endpoint arrays, each (n_streamlines, 3)."""
    cat = bundle.all_points()
    off = _offsets(bundle)
    return cat[off[:-1]], cat[off[1:] - 1]


def _arc_lengths(bundle: Bundle) -> np.ndarray:
    """Per-streamline arc lengths in one vectorized pass."""
    return _arc_lengths_cat(bundle.all_points(), _offsets(bundle))


def _supersample(s: np.ndarray, max_step: float) -> np.ndarray:
    """Resample each segment at arc step <= max_step, keeping all vertices."""
    seg = np.diff(s, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    counts = np.maximum(np.ceil(seg_len / max_step).astype(np.int64), 1)
    total = int(counts.sum())
    seg_id = np.repeat(np.arange(counts.shape[0]), counts)
    offsets = np.concatenate(([0], np.cumsum(counts[:-1])))
    within = np.arange(total) - offsets[seg_id] + 1  # 1..n_i per segment
    t = within / counts[seg_id]
    samples = s[seg_id] + t[:, None] * seg[seg_id]
    return np.concatenate((s[:1], samples), axis=0)


def _bundle_samples(cat: np.ndarray, off: np.ndarray, max_step: float) -> np.ndarray:
    """Supersample every streamline of a bundle in one vectorized pass.

    Produces the same sample values as per-streamline :func:`_supersample`
    (identical floating-point expressions per segment), in a different
    order; callers only use the samples as an unordered set.
    """
    seg = np.diff(cat, axis=0)
    valid = np.ones(seg.shape[0], dtype=bool)
    valid[off[1:-1] - 1] = False  # drop segments straddling two streamlines
    seg = seg[valid]
    base = cat[:-1][valid]
    seg_len = np.sqrt(np.einsum("ij,ij->i", seg, seg))
    if float(seg_len.sum()) <= 0.0:
        raise DegenerateBundle("total arc length is zero")
    counts = np.maximum(np.ceil(seg_len / max_step).astype(np.int64), 1)
    total = int(counts.sum())
    seg_id = np.repeat(np.arange(counts.shape[0]), counts)
    offsets = np.concatenate(([0], np.cumsum(counts[:-1])))
    within = np.arange(total) - offsets[seg_id] + 1
    t = within / counts[seg_id]
    samples = base[seg_id] + t[:, None] * seg[seg_id]
    firsts = cat[off[:-1]]
    return np.concatenate((firsts, samples), axis=0)


def _pack(idx: np.ndarray, lo: np.ndarray) -> np.ndarray:
    shifted = idx - lo
    return (shifted[:, 0] * _PACK_BASE + shifted[:, 1]) * _PACK_BASE + shifted[:, 2]


def _unpack(keys: np.ndarray, lo: np.ndarray) -> np.ndarray:
    k = keys % _PACK_BASE
    rest = keys // _PACK_BASE
    j = rest % _PACK_BASE
    i = rest // _PACK_BASE
    return np.stack([i, j, k], axis=1) + lo


def voxelize(bundle: Bundle, voxel_size: float = 1.0) -> VoxelGrid:
    """Rasterize streamlines onto an occupancy grid.

    Segments are supersampled at arc step <= voxel_size/2 (endpoints
    included), and each sample marks floor((p - origin)/voxel_size).
    The origin is the bundle bounding-box min corner, so the result is
    invariant under translation of the whole bundle.
    """
    if voxel_size <= 0:
        raise ValueError(f"voxel_size must be positive, got {voxel_size}")
    return _voxelize_cat(bundle.all_points(), _offsets(bundle), voxel_size)


def _voxelize_cat(cat: np.ndarray, off: np.ndarray, voxel_size: float) -> VoxelGrid:
    samples = _bundle_samples(cat, off, voxel_size / 2.0)
    origin = cat.min(axis=0)
    idx = np.floor((samples - origin) / voxel_size).astype(np.int64)
    lo = idx.min(axis=0) - 1  # headroom so neighbor offsets never underflow
    keys = np.unique(_pack(idx, lo))
    return VoxelGrid(voxel_size=float(voxel_size), origin=origin, indices=_unpack(keys, lo))


def voxelize_points(points: np.ndarray, origin: np.ndarray, voxel_size: float) -> np.ndarray:
    """Unique voxel indices of a raw point set on the given grid."""
    idx = np.floor((np.asarray(points, dtype=np.float64) - origin) / voxel_size)
    return np.unique(idx.astype(np.int64), axis=0)


_NEIGHBOR_DELTAS = np.array(
    [
        [1, 0, 0], [-1, 0, 0],
        [0, 1, 0], [0, -1, 0],
        [0, 0, 1], [0, 0, -1],
    ],
    dtype=np.int64,
)


def count_surface_voxels(indices: np.ndarray) -> int:
    """Number of occupied voxels with at least one unoccupied 6-neighbor."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.shape[0] == 0:
        return 0
    lo = idx.min(axis=0) - 2
    keys = np.sort(_pack(idx, lo))
    exposed = np.zeros(keys.shape[0], dtype=bool)
    for delta in _NEIGHBOR_DELTAS:
        nkeys = _pack(idx + delta, lo)
        pos = np.searchsorted(keys, nkeys)
        pos[pos == keys.shape[0]] = 0  # out-of-range probes cannot match anyway
        exposed |= keys[pos] != nkeys
    return int(exposed.sum())


def compute_measures(bundle: Bundle, voxel_size: float = 1.0) -> ShapeMeasures:
    """Compute the ten shape measures for one bundle.

    Streamline orientations are aligned first so end regions are
    well defined. Length is the mean streamline arc length; span is the
    distance between the mean first and mean last endpoints; volume and
    surface quantities come from the occupancy grid.
    """
    v = float(voxel_size)
    if v <= 0:
        raise ValueError(f"voxel_size must be positive, got {voxel_size}")
    cat = bundle.all_points()
    off = _offsets(bundle)

    lengths = _arc_lengths_cat(cat, off)
    length = float(lengths.mean())
    if length <= 0.0:
        raise DegenerateBundle("total arc length is zero")

    # Orientation alignment only affects which endpoint counts as "first";
    # apply the flip decisions of align_orientations to the endpoints
    # directly instead of materializing a flipped bundle.
    firsts, lasts = cat[off[:-1]], cat[off[1:] - 1]
    ref = int(np.argmax(lengths))
    ref_first, ref_last = firsts[ref], lasts[ref]
    keep = np.linalg.norm(firsts - ref_first, axis=1) + np.linalg.norm(lasts - ref_last, axis=1)
    swap = np.linalg.norm(firsts - ref_last, axis=1) + np.linalg.norm(lasts - ref_first, axis=1)
    flip = (keep > swap)[:, None]
    firsts, lasts = np.where(flip, lasts, firsts), np.where(flip, firsts, lasts)
    span = float(np.linalg.norm(firsts.mean(axis=0) - lasts.mean(axis=0)))
    if span < SPAN_EPS:
        raise DegenerateSpan(f"span {span:.3e} mm below {SPAN_EPS} mm")
    curl = length / span

    grid = _voxelize_cat(cat, off, v)
    volume = len(grid) * v ** 3
    diameter = 2.0 * np.sqrt(volume / (np.pi * length))
    elongation = length / diameter
    surface_area = count_surface_voxels(grid.indices) * v ** 2

    total_radius = 0.0
    total_end_area = 0.0
    for ends in (firsts, lasts):
        centroid = ends.mean(axis=0)
        total_radius += float(np.linalg.norm(ends - centroid, axis=1).mean())
        total_end_area += voxelize_points(ends, grid.origin, v).shape[0] * v ** 2

    irregularity = surface_area / (np.pi * diameter * length)

    return ShapeMeasures(
        length=length,
        span=span,
        curl=curl,
        elongation=float(elongation),
        diameter=float(diameter),
        volume=float(volume),
        total_surface_area=float(surface_area),
        total_radius_end_regions=total_radius,
        total_area_end_regions=total_end_area,
        irregularity=float(irregularity),
    )
