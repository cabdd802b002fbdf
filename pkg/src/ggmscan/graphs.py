"""Prior-graph construction.

Three families drive the modeling comparisons: a neighborhood graph derived
from a 3-D label volume (regions are connected when their voxels touch by
face, edge, or corner), a node-only graph (no off-diagonal structure), and a
full graph. Edge-count-matched random graphs provide the null family for
benchmarking, and a planar lattice is a convenient synthetic ground truth.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .core import FormatError, GraphKind, PriorGraph, ValidationError, _frozen_array
from .rng import generator

_HEADER = struct.Struct("<iii")


@dataclass(frozen=True, eq=False)
class LabelVolume:
    """3-D array of nonnegative integer labels; 0 means background."""

    labels: np.ndarray
    voxel_counts: dict = field(init=False)

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 3:
            raise ValidationError(f"label volume must be 3-D, got ndim={arr.ndim}")
        if any(n < 1 for n in arr.shape):
            raise ValidationError(f"label volume has an empty axis: shape {arr.shape}")
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValidationError(f"labels must be integers, got dtype {arr.dtype}")
        if arr.min() < 0:
            raise ValidationError("labels must be nonnegative (0 = background)")
        arr = arr.astype(np.int32, copy=True)
        values, counts = np.unique(arr, return_counts=True)
        counts_map = {int(v): int(c) for v, c in zip(values, counts) if v != 0}
        object.__setattr__(self, "labels", _frozen_array(arr))
        object.__setattr__(self, "voxel_counts", counts_map)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.labels.shape


# the 13 "positive" offsets; with their negations they cover all 26 neighbors
_OFFSETS = [
    (dx, dy, dz)
    for dx in (0, 1)
    for dy in (-1, 0, 1)
    for dz in (-1, 0, 1)
    if (dx, dy, dz) > (0, 0, 0)
]


def _contact_pairs(labels: np.ndarray) -> set[tuple[int, int]]:
    """All unordered pairs of distinct labels with voxels in each other's
    3x3x3 neighborhood."""
    pairs: set[tuple[int, int]] = set()
    base = int(labels.max()) + 1
    for off in _OFFSETS:
        sl_a, sl_b = [], []
        for n, o in zip(labels.shape, off):
            if o == 0:
                sl_a.append(slice(None))
                sl_b.append(slice(None))
            elif o > 0:
                sl_a.append(slice(0, n - 1))
                sl_b.append(slice(1, n))
            else:
                sl_a.append(slice(1, n))
                sl_b.append(slice(0, n - 1))
        a = labels[tuple(sl_a)].ravel()
        b = labels[tuple(sl_b)].ravel()
        mask = (a > 0) & (b > 0) & (a != b)
        if not mask.any():
            continue
        lo = np.minimum(a[mask], b[mask]).astype(np.int64)
        hi = np.maximum(a[mask], b[mask]).astype(np.int64)
        for key in np.unique(lo * base + hi):
            pairs.add((int(key // base), int(key % base)))
    return pairs


def neighborhood_graph(vol: LabelVolume, min_voxels: int = 1) -> tuple[PriorGraph, list[int]]:
    """Adjacency of regions in a label volume under 26-connectivity.

    Labels with fewer than `min_voxels` voxels are dropped before building
    the graph. Returns the graph and the retained label ids in ascending
    order (node i of the graph is retained[i]).
    """
    if min_voxels < 1:
        raise ValidationError(f"min_voxels must be >= 1, got {min_voxels}")
    retained = sorted(v for v, c in vol.voxel_counts.items() if c >= min_voxels)
    if len(retained) < 2:
        raise ValidationError(
            f"need at least 2 regions with >= {min_voxels} voxels, found {len(retained)}"
        )
    index = {v: i for i, v in enumerate(retained)}
    d = len(retained)
    adjacency = np.eye(d, dtype=np.int8)
    for (u, v) in _contact_pairs(vol.labels):
        if u in index and v in index:
            i, j = index[u], index[v]
            adjacency[i, j] = adjacency[j, i] = 1
    return PriorGraph(adjacency, GraphKind.NEIGHBORHOOD), retained


def node_only_graph(d: int) -> PriorGraph:
    """Identity adjacency: every precision off-diagonal is constrained to 0."""
    if d < 1:
        raise ValidationError(f"d must be >= 1, got {d}")
    return PriorGraph(np.eye(d, dtype=np.int8), GraphKind.NODE_ONLY)


def full_graph(d: int) -> PriorGraph:
    """All-ones adjacency: no structural constraints."""
    if d < 1:
        raise ValidationError(f"d must be >= 1, got {d}")
    return PriorGraph(np.ones((d, d), dtype=np.int8), GraphKind.FULL)


def random_graph_like(g: PriorGraph, seed: int) -> PriorGraph:
    """Graph with g's node and edge counts but uniformly random edge support.

    Edges are drawn without replacement from all i<j pairs using a dedicated
    counter-based generator, so the result is a pure function of (g, seed).
    """
    d = g.d
    total = d * (d - 1) // 2
    k = g.edge_count
    adjacency = np.eye(d, dtype=np.int8)
    if k:
        chosen = generator(seed).choice(total, size=k, replace=False)
        rows, cols = np.triu_indices(d, k=1)
        adjacency[rows[chosen], cols[chosen]] = 1
        adjacency[cols[chosen], rows[chosen]] = 1
    return PriorGraph(adjacency, GraphKind.RANDOM)


def lattice_graph(rows: int, cols: int) -> PriorGraph:
    """4-neighbor grid over rows x cols nodes (node index = r*cols + c)."""
    if rows < 1 or cols < 1:
        raise ValidationError(f"lattice needs positive dimensions, got {rows}x{cols}")
    d = rows * cols
    adjacency = np.eye(d, dtype=np.int8)
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                adjacency[i, i + 1] = adjacency[i + 1, i] = 1
            if r + 1 < rows:
                adjacency[i, i + cols] = adjacency[i + cols, i] = 1
    return PriorGraph(adjacency, GraphKind.CUSTOM)


# ---------------------------------------------------------------------------
# label-volume binary format: three little-endian int32 dims, then row-major
# int32 labels


def write_label_volume(vol: LabelVolume, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(*vol.shape))
        fh.write(np.ascontiguousarray(vol.labels, dtype="<i4").tobytes())


def read_label_volume(path) -> LabelVolume:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FormatError("label volume file too short for its header")
    nx, ny, nz = _HEADER.unpack_from(raw)
    if min(nx, ny, nz) < 1:
        raise FormatError(f"label volume header has non-positive dims ({nx}, {ny}, {nz})")
    expected = _HEADER.size + 4 * nx * ny * nz
    if len(raw) != expected:
        raise FormatError(
            f"label volume payload is {len(raw) - _HEADER.size} bytes, "
            f"expected {expected - _HEADER.size} for dims ({nx}, {ny}, {nz})"
        )
    labels = np.frombuffer(raw, dtype="<i4", offset=_HEADER.size).reshape(nx, ny, nz)
    return LabelVolume(labels)
