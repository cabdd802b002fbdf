"""Shared domain types: datasets, prior graphs, fitted models, sort results.

Every type validates its invariants on construction and is immutable
afterwards (arrays are marked read-only), so instances can be shared freely
across worker threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np


class ValidationError(ValueError):
    """An input or constructed object violates a documented invariant."""


class FormatError(ValueError):
    """A serialized artifact (CSV, JSON, binary volume) cannot be parsed."""


class SolverError(RuntimeError):
    """A numerical routine failed (singular system, non-PD matrix, ...)."""


def _frozen_array(x, dtype=float, ndim=None, name="array"):
    a = np.array(x, dtype=dtype)
    if ndim is not None and a.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got shape {a.shape}")
    a.setflags(write=False)
    return a


class GraphKind(Enum):
    NEIGHBORHOOD = "neighborhood"
    NODE_ONLY = "node_only"
    FULL = "full"
    RANDOM = "random"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class PriorGraph:
    """Symmetric binary adjacency encoding the allowed precision support.

    The diagonal is always 1: self-edges are never constrained away, only
    off-diagonal entries of the precision matrix can be forced to zero.
    """

    adjacency: np.ndarray
    kind: GraphKind = GraphKind.CUSTOM

    def __post_init__(self):
        a = np.asarray(self.adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError(f"adjacency must be square, got shape {a.shape}")
        if a.shape[0] < 1:
            raise ValidationError("adjacency must be at least 1x1")
        if not np.isin(a, (0, 1)).all():
            raise ValidationError("adjacency entries must be 0 or 1")
        a = a.astype(np.uint8)
        if not (a == a.T).all():
            raise ValidationError("adjacency must be symmetric")
        if not (np.diag(a) == 1).all():
            raise ValidationError("adjacency diagonal must be all ones")
        object.__setattr__(self, "adjacency", _frozen_array(a, dtype=np.uint8))

    @property
    def d(self) -> int:
        return self.adjacency.shape[0]

    @property
    def edge_count(self) -> int:
        """Number of 1s strictly above the diagonal."""
        return int(np.triu(self.adjacency, 1).sum())

    def edges(self) -> list[tuple[int, int]]:
        """Sorted (i, j) pairs with i < j."""
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(i.tolist(), j.tolist()))


@dataclass(frozen=True, eq=False)
class Dataset:
    """n x d matrix of per-subject, per-region scalar features."""

    values: np.ndarray
    region_labels: tuple[str, ...]
    subject_ids: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValidationError(f"values must be 2-dimensional, got shape {v.shape}")
        n, d = v.shape
        if n < 1 or d < 1:
            raise ValidationError(f"need at least one subject and one region, got {v.shape}")
        labels = tuple(str(x) for x in self.region_labels)
        ids = tuple(str(x) for x in self.subject_ids)
        if len(labels) != d:
            raise ValidationError(f"{len(labels)} region labels for {d} columns")
        if len(ids) != n:
            raise ValidationError(f"{len(ids)} subject ids for {n} rows")
        if any(not s for s in labels):
            raise ValidationError("region labels must be non-empty")
        if any(not s for s in ids):
            raise ValidationError("subject ids must be non-empty")
        if len(set(labels)) != d:
            dup = next(x for x in labels if labels.count(x) > 1)
            raise ValidationError(f"duplicate region label {dup!r}")
        if len(set(ids)) != n:
            dup = next(x for x in ids if ids.count(x) > 1)
            raise ValidationError(f"duplicate subject id {dup!r}")
        bad = np.argwhere(~np.isfinite(v))
        if bad.size:
            r, c = bad[0]
            raise ValidationError(
                f"non-finite value at subject {r} ({ids[r]!r}), region {c} ({labels[c]!r})"
            )
        object.__setattr__(self, "values", _frozen_array(v))
        object.__setattr__(self, "region_labels", labels)
        object.__setattr__(self, "subject_ids", ids)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


def validate_dataset(values, region_labels: Sequence[str],
                     subject_ids: Sequence[str] | None = None) -> Dataset:
    """Build a Dataset, generating subject ids ``s0001...`` when omitted."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ValidationError(f"values must be 2-dimensional, got shape {values.shape}")
    if subject_ids is None:
        subject_ids = tuple(f"s{i + 1:04d}" for i in range(values.shape[0]))
    return Dataset(values, tuple(region_labels), tuple(subject_ids))


@dataclass(frozen=True)
class SolverConfig:
    """Penalized-fit solver settings."""

    tol: float = 1e-6
    max_sweeps: int = 500
    penalize_diagonal: bool = True

    def __post_init__(self):
        if not (self.tol > 0):
            raise ValidationError(f"tol must be positive, got {self.tol}")
        if self.max_sweeps < 1:
            raise ValidationError(f"max_sweeps must be >= 1, got {self.max_sweeps}")


@dataclass(frozen=True)
class FitStats:
    """Solver diagnostics attached to a fitted model.

    ``objective_trace`` records the block-ascent surrogate (log det of the
    working covariance) once per sweep; it is nondecreasing for an exact
    inner solve and is what convergence monitoring should look at.
    """

    iterations: int = 0
    final_objective: float = float("nan")
    converged: bool = True
    objective_trace: tuple[float, ...] = ()


def check_precision(precision: np.ndarray, graph: PriorGraph) -> np.ndarray:
    """Validate symmetry, exact support containment and positive definiteness.

    Returns the validated (read-only float) array. Symmetry tolerance is
    1e-12 relative to the largest entry; support and zero checks are exact.
    """
    p = np.asarray(precision, dtype=float)
    d = graph.d
    if p.shape != (d, d):
        raise ValidationError(f"precision shape {p.shape} does not match graph d={d}")
    if not np.isfinite(p).all():
        raise ValidationError("precision contains non-finite entries")
    scale = np.abs(p).max()
    if np.abs(p - p.T).max() > 1e-12 * max(scale, 1e-300):
        raise ValidationError("precision is not symmetric within 1e-12 relative tolerance")
    violating = (graph.adjacency == 0) & (p != 0.0)
    if violating.any():
        i, j = np.argwhere(violating)[0]
        raise ValidationError(
            f"precision[{i}][{j}] = {p[i, j]!r} but the graph forbids that edge"
        )
    try:
        np.linalg.cholesky(p)
    except np.linalg.LinAlgError:
        raise ValidationError("precision is not positive definite") from None
    return _frozen_array(p)


@dataclass(frozen=True, eq=False)
class GaussianModel:
    """Mean vector plus sparse SPD precision matrix fit under a prior graph."""

    mean: np.ndarray
    precision: np.ndarray
    graph: PriorGraph
    rho: float
    fit_stats: FitStats = field(default_factory=FitStats)

    def __post_init__(self):
        m = np.asarray(self.mean, dtype=float)
        if m.ndim != 1 or m.shape[0] != self.graph.d:
            raise ValidationError(f"mean shape {m.shape} does not match graph d={self.graph.d}")
        if not np.isfinite(m).all():
            raise ValidationError("mean contains non-finite entries")
        if not (np.isfinite(self.rho) and self.rho >= 0):
            raise ValidationError(f"rho must be a nonnegative real, got {self.rho}")
        p = check_precision(self.precision, self.graph)
        object.__setattr__(self, "mean", _frozen_array(m))
        object.__setattr__(self, "precision", p)
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def d(self) -> int:
        return self.graph.d

    def covariance(self) -> np.ndarray:
        """Dense inverse of the precision matrix, symmetrized."""
        sigma = np.linalg.inv(self.precision)
        return (sigma + sigma.T) / 2.0


@dataclass(frozen=True, eq=False)
class SortResult:
    """Greedy region ordering with accumulated squared distances.

    ``distances[i]`` is the squared subset distance after the first i+1
    regions (squared-distance convention, so values compare directly against
    chi-square thresholds). ``cutoff`` is 1-based: regions at sorted
    positions cutoff+1..k are considered abnormal; 0 means all are.
    """

    order: tuple[int, ...]
    distances: np.ndarray
    cutoff: int
    abnormality: np.ndarray

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        k = len(order)
        if sorted(order) != list(range(k)):
            raise ValidationError("order must be a permutation of 0..k-1")
        dist = np.asarray(self.distances, dtype=float)
        ab = np.asarray(self.abnormality, dtype=float)
        if dist.shape != (k,) or ab.shape != (k,):
            raise ValidationError("distances and abnormality must have one entry per region")
        if not np.isfinite(dist).all() or (dist < 0).any():
            raise ValidationError("distances must be finite and nonnegative")
        if (np.diff(dist) < 0).any():
            raise ValidationError("distances must be nondecreasing")
        if not (0 <= self.cutoff <= k):
            raise ValidationError(f"cutoff must be in 0..{k}, got {self.cutoff}")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "distances", _frozen_array(dist))
        object.__setattr__(self, "abnormality", _frozen_array(ab))
        object.__setattr__(self, "cutoff", int(self.cutoff))

    @property
    def k(self) -> int:
        return len(self.order)


class Metric(Enum):
    AUC = "auc"
    BIC = "bic"
    MODEL_ORDER = "model_order"


@dataclass(frozen=True, eq=False)
class EvalCurve:
    """A metric sampled on a rho grid, one row per fold or replicate."""

    rho_grid: np.ndarray
    replicates: np.ndarray
    metric: Metric

    def __post_init__(self):
        grid = np.asarray(self.rho_grid, dtype=float)
        rep = np.asarray(self.replicates, dtype=float)
        if grid.ndim != 1 or grid.size < 1:
            raise ValidationError("rho_grid must be a non-empty 1-D array")
        if (grid <= 0).any() or (np.diff(grid) <= 0).any():
            raise ValidationError("rho_grid must be increasing and positive")
        if rep.ndim != 2 or rep.shape[1] != grid.size:
            raise ValidationError(
                f"replicates shape {rep.shape} does not match grid of {grid.size} points"
            )
        if not np.isfinite(rep).all():
            raise ValidationError("replicate rows must be entirely finite")
        object.__setattr__(self, "rho_grid", _frozen_array(grid))
        object.__setattr__(self, "replicates", _frozen_array(rep))
