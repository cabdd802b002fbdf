"""Subject-level abnormality scoring and region sorting.

A fitted Gaussian model scores a subject by Mahalanobis distance. To localize
which regions drive a large distance, regions are sorted from most normal to
most abnormal: starting from the empty set, repeatedly append the region that
least increases the accumulated marginal squared distance. The accumulated
distance of the first i regions is compared against chi-square(i) to find the
cutoff rank; everything after it is flagged.

Distances accumulated during sorting follow the marginal convention: the
squared distance of subset R inverts the R-by-R block of the covariance
(not of the precision), because that is the form with a chi-square marginal
distribution. SortResult stores squared distances throughout.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .core import (
    Dataset,
    GaussianModel,
    SolverError,
    SortResult,
    ValidationError,
    _frozen_array,
)
from .stats import chi2_cdf, chi2_quantile, normal_quantile

_SING_EPS = 1e-12
_CUTOFF_LEVEL = 0.95


def _deviation(model: GaussianModel, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (model.d,):
        raise ValidationError(f"vector has shape {z.shape}, model expects ({model.d},)")
    if not np.isfinite(z).all():
        raise ValidationError("vector contains non-finite entries")
    return z - model.mean


def mahalanobis(model: GaussianModel, z) -> float:
    """Model-standardized distance sqrt((z-mu)' Theta (z-mu))."""
    delta = _deviation(model, z)
    return float(np.sqrt(max(delta @ model.precision @ delta, 0.0)))


def subset_distance(model: GaussianModel, z, subset) -> float:
    """Squared Mahalanobis distance of z restricted to `subset` under the
    marginal distribution of those regions (inverts the subset block of the
    covariance)."""
    delta = _deviation(model, z)
    r = np.asarray(list(subset), dtype=int)
    if r.size == 0:
        raise ValidationError("subset must be nonempty")
    if np.unique(r).size != r.size:
        raise ValidationError("subset contains duplicate indices")
    if r.min() < 0 or r.max() >= model.d:
        raise ValidationError(f"subset indices out of range for d={model.d}")
    sigma = model.covariance()
    block = sigma[np.ix_(r, r)]
    try:
        chol = np.linalg.cholesky(block)
    except np.linalg.LinAlgError:
        raise SolverError("marginal covariance block is numerically singular") from None
    y = solve_triangular(chol, delta[r], lower=True)
    return float(y @ y)


def greedy_sort(model: GaussianModel, z) -> SortResult:
    """Order regions from most normal to most abnormal.

    At each step the region whose inclusion least increases the accumulated
    marginal squared distance is appended (ties go to the lowest region
    index). Returns the visit order, the accumulated squared distances D_i,
    the cutoff rank (largest i with chi2_cdf(D_i, i) < 0.95, else 0), and the
    per-step abnormality differentials a_i = (D_i - D_{i-1}) /
    (Q_i - Q_{i-1}) where Q_i is the chi-square(i) 95th percentile.

    Runs in O(d^3) total by growing a Cholesky factor of the selected
    covariance block one row per step and updating all candidate solves
    incrementally.
    """
    delta = _deviation(model, z)
    sigma = model.covariance()
    d = model.d
    var = np.diag(sigma).copy()
    if (var <= 0).any():
        raise SolverError("model covariance has a non-positive marginal variance")

    remaining = np.arange(d)
    # t[:, j] grows one entry per step: the candidate column of the inverse
    # Cholesky solve; s and p are its running squared norm and inner product
    # with the solved deviation.
    t = np.zeros((d, d))
    s = np.zeros(d)
    p = np.zeros(d)
    order: list[int] = []
    distances = np.zeros(d)
    increments = np.zeros(d)
    total = 0.0

    for step in range(d):
        lam2 = var[remaining] - s[remaining]
        sing = lam2 <= _SING_EPS * var[remaining]
        resid = delta[remaining] - p[remaining]
        with np.errstate(divide="ignore", invalid="ignore"):
            incr = np.where(sing, np.inf, resid * resid / lam2)
        pick = int(np.argmin(incr))  # argmin takes the first, i.e. lowest index
        j = int(remaining[pick])
        if not np.isfinite(incr[pick]):
            raise SolverError("marginal covariance block is numerically singular")

        lam = float(np.sqrt(lam2[pick]))
        u = float(resid[pick]) / lam
        total += u * u
        order.append(j)
        increments[step] = u * u
        distances[step] = total

        remaining = np.delete(remaining, pick)
        if remaining.size:
            cross = sigma[j, remaining]
            new_row = (cross - t[:step, j] @ t[:step, remaining]) / lam
            t[step, remaining] = new_row
            s[remaining] += new_row**2
            p[remaining] += new_row * u

    cutoff = 0
    for i in range(1, d + 1):
        if chi2_cdf(distances[i - 1], i) < _CUTOFF_LEVEL:
            cutoff = i
    quantiles = np.array([chi2_quantile(_CUTOFF_LEVEL, i) for i in range(1, d + 1)])
    steps = np.diff(np.concatenate(([0.0], quantiles)))
    abnormality = increments / steps
    return SortResult(np.array(order), distances, cutoff, abnormality)


def flag_abnormal(sr: SortResult) -> frozenset:
    """Region indices at sorted positions past the cutoff."""
    return frozenset(int(r) for r in sr.order[sr.cutoff:])


@dataclass(frozen=True, eq=False)
class AbnormalityMap:
    """Sorting results for a cohort, with a regions-by-subjects matrix of
    abnormality differentials for heat-map export."""

    sort_results: tuple
    flags: tuple
    a_matrix: np.ndarray  # d regions x l subjects

    def __post_init__(self):
        object.__setattr__(self, "a_matrix", _frozen_array(np.asarray(self.a_matrix, dtype=float)))

    @property
    def n_subjects(self) -> int:
        return len(self.sort_results)


def abnormality_map(model: GaussianModel, subjects: Dataset) -> AbnormalityMap:
    """Run greedy_sort on every subject of a dataset."""
    if subjects.d != model.d:
        raise ValidationError(
            f"dataset has {subjects.d} regions, model expects {model.d}"
        )
    results = []
    flags = []
    a_matrix = np.zeros((model.d, subjects.n))
    for i in range(subjects.n):
        sr = greedy_sort(model, subjects.values[i])
        results.append(sr)
        flags.append(flag_abnormal(sr))
        a_matrix[sr.order, i] = sr.abnormality
    return AbnormalityMap(tuple(results), tuple(flags), a_matrix)


@dataclass(frozen=True, eq=False)
class ZScoreMap:
    """Per-region z-scores of subjects against training mean/std.

    z is d regions x l subjects; rows whose training std is zero hold NaN and
    are excluded from mean_abs and flags. flags maps each threshold to a
    boolean matrix of |z| exceedances.
    """

    z: np.ndarray
    thresholds: tuple
    mean_abs: np.ndarray
    flags: dict

    def __post_init__(self):
        object.__setattr__(self, "z", _frozen_array(np.asarray(self.z, dtype=float)))
        object.__setattr__(self, "mean_abs", _frozen_array(np.asarray(self.mean_abs, dtype=float)))


def bonferroni_z_threshold(d: int, alpha: float = 0.05) -> float:
    """Two-sided standard-normal threshold controlling family-wise error at
    alpha across d tests: the (1 - alpha/(2d)) quantile."""
    if d < 1:
        raise ValidationError(f"d must be >= 1, got {d}")
    return normal_quantile(1.0 - alpha / (2.0 * d))


def zscore_map(train: Dataset, subjects: Dataset, thresholds=None) -> ZScoreMap:
    """Univariate baseline: z-score every subject region against the training
    cohort (std with n-1 denominator). Default thresholds are 2 and the
    Bonferroni-corrected value for d regions."""
    if train.region_labels != subjects.region_labels:
        raise ValidationError("training and subject datasets have different region labels")
    if train.n < 2:
        raise ValidationError(f"need at least 2 training subjects, got {train.n}")
    mean = train.values.mean(axis=0)
    std = train.values.std(axis=0, ddof=1)
    dead = std == 0.0
    if dead.any():
        names = [train.region_labels[i] for i in np.nonzero(dead)[0]]
        warnings.warn(
            f"zero training std in region(s) {names}; z-scores there are undefined and skipped",
            stacklevel=2,
        )
    if thresholds is None:
        thresholds = (2.0, bonferroni_z_threshold(train.d))
    thresholds = tuple(float(t) for t in thresholds)
    if any(t <= 0 for t in thresholds):
        raise ValidationError("thresholds must be positive")

    with np.errstate(divide="ignore", invalid="ignore"):
        z = (subjects.values - mean) / std  # l x d
    z = z.T.copy()  # d x l
    z[dead, :] = np.nan
    finite = ~dead
    if finite.any():
        mean_abs = np.abs(z[finite, :]).mean(axis=0)
    else:
        mean_abs = np.full(subjects.n, np.nan)
    flags = {
        t: (np.abs(np.where(np.isnan(z), 0.0, z)) > t) for t in thresholds
    }
    return ZScoreMap(z, thresholds, mean_abs, flags)
