"""Experiment harness: cross-validated AUC/BIC curves over a regularization
grid, information-criterion model comparison, optimal-rho selection, and
random-graph benchmarking.

Leave-one-out cross-validation fits one model per held-out healthy subject
and per grid value, scores the control and patient cohorts by Mahalanobis
distance, and reports AUC together with training-fold BIC and model order.
The same fits yield each held-out subject's squared distance, whose sum over
folds is the rho-selection criterion, so the report carries the selected rho
and the sensitivity/specificity of the Youden-optimal operating point there.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import (
    Dataset,
    EvalCurve,
    GaussianModel,
    Metric,
    PriorGraph,
    SolverConfig,
    SolverError,
    ValidationError,
)
from .glasso import fit_glasso, sample_covariance
from .graphs import random_graph_like
from .rng import child_seeds
from .stats import quantile_envelope, roc_auc

_LN_2PI = math.log(2.0 * math.pi)


def default_rho_grid(points: int = 20) -> np.ndarray:
    """20 log-spaced values from 1e-2 to 10."""
    if points < 1:
        raise ValidationError(f"points must be >= 1, got {points}")
    return np.logspace(-2.0, 1.0, points)


def model_order(model: GaussianModel, upper_only: bool = False) -> int:
    """Number of nonzero precision entries (the BIC parameter count).

    By default both triangles and the diagonal are counted; upper_only counts
    each off-diagonal pair once.
    """
    if upper_only:
        return int(np.count_nonzero(np.triu(model.precision)))
    return int(np.count_nonzero(model.precision))


def bic(x: Dataset, model: GaussianModel, upper_only: bool = False) -> float:
    """Bayesian information criterion of a fitted model on a dataset.

    -2 ln p(X | mu, Theta) + j ln n, with the Gaussian log-likelihood
    evaluated at the model parameters (scatter taken about the model mean)
    and j = model_order. Lower is better.
    """
    if x.d != model.d:
        raise ValidationError(f"dataset has {x.d} regions, model expects {model.d}")
    n = x.n
    centered = x.values - model.mean
    s = centered.T @ centered / n
    try:
        chol = np.linalg.cholesky(model.precision)
    except np.linalg.LinAlgError:
        raise SolverError("BIC undefined: precision is not positive definite") from None
    logdet = 2.0 * float(np.log(np.diag(chol)).sum())
    loglik = 0.5 * n * (logdet - float((s * model.precision).sum())) - 0.5 * n * x.d * _LN_2PI
    return -2.0 * loglik + model_order(model, upper_only) * math.log(n)


def _squared_distances(model: GaussianModel, values: np.ndarray) -> np.ndarray:
    delta = values - model.mean
    return np.einsum("nd,de,ne->n", delta, model.precision, delta)


def _validate_grid(rho_grid) -> np.ndarray:
    if rho_grid is None:
        return default_rho_grid()
    grid = np.asarray(rho_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValidationError("rho grid must be a nonempty 1-D sequence")
    if not np.isfinite(grid).all() or (grid <= 0).any():
        raise ValidationError("rho grid values must be positive finite reals")
    if (np.diff(grid) <= 0).any():
        raise ValidationError("rho grid must be strictly increasing")
    return grid


def _run_indexed(fn, count: int, workers: int):
    """Apply fn(i) for i in range(count), optionally on a thread pool.

    Results are collected by index, so the outcome never depends on
    scheduling order.
    """
    if workers == 1 or count <= 1:
        return [fn(i) for i in range(count)]
    max_workers = workers if workers > 0 else None
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(fn, range(count)))


@dataclass(frozen=True, eq=False)
class CvReport:
    """Leave-one-out cross-validation curves and the selected operating point.

    auc/bic_curve/order_curve hold one row per retained fold. loo_sq[i, k] is
    held-out subject i's squared distance under the fold-i fit at rho k; its
    column sums drive rho_hat. Envelopes are pointwise 90%-coverage bands.
    """

    auc: EvalCurve
    bic_curve: EvalCurve
    order_curve: EvalCurve
    auc_envelope: tuple
    bic_envelope: tuple
    loo_sq: np.ndarray
    rho_hat: float
    sensitivity: float
    specificity: float
    n_folds: int
    fold_ids: tuple

    @property
    def rho_grid(self) -> np.ndarray:
        return self.auc.rho_grid


def loocv(x: Dataset, y: Dataset, z: Dataset, graph: PriorGraph,
          rho_grid=None, cfg: SolverConfig = SolverConfig(),
          workers: int = 1) -> CvReport:
    """LOOCV over the healthy cohort x against controls y and patients z.

    For each held-out healthy subject and each grid rho, a model is fit on
    the remaining subjects; controls score as negatives, patients as
    positives. Folds whose fit fails at any rho are dropped with a warning.
    """
    if x.n < 3:
        raise ValidationError(f"need at least 3 healthy subjects, got {x.n}")
    if y.n < 1 or z.n < 1:
        raise ValidationError("control and patient datasets must be nonempty")
    if not (x.region_labels == y.region_labels == z.region_labels):
        raise ValidationError("datasets have inconsistent region labels")
    if graph.d != x.d:
        raise ValidationError(f"graph d={graph.d} does not match data d={x.d}")
    grid = _validate_grid(rho_grid)
    n, k = x.n, grid.size

    auc = np.full((n, k), np.nan)
    bics = np.full((n, k), np.nan)
    orders = np.full((n, k), np.nan)
    loo_sq = np.full((n, k), np.nan)
    neg_scores = np.full((n, k, y.n), np.nan)
    pos_scores = np.full((n, k, z.n), np.nan)

    def run_fold(i: int) -> None:
        keep = np.arange(n) != i
        fold = Dataset(x.values[keep],
                       x.region_labels,
                       tuple(s for j, s in enumerate(x.subject_ids) if j != i))
        mean, s = sample_covariance(fold)
        for kk, rho in enumerate(grid):
            try:
                fit = fit_glasso(s, graph, float(rho), cfg)
            except SolverError:
                continue
            model = GaussianModel(mean, fit.precision, graph, fit.rho, fit.fit_stats)
            neg = np.sqrt(np.maximum(_squared_distances(model, y.values), 0.0))
            pos = np.sqrt(np.maximum(_squared_distances(model, z.values), 0.0))
            auc[i, kk] = roc_auc(pos, neg).auc
            bics[i, kk] = bic(fold, model)
            orders[i, kk] = model_order(model)
            loo_sq[i, kk] = max(float(_squared_distances(model, x.values[i:i + 1])[0]), 0.0)
            neg_scores[i, kk] = neg
            pos_scores[i, kk] = pos

    _run_indexed(run_fold, n, workers)

    kept = np.isfinite(auc).all(axis=1)
    if not kept.all():
        dropped = [x.subject_ids[i] for i in np.nonzero(~kept)[0]]
        warnings.warn(f"excluded {len(dropped)} fold(s) with failed fits: {dropped}",
                      stacklevel=2)
    if not kept.any():
        raise SolverError("every cross-validation fold failed to fit")

    auc, bics, orders, loo_sq = (a[kept] for a in (auc, bics, orders, loo_sq))
    neg_scores, pos_scores = neg_scores[kept], pos_scores[kept]

    criterion = loo_sq.sum(axis=0)
    best = int(np.argmin(criterion))  # first minimum = smallest rho on ties
    rho_hat = float(grid[best])
    roc = roc_auc(pos_scores[:, best, :].ravel(), neg_scores[:, best, :].ravel())

    return CvReport(
        auc=EvalCurve(grid, auc, Metric.AUC),
        bic_curve=EvalCurve(grid, bics, Metric.BIC),
        order_curve=EvalCurve(grid, orders, Metric.MODEL_ORDER),
        auc_envelope=quantile_envelope(auc, 0.9),
        bic_envelope=quantile_envelope(bics, 0.9),
        loo_sq=loo_sq,
        rho_hat=rho_hat,
        sensitivity=roc.sensitivity,
        specificity=roc.specificity,
        n_folds=int(kept.sum()),
        fold_ids=tuple(s for i, s in enumerate(x.subject_ids) if kept[i]),
    )


def loo_criterion(x: Dataset, graph: PriorGraph, rho_grid=None,
                  cfg: SolverConfig = SolverConfig(), workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Per-rho leave-one-out sum of squared distances of held-out subjects.

    Returns (grid, criterion). Grid values where any fold failed are NaN.
    """
    if x.n < 3:
        raise ValidationError(f"need at least 3 subjects, got {x.n}")
    if graph.d != x.d:
        raise ValidationError(f"graph d={graph.d} does not match data d={x.d}")
    grid = _validate_grid(rho_grid)
    n, k = x.n, grid.size
    sq = np.full((n, k), np.nan)

    def run_fold(i: int) -> None:
        keep = np.arange(n) != i
        mean, s = sample_covariance(x.values[keep])
        for kk, rho in enumerate(grid):
            try:
                fit = fit_glasso(s, graph, float(rho), cfg)
            except SolverError:
                continue
            model = GaussianModel(mean, fit.precision, graph, fit.rho, fit.fit_stats)
            sq[i, kk] = max(float(_squared_distances(model, x.values[i:i + 1])[0]), 0.0)

    _run_indexed(run_fold, n, workers)
    good = np.isfinite(sq).all(axis=0)
    criterion = np.where(good, sq.sum(axis=0), np.nan)
    if not good.all():
        bad = [float(r) for r in grid[~good]]
        warnings.warn(f"rho values with failed fits excluded from selection: {bad}",
                      stacklevel=2)
    return grid, criterion


def select_rho(x: Dataset, graph: PriorGraph, rho_grid=None,
               cfg: SolverConfig = SolverConfig(), workers: int = 1) -> float:
    """Grid rho minimizing the leave-one-out sum of squared distances;
    ties break toward the smaller value."""
    grid, criterion = loo_criterion(x, graph, rho_grid, cfg, workers)
    if not np.isfinite(criterion).any():
        raise SolverError("no rho on the grid produced a full set of successful fits")
    best = int(np.nanargmin(criterion))
    return float(grid[best])


@dataclass(frozen=True, eq=False)
class BenchmarkReport:
    """Random-graph null distribution around a reference graph.

    auc/bic_curve hold one row per surviving random graph. ref_auc/ref_bic
    are the reference graph's curves on the identical train/test split.
    percentile[k] is the midrank percentile of the reference AUC within the
    random population at grid point k. Envelope dicts map coverage level to
    (lower, upper, median) bands.
    """

    auc: EvalCurve
    bic_curve: EvalCurve
    ref_auc: np.ndarray
    ref_bic: np.ndarray
    percentile: np.ndarray
    auc_envelopes: dict
    bic_envelopes: dict
    seed: int
    n_graphs: int

    @property
    def rho_grid(self) -> np.ndarray:
        return self.auc.rho_grid


_ENVELOPE_COVERAGES = (0.75, 0.85, 0.95)


def random_graph_benchmark(x: Dataset, y: Dataset, z: Dataset,
                           reference: PriorGraph, count: int,
                           rho_grid=None, cfg: SolverConfig = SolverConfig(),
                           seed: int = 0, workers: int = 1) -> BenchmarkReport:
    """Compare a reference graph against edge-count-matched random graphs.

    Each of `count` random graphs (and the reference) is fit once per grid
    rho on the full healthy cohort; controls and patients score a single
    AUC/BIC curve per graph. Replicate seeds derive from the master seed, so
    the whole report is a pure function of its arguments.
    """
    if count < 2:
        raise ValidationError(f"count must be >= 2, got {count}")
    if y.n < 1 or z.n < 1:
        raise ValidationError("control and patient datasets must be nonempty")
    if not (x.region_labels == y.region_labels == z.region_labels):
        raise ValidationError("datasets have inconsistent region labels")
    if reference.d != x.d:
        raise ValidationError(f"graph d={reference.d} does not match data d={x.d}")
    grid = _validate_grid(rho_grid)
    k = grid.size
    mean, s = sample_covariance(x)

    def curve_for(graph: PriorGraph) -> tuple[np.ndarray, np.ndarray]:
        a_row = np.full(k, np.nan)
        b_row = np.full(k, np.nan)
        for kk, rho in enumerate(grid):
            try:
                fit = fit_glasso(s, graph, float(rho), cfg)
            except SolverError:
                continue
            model = GaussianModel(mean, fit.precision, graph, fit.rho, fit.fit_stats)
            neg = _squared_distances(model, y.values)
            pos = _squared_distances(model, z.values)
            a_row[kk] = roc_auc(pos, neg).auc
            b_row[kk] = bic(x, model)
        return a_row, b_row

    ref_auc, ref_bic = curve_for(reference)
    if not np.isfinite(ref_auc).all():
        raise SolverError("reference graph failed to fit somewhere on the grid")

    seeds = child_seeds(seed, count)
    rows = _run_indexed(lambda i: curve_for(random_graph_like(reference, seeds[i])),
                        count, workers)
    auc_rows = np.array([r[0] for r in rows])
    bic_rows = np.array([r[1] for r in rows])
    kept = np.isfinite(auc_rows).all(axis=1)
    if not kept.all():
        warnings.warn(f"dropped {int((~kept).sum())} random graph(s) with failed fits",
                      stacklevel=2)
    auc_rows, bic_rows = auc_rows[kept], bic_rows[kept]
    if auc_rows.shape[0] < 2:
        raise SolverError("fewer than 2 random graphs survived fitting")

    less = (auc_rows < ref_auc).sum(axis=0)
    equal = (auc_rows == ref_auc).sum(axis=0)
    percentile = 100.0 * (less + 0.5 * equal) / auc_rows.shape[0]

    return BenchmarkReport(
        auc=EvalCurve(grid, auc_rows, Metric.AUC),
        bic_curve=EvalCurve(grid, bic_rows, Metric.BIC),
        ref_auc=ref_auc,
        ref_bic=ref_bic,
        percentile=percentile,
        auc_envelopes={c: quantile_envelope(auc_rows, c) for c in _ENVELOPE_COVERAGES},
        bic_envelopes={c: quantile_envelope(bic_rows, c) for c in _ENVELOPE_COVERAGES},
        seed=int(seed),
        n_graphs=int(auc_rows.shape[0]),
    )
