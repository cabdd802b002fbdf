"""Synthetic cohorts with known ground truth.

A planted model is a Gaussian whose precision matrix respects a chosen graph:
edge weights are drawn uniformly from +-[lo, hi] and the diagonal is set to
the row's absolute sum plus 0.5, which makes the matrix strictly diagonally
dominant and therefore positive definite. Healthy subjects are clean draws;
patients are clean draws with a few regions shifted by a multiple of their
marginal standard deviation.

Every function is a pure map from explicit seeds, derived through the
counter-based generator in `rng`; nothing touches global random state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .core import Dataset, FitStats, GaussianModel, PriorGraph, ValidationError
from .graphs import lattice_graph
from .rng import child_seeds, generator


@dataclass(frozen=True, eq=False)
class PlantedModel:
    """Ground-truth Gaussian plus the graph its precision respects."""

    truth: GaussianModel
    graph: PriorGraph
    seed: int


def make_planted_model(graph: PriorGraph, edge_weight_range=(0.3, 0.9),
                       seed: int = 0) -> PlantedModel:
    """Draw a ground-truth model on a graph.

    Edge weights are uniform on +-[lo, hi]; the diagonal is the row absolute
    sum plus 0.5 (so a node-only graph yields a diagonal of exactly 0.5).
    The mean is standard normal per coordinate.
    """
    lo, hi = (float(edge_weight_range[0]), float(edge_weight_range[1]))
    if not (0 < lo <= hi):
        raise ValidationError(f"edge weight range must satisfy 0 < lo <= hi, got ({lo}, {hi})")
    gen = generator(seed)
    d = graph.d
    theta = np.zeros((d, d))
    for i, j in graph.edges():
        w = gen.uniform(lo, hi) * (1.0 if gen.uniform() < 0.5 else -1.0)
        theta[i, j] = theta[j, i] = w
    theta[np.diag_indices(d)] = np.abs(theta).sum(axis=1) + 0.5
    mean = gen.standard_normal(d)
    truth = GaussianModel(mean, theta, graph, 0.0, FitStats())
    return PlantedModel(truth, graph, int(seed))


def sample_cohort(pm: PlantedModel, n: int, seed: int, id_prefix: str = "s") -> Dataset:
    """n independent draws from the planted Gaussian.

    Sampling goes through the precision's Cholesky factor L: solving
    L' x = eps gives draws with covariance (L L')^{-1} = Theta^{-1}.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    d = pm.truth.d
    chol = np.linalg.cholesky(pm.truth.precision)
    eps = generator(seed).standard_normal((n, d))
    values = pm.truth.mean + solve_triangular(chol, eps.T, lower=True, trans="T").T
    width = max(len(str(n)), 4)
    ids = tuple(f"{id_prefix}{i + 1:0{width}d}" for i in range(n))
    labels = _region_labels(d)
    return Dataset(values, labels, ids)


def _region_labels(d: int) -> tuple:
    width = max(len(str(d)), 2)
    return tuple(f"r{i + 1:0{width}d}" for i in range(d))


def inject_abnormality(subject, pm: PlantedModel, regions, magnitude_sigmas: float,
                       seed: int) -> np.ndarray:
    """Shift the chosen regions by magnitude_sigmas marginal standard
    deviations, each with an independently random sign."""
    z = np.array(subject, dtype=float)
    if z.shape != (pm.truth.d,):
        raise ValidationError(f"subject has shape {z.shape}, expected ({pm.truth.d},)")
    idx = np.asarray(sorted(int(r) for r in regions), dtype=int)
    if idx.size == 0:
        raise ValidationError("regions must be a nonempty index set")
    if np.unique(idx).size != idx.size:
        raise ValidationError("regions contains duplicate indices")
    if idx.min() < 0 or idx.max() >= pm.truth.d:
        raise ValidationError(f"region index out of range for d={pm.truth.d}")
    if not (np.isfinite(magnitude_sigmas) and magnitude_sigmas > 0):
        raise ValidationError(f"magnitude_sigmas must be > 0, got {magnitude_sigmas}")
    sigma_diag = np.diag(pm.truth.covariance())
    signs = np.where(generator(seed).uniform(size=idx.size) < 0.5, -1.0, 1.0)
    z[idx] += signs * magnitude_sigmas * np.sqrt(sigma_diag[idx])
    return z


@dataclass(frozen=True, eq=False)
class SynthCohort:
    """A planted model with healthy/control/patient datasets and the ground
    truth of which regions were perturbed in each patient."""

    planted: PlantedModel
    healthy: Dataset
    controls: Dataset
    patients: Dataset
    injected_regions: tuple  # one frozenset per patient
    magnitude_sigmas: float


def make_default_cohort(seed: int = 0, rows: int = 5, cols: int = 6,
                        n_healthy: int = 40, n_controls: int = 15,
                        n_patients: int = 15, regions_per_patient: int = 3,
                        magnitude_sigmas: float = 1.5,
                        edge_weight_range=(0.3, 0.9)) -> SynthCohort:
    """Desk-size analogue of the clinical cohort geometry: a lattice-graph
    truth with healthy training subjects, clean controls, and patients
    carrying a few injected regional abnormalities.

    The default magnitude keeps the detection task hard enough that modeling
    inter-region covariance visibly beats a diagonal model; raise it (e.g. to
    3 sigma) for easy localization demos.
    """
    if n_patients < 1 or n_controls < 1 or n_healthy < 1:
        raise ValidationError("cohort sizes must be positive")
    graph = lattice_graph(rows, cols)
    d = graph.d
    if not (1 <= regions_per_patient <= d):
        raise ValidationError(
            f"regions_per_patient must be in 1..{d}, got {regions_per_patient}"
        )
    seeds = child_seeds(seed, 4 + 2 * n_patients)
    pm = make_planted_model(graph, edge_weight_range, seeds[0])
    healthy = sample_cohort(pm, n_healthy, seeds[1], id_prefix="h")
    controls = sample_cohort(pm, n_controls, seeds[2], id_prefix="c")
    raw_patients = sample_cohort(pm, n_patients, seeds[3], id_prefix="p")

    values = raw_patients.values.copy()
    injected = []
    for i in range(n_patients):
        pick_seed = seeds[4 + 2 * i]
        sign_seed = seeds[5 + 2 * i]
        regions = generator(pick_seed).choice(d, size=regions_per_patient, replace=False)
        values[i] = inject_abnormality(values[i], pm, regions, magnitude_sigmas, sign_seed)
        injected.append(frozenset(int(r) for r in regions))
    patients = Dataset(values, raw_patients.region_labels, raw_patients.subject_ids)
    return SynthCohort(pm, healthy, controls, patients, tuple(injected), float(magnitude_sigmas))
