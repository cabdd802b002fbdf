"""Synthetic ground-truth generation: planted precision matrices, cohort
sampling, and abnormality injection."""
import numpy as np
import pytest

from ggmscan import (
    SolverConfig,
    ValidationError,
    fit_glasso,
    inject_abnormality,
    lattice_graph,
    mahalanobis,
    make_default_cohort,
    make_planted_model,
    node_only_graph,
    sample_cohort,
    sample_covariance,
)
from ggmscan.graphs import random_graph_like, full_graph


class TestPlantedModel:
    def test_node_only_diagonal_is_half(self):
        pm = make_planted_model(node_only_graph(4), seed=1)
        assert np.allclose(pm.truth.precision, 0.5 * np.eye(4))

    def test_support_matches_graph(self):
        g = lattice_graph(3, 3)
        pm = make_planted_model(g, seed=5)
        support = pm.truth.precision != 0
        expected = g.adjacency.astype(bool)
        assert (support == expected).all()

    def test_edge_weights_in_range(self):
        g = full_graph(6)
        pm = make_planted_model(g, edge_weight_range=(0.2, 0.7), seed=9)
        off = pm.truth.precision[~np.eye(6, dtype=bool)]
        mags = np.abs(off)
        assert mags.min() >= 0.2 and mags.max() <= 0.7

    def test_positive_definite_always(self):
        for seed in range(20):
            g = random_graph_like(lattice_graph(2, 5), seed=seed)
            pm = make_planted_model(g, seed=seed)
            assert np.linalg.eigvalsh(pm.truth.precision).min() > 0

    def test_deterministic(self):
        g = lattice_graph(2, 3)
        a = make_planted_model(g, seed=42)
        b = make_planted_model(g, seed=42)
        assert (a.truth.precision == b.truth.precision).all()
        assert (a.truth.mean == b.truth.mean).all()

    def test_bad_weight_range(self):
        with pytest.raises(ValidationError):
            make_planted_model(node_only_graph(2), edge_weight_range=(0.0, 0.5))
        with pytest.raises(ValidationError):
            make_planted_model(node_only_graph(2), edge_weight_range=(0.9, 0.3))


class TestSampleCohort:
    def test_large_sample_moments(self):
        pm = make_planted_model(lattice_graph(1, 5), seed=3)
        ds = sample_cohort(pm, 100_000, seed=4)
        sigma = pm.truth.covariance()
        assert np.abs(ds.values.mean(axis=0) - pm.truth.mean).max() < 0.05
        _, s = sample_covariance(ds)
        assert np.abs(s.matrix - sigma).max() < 0.05

    def test_deterministic_and_labeled(self):
        pm = make_planted_model(lattice_graph(2, 2), seed=0)
        a = sample_cohort(pm, 5, seed=7, id_prefix="h")
        b = sample_cohort(pm, 5, seed=7, id_prefix="h")
        assert (a.values == b.values).all()
        assert a.subject_ids == ("h0001", "h0002", "h0003", "h0004", "h0005")
        assert a.region_labels == ("r01", "r02", "r03", "r04")

    def test_seed_changes_draws(self):
        pm = make_planted_model(lattice_graph(2, 2), seed=0)
        a = sample_cohort(pm, 5, seed=7)
        b = sample_cohort(pm, 5, seed=8)
        assert not (a.values == b.values).all()

    def test_needs_positive_n(self):
        pm = make_planted_model(node_only_graph(2), seed=0)
        with pytest.raises(ValidationError):
            sample_cohort(pm, 0, seed=1)


class TestInjectAbnormality:
    def test_shift_is_exactly_k_sigma(self):
        pm = make_planted_model(node_only_graph(5), seed=2)
        base = pm.truth.mean.copy()
        out = inject_abnormality(base, pm, [2], magnitude_sigmas=4.0, seed=11)
        sigma_rr = pm.truth.covariance()[2, 2]
        z_shift = (out[2] - base[2]) / np.sqrt(sigma_rr)
        assert abs(z_shift) == pytest.approx(4.0, abs=1e-12)
        assert (out[[0, 1, 3, 4]] == base[[0, 1, 3, 4]]).all()

    def test_validation(self):
        pm = make_planted_model(node_only_graph(3), seed=2)
        z = np.zeros(3)
        with pytest.raises(ValidationError, match="nonempty"):
            inject_abnormality(z, pm, [], 2.0, seed=0)
        with pytest.raises(ValidationError, match="magnitude"):
            inject_abnormality(z, pm, [0], 0.0, seed=0)
        with pytest.raises(ValidationError, match="duplicate"):
            inject_abnormality(z, pm, [0, 0], 1.0, seed=0)
        with pytest.raises(ValidationError, match="range"):
            inject_abnormality(z, pm, [5], 1.0, seed=0)

    def test_deterministic_signs(self):
        pm = make_planted_model(lattice_graph(2, 3), seed=2)
        z = np.zeros(6)
        a = inject_abnormality(z, pm, [1, 3], 2.0, seed=9)
        b = inject_abnormality(z, pm, [1, 3], 2.0, seed=9)
        assert (a == b).all()


class TestRecoveryAndDetection:
    def test_glasso_recovers_planted_precision(self):
        d = 10
        g = lattice_graph(2, 5)
        pm = make_planted_model(g, edge_weight_range=(0.3, 0.5), seed=0)
        ds = sample_cohort(pm, 10 * d * d, seed=100)
        _, s = sample_covariance(ds)
        m = fit_glasso(s, g, rho=0.005, cfg=SolverConfig(penalize_diagonal=False))
        assert np.abs(m.precision - pm.truth.precision).max() < 0.1

    def test_injected_patients_score_higher(self):
        d = 20
        pm = make_planted_model(lattice_graph(4, 5), seed=23)
        clean = sample_cohort(pm, 20, seed=24)
        raw = sample_cohort(pm, 20, seed=25)
        gen_regions = np.random.default_rng(26)
        dists_clean = [mahalanobis(pm.truth, x) for x in clean.values]
        dists_sick = []
        for i, x in enumerate(raw.values):
            regions = gen_regions.choice(d, size=3, replace=False)
            x = inject_abnormality(x, pm, regions, 3.0, seed=1000 + i)
            dists_sick.append(mahalanobis(pm.truth, x))
        assert np.median(dists_sick) > np.median(dists_clean)


class TestDefaultCohort:
    def test_shapes_and_truth_bookkeeping(self):
        cohort = make_default_cohort(seed=0)
        assert cohort.healthy.n == 40 and cohort.controls.n == 15 and cohort.patients.n == 15
        assert cohort.healthy.d == 30
        assert len(cohort.injected_regions) == 15
        assert all(len(r) == 3 for r in cohort.injected_regions)
        assert cohort.planted.graph.kind.value == "custom"
        assert cohort.healthy.region_labels == cohort.patients.region_labels

    def test_deterministic(self):
        a = make_default_cohort(seed=4)
        b = make_default_cohort(seed=4)
        assert (a.patients.values == b.patients.values).all()
        assert a.injected_regions == b.injected_regions

    def test_patients_differ_from_raw_draws_only_at_injections(self):
        from ggmscan.rng import child_seeds
        cohort = make_default_cohort(seed=1)
        pm = cohort.planted
        seeds = child_seeds(1, 4 + 2 * 15)
        raw = sample_cohort(pm, 15, seeds[3], id_prefix="p")
        sigma = np.sqrt(np.diag(pm.truth.covariance()))
        delta = cohort.patients.values - raw.values
        for i, regions in enumerate(cohort.injected_regions):
            touched = np.nonzero(delta[i])[0]
            assert set(touched.tolist()) == set(regions)
            assert np.allclose(np.abs(delta[i][touched]),
                               1.5 * sigma[list(sorted(regions))], atol=1e-12)

    def test_size_validation(self):
        with pytest.raises(ValidationError):
            make_default_cohort(n_patients=0)
        with pytest.raises(ValidationError):
            make_default_cohort(regions_per_patient=31)
