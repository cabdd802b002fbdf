"""Penalized precision estimation: analytic cases, KKT conditions, and
agreement with an independent projected-gradient solver."""
import numpy as np
import pytest

from ggmscan import (
    SampleCovariance,
    SolverConfig,
    SolverError,
    ValidationError,
    fit_glasso,
    fit_model,
    full_graph,
    node_only_graph,
    objective,
    sample_covariance,
    validate_dataset,
)

from ggmscan import PriorGraph
from ggmscan.glasso import l1_norm

from oracles import covariance_two_pass, pg_glasso


def _spd_cov(d, gen, scale=1.0):
    a = gen.standard_normal((d, 2 * d))
    s = a @ a.T / (2 * d) * scale
    return SampleCovariance(s, 2 * d)


def _sparse_graph(d, gen):
    """Random graph keeping roughly half of all possible edges."""
    rows, cols = np.triu_indices(d, k=1)
    keep = gen.choice(rows.size, size=rows.size // 2, replace=False)
    adj = np.eye(d, dtype=np.int8)
    adj[rows[keep], cols[keep]] = 1
    adj[cols[keep], rows[keep]] = 1
    return PriorGraph(adj)


class TestSampleCovariance:
    def test_two_point_example(self):
        ds = validate_dataset(np.array([[0.0, 0.0], [2.0, 0.0]]), ("a", "b"))
        mean, s = sample_covariance(ds)
        assert mean.tolist() == [1.0, 0.0]
        assert s.matrix.tolist() == [[1.0, 0.0], [0.0, 0.0]]
        assert s.n == 2

    def test_constant_column_zeroes_row(self, rng):
        x = rng.standard_normal((6, 3))
        x[:, 1] = 4.2
        _, s = sample_covariance(x)
        assert (s.matrix[1] == 0).all() and (s.matrix[:, 1] == 0).all()

    def test_matches_double_loop(self, rng):
        x = rng.standard_normal((5, 3))
        _, s = sample_covariance(x)
        assert np.abs(s.matrix - covariance_two_pass(x)).max() < 1e-12

    def test_ddof_one(self, rng):
        x = rng.standard_normal((7, 2))
        _, s0 = sample_covariance(x)
        _, s1 = sample_covariance(x, ddof=1)
        assert np.allclose(s1.matrix * 6 / 7, s0.matrix)

    def test_needs_two_samples(self):
        with pytest.raises(ValidationError):
            sample_covariance(np.ones((1, 3)))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValidationError, match="symmetric"):
            SampleCovariance(np.array([[1.0, 0.5], [0.1, 1.0]]), 5)

    def test_rejects_indefinite(self):
        with pytest.raises(ValidationError, match="semidefinite"):
            SampleCovariance(np.array([[1.0, 2.0], [2.0, 1.0]]), 5)


class TestObjective:
    def test_identity_cases(self):
        s = SampleCovariance(np.eye(3), 10)
        assert objective(s, np.eye(3), 0.0) == pytest.approx(-3.0, abs=1e-14)
        s2 = SampleCovariance(np.eye(2), 10)
        assert objective(s2, np.eye(2), 1.0, penalize_diagonal=True) == pytest.approx(-4.0)
        assert objective(s2, np.eye(2), 1.0, penalize_diagonal=False) == pytest.approx(-2.0)

    def test_matches_eigendecomposition(self, rng):
        for _ in range(10):
            d = int(rng.integers(2, 6))
            s = _spd_cov(d, rng)
            t = _spd_cov(d, rng, scale=2.0).matrix
            expected = (float(np.log(np.linalg.eigvalsh(t)).sum())
                        - float(np.trace(s.matrix @ t)) - 0.3 * np.abs(t).sum())
            assert objective(s, t, 0.3) == pytest.approx(expected, abs=1e-10)

    def test_rejects_non_pd(self):
        s = SampleCovariance(np.eye(2), 4)
        with pytest.raises(SolverError):
            objective(s, np.array([[1.0, 2.0], [2.0, 1.0]]), 0.0)

    def test_l1_norm_diagonal_convention(self):
        t = np.array([[2.0, -1.0], [-1.0, 3.0]])
        assert l1_norm(t, penalize_diagonal=True) == 7.0
        assert l1_norm(t, penalize_diagonal=False) == 2.0


class TestFitAnalytic:
    def test_scalar_problem(self, rng):
        g = full_graph(1)
        for _ in range(5):
            s_val = float(rng.uniform(0.2, 4.0))
            rho = float(rng.uniform(0.0, 2.0))
            m = fit_glasso(SampleCovariance(np.array([[s_val]]), 5), g, rho)
            assert m.precision[0, 0] == pytest.approx(1.0 / (s_val + rho), rel=1e-12)

    def test_node_only_closed_form(self, rng):
        d = 7
        s = _spd_cov(d, rng)
        for rho in (0.0, 0.05, 1.3):
            m = fit_glasso(s, node_only_graph(d), rho)
            expected = np.diag(1.0 / (np.diag(s.matrix) + rho))
            assert np.abs(m.precision - expected).max() < 1e-12
            assert m.fit_stats.converged

    def test_node_only_unpenalized_diagonal(self, rng):
        s = _spd_cov(5, rng)
        cfg = SolverConfig(penalize_diagonal=False)
        m = fit_glasso(s, node_only_graph(5), 0.7, cfg)
        assert np.abs(np.diag(m.precision) - 1.0 / np.diag(s.matrix)).max() < 1e-12

    def test_unpenalized_full_graph_inverts(self, rng):
        a = rng.standard_normal((4, 4))
        s = SampleCovariance(a @ a.T + np.eye(4), 20)
        m = fit_glasso(s, full_graph(4), 0.0, SolverConfig(tol=1e-8))
        target = np.linalg.inv(s.matrix)
        rel = np.abs(m.precision - target).max() / np.abs(target).max()
        assert rel < 1e-6

    def test_absent_edge_exactly_zero(self, rng):
        g = _sparse_graph(6, rng)
        s = _spd_cov(6, rng)
        m = fit_glasso(s, g, 0.05)
        constrained = (g.adjacency == 0)
        assert constrained.any()
        assert np.abs(m.precision[constrained]).max() == 0.0


class TestFitProperties:
    def test_kkt_conditions(self, rng):
        tol = 1e-4
        for _ in range(8):
            d = int(rng.integers(4, 9))
            g = _sparse_graph(d, rng)
            s = _spd_cov(d, rng)
            rho = float(rng.uniform(0.02, 0.4))
            m = fit_glasso(s, g, rho, SolverConfig(tol=1e-9))
            grad = np.linalg.inv(m.precision) - s.matrix
            free = (g.adjacency == 1) & ~np.eye(d, dtype=bool)
            zero = free & (m.precision == 0.0)
            active = free & (m.precision != 0.0)
            if zero.any():
                assert np.abs(grad[zero]).max() <= rho + tol
            if active.any():
                resid = grad[active] - rho * np.sign(m.precision[active])
                assert np.abs(resid).max() <= tol

    def test_outer_trace_nondecreasing(self, rng):
        for _ in range(5):
            d = int(rng.integers(4, 10))
            s = _spd_cov(d, rng)
            m = fit_glasso(s, full_graph(d), 0.02)
            trace = np.asarray(m.fit_stats.objective_trace)
            assert trace.size == m.fit_stats.iterations
            assert (np.diff(trace) >= -1e-9).all()

    def test_support_shrinks_with_rho(self, rng):
        d = 8
        s = _spd_cov(d, rng)
        grid = np.logspace(-2, 0.5, 10)
        counts = []
        for rho in grid:
            m = fit_glasso(s, full_graph(d), float(rho))
            counts.append(int(np.count_nonzero(m.precision)))
        for earlier, later in zip(counts, counts[1:]):
            assert later <= earlier + 2  # slack: strict nesting is not a theorem

    def test_matches_projected_gradient_small(self, rng):
        for _ in range(6):
            d = int(rng.integers(2, 5))
            g = _sparse_graph(d, rng)
            s = _spd_cov(d, rng)
            rho = float(rng.uniform(0.01, 0.5))
            m = fit_glasso(s, g, rho, SolverConfig(tol=1e-9))
            ref = pg_glasso(s.matrix, g.adjacency, rho)
            assert np.abs(m.precision - ref).max() < 1e-4

    def test_deterministic(self, rng):
        s = _spd_cov(6, rng)
        g = _sparse_graph(6, rng)
        a = fit_glasso(s, g, 0.1)
        b = fit_glasso(s, g, 0.1)
        assert (a.precision == b.precision).all()
        assert a.fit_stats == b.fit_stats

    def test_penalize_diagonal_flag_changes_diagonal(self, rng):
        s = _spd_cov(5, rng)
        g = full_graph(5)
        on = fit_glasso(s, g, 0.3, SolverConfig(penalize_diagonal=True))
        off = fit_glasso(s, g, 0.3, SolverConfig(penalize_diagonal=False))
        # penalized diagonal shrinks the precision's scale
        assert np.trace(off.precision) > np.trace(on.precision)


class TestFitErrors:
    def test_negative_rho(self, rng):
        with pytest.raises(ValidationError, match="rho"):
            fit_glasso(_spd_cov(3, rng), full_graph(3), -0.1)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValidationError):
            fit_glasso(_spd_cov(3, rng), full_graph(4), 0.1)

    def test_singular_s_unpenalized_full(self, rng):
        x = rng.standard_normal((3, 5))  # rank 3 < d=5
        _, s = sample_covariance(x)
        with pytest.raises(SolverError, match="positive definite"):
            fit_glasso(s, full_graph(5), 0.0)

    def test_singular_s_with_penalty_is_fine(self, rng):
        x = rng.standard_normal((3, 5))
        _, s = sample_covariance(x)
        m = fit_glasso(s, full_graph(5), 0.2)
        assert np.isfinite(m.fit_stats.final_objective)

    def test_non_convergence_flagged(self, rng):
        a = rng.standard_normal((12, 12))
        s = SampleCovariance(a @ a.T + 0.05 * np.eye(12), 24)
        cfg = SolverConfig(tol=1e-12, max_sweeps=1)
        m = fit_glasso(s, full_graph(12), 0.01, cfg)
        assert m.fit_stats.converged is False
        assert m.fit_stats.iterations == 1
        # the iterate is still a valid model
        assert np.linalg.eigvalsh(m.precision).min() > 0


class TestFitModel:
    def test_mean_attached(self, rng):
        x = rng.standard_normal((30, 4)) + np.array([1.0, -2.0, 0.5, 3.0])
        ds = validate_dataset(x, ("a", "b", "c", "d"))
        m = fit_model(ds, full_graph(4), 0.1)
        assert np.allclose(m.mean, x.mean(axis=0))
        assert m.rho == 0.1
