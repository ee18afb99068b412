import numpy as np
import pytest

from credlabel import spectral, synthetic

SQRT2 = np.sqrt(2.0)
F_ID = np.array([[SQRT2, 0.0], [0.0, SQRT2]])  # empirical covariance = I


def random_psd(rng, d):
    B = rng.standard_normal((d, d))
    return (B @ B.T) / d


class TestEmpiricalCovariance:
    def test_two_point_identity(self):
        cov = spectral.empirical_covariance(F_ID)
        np.testing.assert_allclose(cov.matrix, np.eye(2), atol=1e-14)
        assert cov.n_samples == 2

    def test_single_row(self):
        cov = spectral.empirical_covariance(np.array([[1.0, 0.0]]))
        np.testing.assert_allclose(cov.matrix, [[1.0, 0.0], [0.0, 0.0]])

    def test_zero_features(self):
        cov = spectral.empirical_covariance(np.zeros((4, 3)))
        np.testing.assert_array_equal(cov.matrix, np.zeros((3, 3)))
        assert np.all(np.linalg.eigvalsh(cov.matrix) >= 0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            spectral.empirical_covariance(np.zeros((0, 3)))


class TestEigendecompose:
    def test_invariants(self):
        rng = np.random.default_rng(0)
        cov = spectral.population_covariance(random_psd(rng, 12))
        spec = spectral.eigendecompose(cov)
        vals, vecs = spec.eigenvalues, spec.eigenvectors
        assert np.all(np.diff(vals) <= 0)
        assert np.all(vals >= 0)
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(12), atol=1e-8)
        recon = vecs @ np.diag(vals) @ vecs.T
        assert np.linalg.norm(recon - cov.matrix) <= 1e-8 * np.linalg.norm(cov.matrix)

    def test_tiny_negatives_clamped(self):
        m = np.diag([1.0, 1e-20])
        spec = spectral.eigendecompose(spectral.population_covariance(m))
        assert spec.eigenvalues[1] == 0.0
        assert spec.rank == 1

    def test_truncated(self):
        spec = spectral.eigendecompose(
            spectral.population_covariance(np.diag([1.0, 0.5, 1e-13]))
        )
        cut = spec.truncated(1e-6)
        assert cut.eigenvalues.shape == (2,)
        assert cut.eigenvectors.shape == (3, 2)


class TestLeverageScores:
    def test_identity_covariance(self):
        cov = spectral.empirical_covariance(F_ID)
        np.testing.assert_allclose(
            spectral.leverage_scores(cov, F_ID, 1.0), [1.0, 1.0], atol=1e-12
        )

    def test_zero_row_scores_zero(self):
        F = np.array([[1.0, 2.0], [0.0, 0.0]])
        cov = spectral.empirical_covariance(F)
        scores = spectral.leverage_scores(cov, F, 0.5)
        assert scores[1] == 0.0

    def test_upper_bound(self):
        # every score is at most ||phi||^2 / lam
        rng = np.random.default_rng(1)
        F = rng.standard_normal((40, 6))
        cov = spectral.empirical_covariance(F)
        for lam in (1e-3, 0.1, 10.0):
            scores = spectral.leverage_scores(cov, F, lam)
            bound = np.einsum("ij,ij->i", F, F) / lam
            assert np.all(scores <= bound * (1 + 1e-10))

    def test_rejects_nonpositive_lambda(self):
        cov = spectral.empirical_covariance(F_ID)
        with pytest.raises(ValueError, match="positive"):
            spectral.leverage_scores(cov, F_ID, 0.0)

    def test_dimension_mismatch(self):
        cov = spectral.empirical_covariance(F_ID)
        with pytest.raises(ValueError, match="columns"):
            spectral.leverage_scores(cov, np.zeros((3, 5)), 1.0)

    def test_spectrum_path_matches_solve_path(self):
        rng = np.random.default_rng(2)
        F = rng.standard_normal((30, 5))
        cov = spectral.empirical_covariance(F)
        spec = spectral.eigendecompose(cov)
        for lam in (1e-6, 1e-2, 1.0):
            np.testing.assert_allclose(
                spectral.leverage_scores_from_spectrum(spec, F, lam),
                spectral.leverage_scores(cov, F, lam),
                rtol=1e-8,
                atol=1e-10,
            )


class TestGramPath:
    def test_matches_feature_path_identity(self):
        gram = F_ID @ F_ID.T
        np.testing.assert_allclose(
            spectral.leverage_scores_gram(gram, 1.0), [1.0, 1.0], atol=1e-12
        )

    def test_zero_gram(self):
        np.testing.assert_array_equal(
            spectral.leverage_scores_gram(np.zeros((4, 4)), 0.5), np.zeros(4)
        )

    def test_random_pool_equivalence(self):
        rng = np.random.default_rng(3)
        F = rng.standard_normal((50, 7))
        cov = spectral.empirical_covariance(F)
        direct = spectral.leverage_scores(cov, F, 0.1)
        via_gram = spectral.leverage_scores_gram(F @ F.T, 0.1)
        assert np.max(np.abs(direct - via_gram)) <= 1e-8

    def test_equivalence_when_features_outnumber_points(self):
        # the N x N kernel path stays cheap when the feature dimension is
        # large; results still match the d x d feature path
        rng = np.random.default_rng(9)
        F = rng.standard_normal((20, 128)) / np.sqrt(128)
        direct = spectral.leverage_scores(spectral.empirical_covariance(F), F, 0.05)
        via_gram = spectral.leverage_scores_gram(F @ F.T, 0.05)
        np.testing.assert_allclose(via_gram, direct, atol=1e-10)

    def test_rejects_indefinite(self):
        g = np.diag([1.0, -1.0])
        with pytest.raises(ValueError, match="PSD"):
            spectral.leverage_scores_gram(g, 1e-3)

    def test_size_guard(self):
        with pytest.raises(ValueError, match="limited"):
            spectral.leverage_scores_gram(np.eye(spectral.GRAM_SIZE_GUARD + 1), 1.0)


class TestEffectiveDimension:
    def test_hand_value(self):
        spec = spectral.SpectrumModel(np.array([1.0, 0.01]), np.eye(2))
        assert spectral.effective_dimension(spec, 0.01) == pytest.approx(
            1.0 / 1.01 + 0.01 / 0.02, abs=1e-12
        )

    def test_limits(self):
        spec = spectral.SpectrumModel(np.array([2.0, 1.0, 0.0]), np.eye(3))
        assert spectral.effective_dimension(spec, 1e12) < 1e-11
        assert spectral.effective_dimension(spec, 1e-14) == pytest.approx(2.0, abs=1e-6)

    def test_monotone_in_lambda(self):
        spec = spectral.SpectrumModel(np.arange(10, 0, -1.0), np.eye(10))
        lams = np.logspace(-6, 3, 25)
        vals = [spectral.effective_dimension(spec, l) for l in lams]
        assert np.all(np.diff(vals) < 0)

    def test_power_law_bound(self):
        d, alpha = 1000, 2.0
        vals = np.arange(1, d + 1, dtype=float) ** -alpha
        spec = spectral.SpectrumModel(vals, np.eye(d))
        n_eff = spectral.effective_dimension(spec, 1e-4)
        bound = spectral.trace_power(spec, alpha) * (1e-4) ** (-1 / alpha)
        assert n_eff <= bound

    def test_trace_identity_with_leverage_mean(self):
        # mean leverage score equals the effective dimension of the same
        # empirical covariance
        rng = np.random.default_rng(4)
        F = rng.standard_normal((60, 8))
        cov = spectral.empirical_covariance(F)
        spec = spectral.eigendecompose(cov)
        for lam in (1e-3, 0.3):
            mean_score = spectral.leverage_scores(cov, F, lam).mean()
            assert mean_score == pytest.approx(
                spectral.effective_dimension(spec, lam), rel=1e-8
            )


class TestSupLeverageAndBounds:
    def test_identity_example(self):
        cov = spectral.empirical_covariance(F_ID)
        spec = spectral.eigendecompose(cov)
        sup = spectral.sup_leverage(cov, F_ID, 1.0)
        n_bound, f_bound = spectral.theory_bounds(spec, 1.0, 2.0, kappa_sq=2.0)
        assert sup == pytest.approx(1.0, abs=1e-12)
        assert f_bound == pytest.approx(2.0)
        assert sup <= f_bound

    def test_zero_row_does_not_change_sup(self):
        rng = np.random.default_rng(5)
        F = rng.standard_normal((20, 4))
        cov = spectral.empirical_covariance(F)
        sup = spectral.sup_leverage(cov, F, 0.5)
        with_zero = np.vstack([F, np.zeros(4)])
        assert spectral.sup_leverage(cov, with_zero, 0.5) == pytest.approx(sup)

    def test_sup_at_least_mean(self):
        rng = np.random.default_rng(6)
        F = rng.standard_normal((30, 5))
        cov = spectral.empirical_covariance(F)
        scores = spectral.leverage_scores(cov, F, 0.2)
        assert scores.max() >= scores.mean()

    def test_alpha_guard(self):
        spec = spectral.SpectrumModel(np.array([1.0]), np.eye(1))
        with pytest.raises(ValueError, match="alpha"):
            spectral.theory_bounds(spec, 0.1, 1.0, 1.0)

    def test_population_gap_grows_as_lambda_shrinks(self):
        # worst-case-to-average leverage over the support of the
        # truncated-normal power-law measure: the supremum sits at the
        # support corner and outpaces the effective dimension
        variances = synthetic.power_law_variances(50, 2.0)
        pop = synthetic.truncnorm_population_spectrum(variances)
        ratios = []
        for lam in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5):
            f_pop = np.sum(1.0 / (pop.eigenvalues + lam))
            ratios.append(f_pop / spectral.effective_dimension(pop, lam))
        assert all(a < b for a, b in zip(ratios, ratios[1:]))


class TestSpectralFilters:
    def test_at_zero(self):
        p, r = spectral.spectral_filters(0.5, 3, 0.0)
        assert p == pytest.approx(0.5 * 4)
        assert r == 1.0

    def test_defining_identity(self):
        eta, t = 0.3, 17
        x = np.linspace(0.0, 1.0 / eta, 200, endpoint=False)
        p, r = spectral.spectral_filters(eta, t, x)
        np.testing.assert_allclose(x * p + r, 1.0, atol=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            spectral.spectral_filters(0.5, 3, 2.0)
        with pytest.raises(ValueError):
            spectral.spectral_filters(0.5, 3, -0.1)
        with pytest.raises(ValueError):
            spectral.spectral_filters(-1.0, 3, 0.1)

    def test_residual_decay_bound(self):
        # sup_x r_t(x) x^u <= u^u (eta t)^(-u)
        eta = 0.5
        x = np.linspace(0.0, 1.0 / eta, 4001, endpoint=False)
        for t in (10, 100, 1000):
            _, r = spectral.spectral_filters(eta, t, x)
            for u in (0.0, 0.5, 1.0):
                uu = 1.0 if u == 0.0 else u**u
                sup = np.max(r * x**u)
                assert sup <= uu * (eta * t) ** (-u) + 1e-12

    def test_filter_matches_gd_iteration(self):
        rng = np.random.default_rng(7)
        A = random_psd(rng, 12)
        b = rng.standard_normal(12)
        eta = 0.9 / np.linalg.eigvalsh(A)[-1]
        g = np.zeros(12)
        for _ in range(300):
            g = g - eta * (A @ g - b)
        filtered = spectral.gd_filter_apply(A, b, eta, 300)
        np.testing.assert_allclose(filtered, g, atol=1e-8)


def test_fit_decay_exponent_recovers_alpha():
    vals = np.arange(1, 201, dtype=float) ** -1.7
    spec = spectral.SpectrumModel(vals, np.eye(200))
    assert spectral.fit_decay_exponent(spec) == pytest.approx(1.7, abs=1e-6)
