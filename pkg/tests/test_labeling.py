import json

import numpy as np
import pytest

from credlabel import labeling, spectral


class TestCredDistribution:
    def test_symmetric_scores(self):
        np.testing.assert_allclose(
            labeling.cred_distribution(np.array([1.0, 1.0])), [0.5, 0.5]
        )

    def test_hand_example(self):
        # (3 + 2)/8 and (1 + 2)/8
        np.testing.assert_allclose(
            labeling.cred_distribution(np.array([3.0, 1.0])), [5 / 8, 3 / 8]
        )

    def test_constant_scores_give_uniform(self):
        for c in (0.1, 1.0, 42.0):
            q = labeling.cred_distribution(np.full(7, c))
            np.testing.assert_allclose(q, np.full(7, 1 / 7), atol=1e-15)

    def test_scale_invariance(self):
        rng = np.random.default_rng(0)
        scores = rng.random(50)
        q1 = labeling.cred_distribution(scores)
        q2 = labeling.cred_distribution(3.7e4 * scores)
        np.testing.assert_allclose(q1, q2, atol=1e-12)

    def test_all_zero_scores_raise(self):
        with pytest.raises(labeling.DegenerateScoresError, match="uniform"):
            labeling.cred_distribution(np.zeros(5))

    def test_negative_scores_rejected(self):
        with pytest.raises(ValueError):
            labeling.cred_distribution(np.array([1.0, -0.1]))

    def test_invariants_over_random_scores(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            n = int(rng.integers(1, 400))
            scores = rng.gamma(0.5, size=n) * rng.choice([1e-8, 1.0, 1e8])
            scores[rng.random(n) < 0.3] = 0.0
            if scores.sum() == 0:
                scores[0] = 1.0
            q = labeling.cred_distribution(scores)
            assert abs(q.sum() - 1.0) <= 1e-12
            assert q.min() >= 1.0 / (2 * n) * (1 - 1e-12)


class TestDrawLabels:
    def test_point_mass(self):
        q = np.zeros(10)
        q[0] = 1.0
        plan = labeling.draw_labels(q, 5, seed=3)
        np.testing.assert_array_equal(plan.indices, np.zeros(5, dtype=np.int64))
        np.testing.assert_allclose(plan.weights, np.full(5, 1 / 10))

    def test_uniform_weights_exactly_one(self):
        plan = labeling.uniform_plan(1000, 32, seed=4)
        assert np.all(plan.weights == 1.0)
        assert np.all(plan.q == 1.0 / 1000)

    def test_two_point_weights(self):
        q = np.array([5 / 8, 3 / 8])
        plan = labeling.draw_labels(q, 50, seed=5)
        w = np.unique(plan.weights)
        np.testing.assert_allclose(np.sort(w), [0.8, 4 / 3])

    def test_deterministic(self):
        q = labeling.cred_distribution(np.random.default_rng(6).random(100))
        a = labeling.draw_labels(q, 10, seed=9)
        b = labeling.draw_labels(q, 10, seed=9)
        np.testing.assert_array_equal(a.indices, b.indices)
        assert not np.array_equal(
            a.indices, labeling.draw_labels(q, 10, seed=10).indices
        )

    def test_weights_capped_at_two_for_cred_q(self):
        rng = np.random.default_rng(7)
        q = labeling.cred_distribution(rng.gamma(1.0, size=300))
        plan = labeling.draw_labels(q, 200, seed=11)
        assert np.all(plan.weights <= 2.0 * (1 + 1e-12))
        assert np.all(plan.weights > 0)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            labeling.draw_labels(np.array([0.5, 0.4]), 3, seed=0)  # sums to 0.9
        with pytest.raises(ValueError):
            labeling.draw_labels(np.array([1.0]), 0, seed=0)
        with pytest.raises(ValueError):
            labeling.draw_labels(np.array([1.0]), 3, seed=0, scheme="fancy")


class TestExpectedMoments:
    def test_full_support_recovers_covariance(self):
        rng = np.random.default_rng(8)
        F = rng.standard_normal((100, 4))
        y = rng.standard_normal(100)
        q = labeling.cred_distribution(rng.random(100) + 0.1)
        A, b = labeling.expected_moments(q, F, y)
        cov = spectral.empirical_covariance(F).matrix
        np.testing.assert_allclose(A, cov, atol=1e-13)
        np.testing.assert_allclose(b, F.T @ y / 100, atol=1e-13)

    def test_cred_equals_uniform_moments(self):
        F = np.array([[np.sqrt(2), 0.0], [0.0, np.sqrt(2)]])
        y = np.array([1.0, -2.0])
        scores = np.array([1.0, 1.0])
        q_cred = labeling.cred_distribution(scores)
        q_unif = labeling.uniform_distribution(2)
        A_c, b_c = labeling.expected_moments(q_cred, F, y)
        A_u, b_u = labeling.expected_moments(q_unif, F, y)
        np.testing.assert_allclose(A_c, A_u, atol=1e-14)
        np.testing.assert_allclose(b_c, b_u, atol=1e-14)

    def test_pool_guard(self):
        n = labeling.MOMENTS_POOL_GUARD + 1
        q = np.full(n, 1.0 / n)
        with pytest.raises(ValueError, match="enumeration"):
            labeling.expected_moments(q, np.zeros((n, 2)), np.zeros(n))

    def test_zero_support_rejected(self):
        q = np.array([1.0, 0.0])
        with pytest.raises(ValueError, match="full-support"):
            labeling.expected_moments(q, np.eye(2), np.zeros(2))


class TestPlanSerialization:
    def test_json_includes_q_for_small_pools(self):
        plan = labeling.uniform_plan(50, 5, seed=12)
        payload = json.loads(plan.to_json())
        assert len(payload["q"]) == 50
        assert payload["scheme"] == "uniform"
        assert len(payload["indices"]) == 5
        assert len(payload["weights"]) == 5

    def test_json_omits_q_for_large_pools(self):
        plan = labeling.uniform_plan(labeling.JSON_Q_LIMIT + 1, 5, seed=13)
        payload = json.loads(plan.to_json())
        assert "q" not in payload
        assert payload["pool_size"] == labeling.JSON_Q_LIMIT + 1
