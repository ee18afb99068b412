"""Label-budget allocation: which pool points get labeled, and how the
induced sampling bias is corrected.

The importance scheme turns leverage scores into the distribution
q_j = (score_j + mean(score)) / (2 * sum(score)). Adding the mean keeps
every probability at or above 1/(2N), which caps the correction weights
1/(N q) at 2 and stabilizes the weighted estimator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

# Exact-enumeration oracle only makes sense on small pools.
MOMENTS_POOL_GUARD = 2000

# q vectors longer than this are dropped from JSON serializations.
JSON_Q_LIMIT = 10_000

SCHEMES = ("cred", "uniform")


class DegenerateScoresError(ValueError):
    """All leverage scores are zero; caller should fall back to uniform."""


@dataclass(frozen=True)
class LabelingPlan:
    """A drawn labeling: distribution, sampled indices, correction weights."""

    q: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    lambda_q: float
    scheme: str
    seed: int

    def __post_init__(self):
        self.q.setflags(write=False)
        self.indices.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def pool_size(self) -> int:
        return int(self.q.shape[0])

    @property
    def n_labels(self) -> int:
        return int(self.indices.shape[0])

    def to_json(self) -> str:
        """Provenance record; q is omitted for pools above JSON_Q_LIMIT."""
        payload = {
            "scheme": self.scheme,
            "lambda_q": self.lambda_q,
            "seed": self.seed,
            "pool_size": self.pool_size,
            "indices": self.indices.tolist(),
            "weights": self.weights.tolist(),
        }
        if self.pool_size <= JSON_Q_LIMIT:
            payload["q"] = self.q.tolist()
        return json.dumps(payload)


def cred_distribution(scores: np.ndarray) -> np.ndarray:
    """Labeling probabilities from nonnegative leverage scores.

    q_j = (score_j + mean) / (2 * total). Sums to one, is invariant to
    rescaling the scores, and satisfies q_j >= 1/(2N).
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("scores must be a nonempty vector")
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite and nonnegative")
    total = float(s.sum())
    if total <= 0.0:
        raise DegenerateScoresError(
            "all leverage scores are zero; use a uniform labeling distribution instead"
        )
    return (s + s.mean()) / (2.0 * total)


def uniform_distribution(pool_size: int) -> np.ndarray:
    if pool_size < 1:
        raise ValueError("pool_size must be >= 1")
    return np.full(pool_size, 1.0 / pool_size)


def _validate_q(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1 or q.size == 0:
        raise ValueError("q must be a nonempty probability vector")
    if np.any(q < 0) or not np.all(np.isfinite(q)):
        raise ValueError("q must be finite and nonnegative")
    if abs(float(q.sum()) - 1.0) > 1e-9:
        raise ValueError(f"q must sum to 1, got {float(q.sum())!r}")
    return q


def draw_labels(
    q: np.ndarray,
    n: int,
    seed: int,
    scheme: str = "cred",
    lambda_q: float = 0.0,
) -> LabelingPlan:
    """Draw n indices i.i.d. (with replacement) from q and attach weights.

    Weights are 1/(N q_j) for the importance scheme and exactly 1 for the
    uniform scheme. Deterministic given the seed.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    q = _validate_q(q)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    pool = q.shape[0]
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    if scheme == "uniform":
        indices = rng.integers(0, pool, size=n)
        weights = np.ones(n)
    else:
        indices = rng.choice(pool, size=n, replace=True, p=q)
        weights = 1.0 / (pool * q[indices])
    return LabelingPlan(
        q=q.copy(),
        indices=np.asarray(indices, dtype=np.int64),
        weights=weights,
        lambda_q=float(lambda_q),
        scheme=scheme,
        seed=int(seed),
    )


def uniform_plan(pool_size: int, n: int, seed: int) -> LabelingPlan:
    return draw_labels(uniform_distribution(pool_size), n, seed, scheme="uniform")


def expected_moments(
    q: np.ndarray, features: np.ndarray, labels: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Exact expectation of the weighted moments under a single draw from q.

    Enumerates sum_j q_j * (1/(N q_j)) phi_j phi_j' and the matching label
    cross-moment, keeping the q * 1/(Nq) product unsimplified so the
    telescoping to the uniform moments is a genuine numerical check.
    """
    q = _validate_q(q)
    if np.any(q == 0.0):
        raise ValueError("expected_moments requires full-support q")
    F = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    n_pool = q.shape[0]
    if n_pool > MOMENTS_POOL_GUARD:
        raise ValueError(f"exact enumeration limited to N <= {MOMENTS_POOL_GUARD}")
    if F.shape[0] != n_pool or y.shape[0] != n_pool:
        raise ValueError("features/labels must match the pool size of q")
    coeff = q * (1.0 / (n_pool * q))
    A = (F.T * coeff) @ F
    b = F.T @ (coeff * y)
    return (A + A.T) / 2.0, b
