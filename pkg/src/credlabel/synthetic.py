"""Synthetic pools, spectra, targets, and noisy labels.

Three generator families: an anisotropic 2-D Gaussian, a product of
truncated normals on [-1, 1]^d with power-law coordinate variances (whose
population covariance is known in closed form), and bare diagonal
power-law spectra for analytic oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import SpectrumModel

GAUSS2D_VARIANCES = (1.0, 0.01)


@dataclass(frozen=True)
class SyntheticModel:
    """Descriptor for one synthetic data model used by experiments."""

    kind: str  # gauss2d | truncated_normal_product | diagonal_power_law
    dims: int
    alpha: float
    sigma2: float
    theta: np.ndarray | None = field(default=None, repr=False)
    seed: int = 0


def sample_gauss2d(n: int, seed: int) -> np.ndarray:
    """n i.i.d. rows with independent coordinates N(0, 1) and N(0, 0.01)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    X = rng.standard_normal((n, 2))
    X[:, 0] *= math.sqrt(GAUSS2D_VARIANCES[0])
    X[:, 1] *= math.sqrt(GAUSS2D_VARIANCES[1])
    return X


def power_law_variances(d: int, alpha: float, sigma1_sq: float = 0.25) -> np.ndarray:
    """Coordinate variances sigma1_sq * i^(-alpha), i = 1..d.

    The 0.25 leading variance keeps truncation to [-1, 1] mild, so the
    truncated variances stay within a constant factor of these.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if sigma1_sq <= 0:
        raise ValueError("sigma1_sq must be positive")
    i = np.arange(1, d + 1, dtype=np.float64)
    return sigma1_sq * i ** (-float(alpha))


def sample_truncnorm_product(
    n: int, variances: np.ndarray, seed: int
) -> np.ndarray:
    """Product of centered normals conditioned on [-1, 1], one per column.

    Rejection sampling per coordinate: redraw out-of-range entries until
    all land inside. Acceptance is at least erf(1/(sigma sqrt(2))) per
    draw, so the loop terminates fast for the variances used here.
    """
    variances = np.asarray(variances, dtype=np.float64)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if np.any(variances <= 0):
        raise ValueError("all coordinate variances must be positive")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    sigmas = np.sqrt(variances)
    X = np.empty((n, variances.size))
    for j, s in enumerate(sigmas):
        col = s * rng.standard_normal(n)
        bad = np.abs(col) > 1.0
        while bad.any():
            col[bad] = s * rng.standard_normal(int(bad.sum()))
            bad = np.abs(col) > 1.0
        X[:, j] = col
    assert np.all(np.abs(X) <= 1.0)
    return X


def sparse_activation_probs(d: int, alpha: float) -> np.ndarray:
    """Per-coordinate activation probabilities i^(-alpha), i = 1..d."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    i = np.arange(1, d + 1, dtype=np.float64)
    return np.minimum(1.0, i ** (-float(alpha)))


def sample_sparse_product(n: int, probs: np.ndarray, seed: int) -> np.ndarray:
    """Sparse sign pool: coordinate i is +-1 with probability probs[i], else 0.

    Coordinates are independent, so the population covariance is exactly
    diag(probs): a diagonal power-law model when the probabilities decay
    polynomially. Deep directions are carried by few pool points, the
    regime where labeling by leverage differs most from uniform labeling.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if np.any(probs <= 0) or np.any(probs > 1):
        raise ValueError("activation probabilities must lie in (0, 1]")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    active = rng.random((n, probs.size)) < probs
    signs = rng.choice(np.array([-1.0, 1.0]), size=(n, probs.size))
    return active * signs


def truncated_normal_variance(sigma_sq: float) -> float:
    """Exact variance of N(0, sigma_sq) conditioned on [-1, 1]."""
    if sigma_sq <= 0:
        raise ValueError("sigma_sq must be positive")
    sigma = math.sqrt(sigma_sq)
    beta = 1.0 / sigma
    pdf = math.exp(-0.5 * beta * beta) / math.sqrt(2.0 * math.pi)
    mass = math.erf(beta / math.sqrt(2.0))
    return sigma_sq * (1.0 - 2.0 * beta * pdf / mass)


def truncnorm_population_spectrum(variances: np.ndarray) -> SpectrumModel:
    """Exact covariance spectrum of the truncated-normal product measure.

    The covariance is diagonal with the truncated variances, so the
    eigenvectors are coordinate axes ordered by decreasing variance.
    """
    variances = np.asarray(variances, dtype=np.float64)
    truncated = np.array([truncated_normal_variance(v) for v in variances])
    order = np.argsort(truncated)[::-1]
    d = variances.size
    vecs = np.eye(d)[:, order]
    return SpectrumModel(truncated[order].copy(), vecs)


def diagonal_spectrum(eigenvalues: np.ndarray) -> SpectrumModel:
    """Spectrum with the given (descending) eigenvalues on coordinate axes."""
    vals = np.asarray(eigenvalues, dtype=np.float64)
    if np.any(np.diff(vals) > 0):
        raise ValueError("eigenvalues must be nonincreasing")
    return SpectrumModel(vals.copy(), np.eye(vals.size))


def make_target(
    spectrum: SpectrumModel,
    seed: int,
    form: str = "inv_sqrt",
    r: float = 0.5,
    scale: float = 1.0,
) -> np.ndarray:
    """Random regression coefficients in feature space.

    inv_sqrt
        theta = sum_i a_i v_i / sqrt(lambda_i) with a_i ~ N(0, 1): equal
        expected energy in every eigendirection (theta' Sigma theta has
        mean equal to the number of directions). Every direction used must
        have a strictly positive eigenvalue.
    source_r
        theta = scale * sum_i lambda_i^(r - 1/2) a_i v_i: a target of
        smoothness r, smoother for larger r.
    """
    vals = spectrum.eigenvalues
    vecs = spectrum.eigenvectors
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    a = rng.standard_normal(vals.size)
    if form == "inv_sqrt":
        if np.any(vals <= 0):
            raise ValueError(
                "inv_sqrt target needs strictly positive eigenvalues; "
                "truncate the spectrum first"
            )
        coef = a / np.sqrt(vals)
    elif form == "source_r":
        if not (0 < r <= 1):
            raise ValueError(f"r must lie in (0, 1], got {r}")
        if np.any(vals <= 0):
            raise ValueError("source_r target needs strictly positive eigenvalues")
        coef = scale * vals ** (r - 0.5) * a
    else:
        raise ValueError(f"unknown target form {form!r}")
    return vecs @ coef


def labels(
    features: np.ndarray, theta: np.ndarray, sigma2: float, seed: int
) -> np.ndarray:
    """Noisy labels y = phi' theta + N(0, sigma2) noise; exact when sigma2 = 0."""
    F = np.asarray(features, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    if sigma2 < 0:
        raise ValueError("sigma2 must be nonnegative")
    clean = F @ theta
    if sigma2 == 0:
        return clean
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    return clean + math.sqrt(sigma2) * rng.standard_normal(clean.shape[0])
