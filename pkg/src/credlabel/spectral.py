"""Covariance spectra, ridge leverage scores, and effective dimension.

The leverage score of a pool point x at regularization lam is
phi(x)' (Sigma_N + lam I)^-1 phi(x): its contribution to the effective
dimension. The module computes these through a symmetric positive-definite
factorization (never an explicit inverse), exposes the exact-kernel path
through the Gram matrix, and provides the closed-form gradient-descent
filter polynomials used as test oracles elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

# Relative floor below which eigenvalues are treated as exact zeros.
EIG_CLAMP_REL = 1e-14

# Dense N x N solves beyond this size are refused.
GRAM_SIZE_GUARD = 20000


@dataclass(frozen=True)
class CovarianceModel:
    """Symmetric PSD second-moment matrix with its sample count.

    ``n_samples == 0`` marks an analytic population model rather than an
    empirical average.
    """

    feature_dim: int
    matrix: np.ndarray
    n_samples: int

    def __post_init__(self):
        m = self.matrix
        if m.shape != (self.feature_dim, self.feature_dim):
            raise ValueError(f"matrix shape {m.shape} != ({self.feature_dim},) * 2")
        scale = float(np.max(np.abs(m))) if m.size else 0.0
        if scale > 0 and float(np.max(np.abs(m - m.T))) > 1e-12 * scale:
            raise ValueError("covariance matrix is not symmetric to 1e-12")
        m.setflags(write=False)


@dataclass(frozen=True)
class SpectrumModel:
    """Descending eigenvalues and orthonormal eigenvectors of a covariance."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)
        self.eigenvectors.setflags(write=False)

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.eigenvalues > 0))

    def truncated(self, rel_cutoff: float) -> "SpectrumModel":
        """Keep only directions with eigenvalue > rel_cutoff * max eigenvalue."""
        if self.eigenvalues.size == 0:
            return self
        keep = self.eigenvalues > rel_cutoff * self.eigenvalues[0]
        return SpectrumModel(
            self.eigenvalues[keep].copy(), self.eigenvectors[:, keep].copy()
        )


def empirical_covariance(features: np.ndarray) -> CovarianceModel:
    """(1/N) F'F for an N x d feature matrix."""
    F = np.asarray(features, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] < 1:
        raise ValueError("features must be a nonempty N x d matrix")
    n, d = F.shape
    m = (F.T @ F) / n
    m = (m + m.T) / 2.0
    return CovarianceModel(d, m, n)


def population_covariance(matrix: np.ndarray) -> CovarianceModel:
    """Wrap an analytic covariance matrix (no sample count)."""
    m = np.asarray(matrix, dtype=np.float64).copy()
    return CovarianceModel(m.shape[0], (m + m.T) / 2.0, 0)


def eigendecompose(cov: CovarianceModel) -> SpectrumModel:
    """Descending eigen-system of the covariance.

    Eigenvalues below EIG_CLAMP_REL times the largest are clamped to zero
    so the spectrum is PSD despite finite precision.
    """
    vals, vecs = np.linalg.eigh(cov.matrix)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    if vals.size and vals[0] > 0:
        vals = np.where(vals < EIG_CLAMP_REL * vals[0], 0.0, vals)
    else:
        vals = np.zeros_like(vals)
    return SpectrumModel(vals, vecs)


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not lam > 0:
        raise ValueError(f"regularization must be positive, got {lam}")
    return lam


def leverage_scores(
    cov: CovarianceModel, features: np.ndarray, lam: float
) -> np.ndarray:
    """Per-point scores phi_j' (Sigma + lam I)^-1 phi_j.

    Computed by a Cholesky solve of the shifted covariance; each score lies
    in [0, ||phi_j||^2 / lam].
    """
    lam = _check_lambda(lam)
    F = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if F.shape[1] != cov.feature_dim:
        raise ValueError(
            f"features have {F.shape[1]} columns, covariance is {cov.feature_dim}-dimensional"
        )
    shifted = cov.matrix + lam * np.eye(cov.feature_dim)
    factor = cho_factor(shifted, lower=True, check_finite=False)
    solved = cho_solve(factor, F.T, check_finite=False)
    scores = np.einsum("dn,dn->n", F.T, solved)
    return np.maximum(scores, 0.0)


def leverage_scores_from_spectrum(
    spectrum: SpectrumModel, features: np.ndarray, lam: float
) -> np.ndarray:
    """Same scores via a precomputed eigen-system; cheap across many lam."""
    lam = _check_lambda(lam)
    F = np.atleast_2d(np.asarray(features, dtype=np.float64))
    proj = F @ spectrum.eigenvectors
    return (proj**2) @ (1.0 / (spectrum.eigenvalues + lam))


def leverage_scores_gram(gram: np.ndarray, lam: float) -> np.ndarray:
    """Leverage scores from an N x N kernel Gram matrix.

    Uses the push-through identity: the j-th score equals
    [G (G/N + lam I)^-1]_jj, which matches the explicit-feature path
    whenever the kernel admits one. Dense O(N^3); refuses N beyond
    GRAM_SIZE_GUARD. For modest N the Gram is checked for positive
    semidefiniteness explicitly; for larger N an indefinite input
    surfaces as a factorization failure.
    """
    lam = _check_lambda(lam)
    G = np.asarray(gram, dtype=np.float64)
    n = G.shape[0]
    if G.shape != (n, n):
        raise ValueError("gram matrix must be square")
    if n > GRAM_SIZE_GUARD:
        raise ValueError(f"gram path limited to N <= {GRAM_SIZE_GUARD}, got {n}")
    scale = float(np.max(np.abs(G))) if n else 0.0
    if scale > 0 and float(np.max(np.abs(G - G.T))) > 1e-8 * scale:
        raise ValueError("gram matrix is not symmetric")
    if n <= 1000 and n > 0:
        min_eig = float(np.linalg.eigvalsh(G)[0])
        if min_eig < -1e-10 * max(scale, 1.0):
            raise ValueError(f"gram matrix is not PSD (min eigenvalue {min_eig:.3e})")
    try:
        factor = cho_factor(G / n + lam * np.eye(n), lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise ValueError("gram matrix is not PSD") from exc
    solved = cho_solve(factor, G, check_finite=False)
    return np.maximum(np.diag(solved).copy(), 0.0)


def effective_dimension(spectrum: SpectrumModel, lam: float) -> float:
    """sum_i lambda_i / (lambda_i + lam); the mean leverage score."""
    lam = _check_lambda(lam)
    vals = spectrum.eigenvalues
    return float(np.sum(vals / (vals + lam)))


def sup_leverage(cov: CovarianceModel, features: np.ndarray, lam: float) -> float:
    """Largest leverage score over the pool (empirical worst case)."""
    return float(np.max(leverage_scores(cov, features, lam)))


def trace_power(spectrum: SpectrumModel, alpha: float) -> float:
    """Tr(Sigma^(1/alpha)) from the eigenvalues."""
    if alpha <= 1:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    return float(np.sum(spectrum.eigenvalues ** (1.0 / alpha)))


def theory_bounds(
    spectrum: SpectrumModel, lam: float, alpha: float, kappa_sq: float
) -> tuple[float, float]:
    """Upper bounds (effective-dimension bound, sup-leverage bound).

    Returns (Tr(Sigma^(1/alpha)) * lam^(-1/alpha), kappa_sq / lam) where
    kappa_sq is the largest squared feature norm over the pool.
    """
    lam = _check_lambda(lam)
    if alpha <= 1:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    n_bound = trace_power(spectrum, alpha) * lam ** (-1.0 / alpha)
    f_bound = float(kappa_sq) / lam
    return n_bound, f_bound


def fit_decay_exponent(spectrum: SpectrumModel, rel_cutoff: float = 1e-12) -> float:
    """Diagnostic least-squares slope of log eigenvalue vs log index.

    Returns the estimated decay exponent (positive for decaying spectra).
    Never used by the labeling algorithm itself.
    """
    vals = spectrum.eigenvalues
    keep = vals > rel_cutoff * vals[0] if vals.size else np.zeros(0, bool)
    vals = vals[keep]
    if vals.size < 2:
        raise ValueError("need at least two positive eigenvalues to fit a decay")
    x = np.log(np.arange(1, vals.size + 1, dtype=np.float64))
    y = np.log(vals)
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)


def spectral_filters(eta: float, t: int, x) -> tuple[np.ndarray, np.ndarray]:
    """Gradient-descent filter polynomials (p_t, r_t) at points x.

    p_t(x) = eta * sum_{k=0}^{t} (1 - eta x)^k, evaluated in closed form as
    (1 - (1 - eta x)^(t+1)) / x for x > 0 and eta (t+1) at x = 0;
    r_t(x) = 1 - x p_t(x) = (1 - eta x)^(t+1). Requires 0 <= x < 1/eta.
    """
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0) or np.any(x >= 1.0 / eta):
        raise ValueError("filter arguments must lie in [0, 1/eta)")
    # exp/log1p keeps (1 - eta x)^(t+1) accurate when eta*x is tiny.
    log_decay = (t + 1) * np.log1p(-eta * x)
    r = np.exp(log_decay)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = -np.expm1(log_decay) / x
    p = np.where(x == 0.0, eta * (t + 1), p)
    if p.ndim == 0:
        return float(p), float(r)
    return p, r


def gd_filter_apply(
    A: np.ndarray, b: np.ndarray, eta: float, T: int
) -> np.ndarray:
    """p_{T-1}(A) b through A's eigen-system: the exact T-step GD iterate.

    Equals running ``g <- g - eta (A g - b)`` from zero for T steps on a
    PSD matrix, without iterating; used both as a test oracle and as the
    solver for very large T.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    vals, vecs = np.linalg.eigh(np.asarray(A, dtype=np.float64))
    vals = np.maximum(vals, 0.0)
    p, _ = spectral_filters(eta, T - 1, vals)
    return vecs @ (np.asarray(p) * (vecs.T @ b))
