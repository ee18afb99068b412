"""Estimators on a drawn labeling: bias-corrected gradient descent,
weighted ridge, the early-stopping schedule, and baselines.

Gradient descent runs on the weighted moments (A, b); stopping after T
steps is the regularizer, so ``gd_fit`` never early-stops on its own. The
weighted ridge solution (A + lam I)^-1 b is the analytic counterpart used
when T would be impractically large.
"""

from __future__ import annotations

import base64
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .labeling import LabelingPlan
from .spectral import empirical_covariance, eigendecompose, gd_filter_apply

METHODS = ("cred_gd", "uniform_gd", "weighted_ridge", "uniform_ridge", "sssl")


@dataclass(frozen=True)
class Estimator:
    """Feature-space weight vector plus the hyperparameters that made it."""

    w: np.ndarray
    method: str
    eta: float = 0.0
    T: int = 0
    lam: float = 0.0
    plan_ref: str = ""

    def __post_init__(self):
        if not np.all(np.isfinite(self.w)):
            raise ValueError("estimator weights must be finite")
        self.w.setflags(write=False)

    def to_json(self, weights_as_base64: bool = False) -> str:
        payload = {
            "method": self.method,
            "eta": self.eta,
            "T": self.T,
            "lambda": self.lam,
            "plan_ref": self.plan_ref,
        }
        if weights_as_base64:
            payload["w_base64"] = base64.b64encode(
                np.ascontiguousarray(self.w, dtype=np.float64).tobytes()
            ).decode("ascii")
            payload["w_dtype"] = "float64"
        else:
            payload["w"] = self.w.tolist()
        return json.dumps(payload)


@dataclass(frozen=True)
class ScheduleParams:
    """Inputs to the early-stopping schedule.

    sigma2: label noise variance; R: target norm scale; r in (0, 1]:
    target smoothness; alpha > 1: eigenvalue decay; trace_alpha:
    Tr(Sigma^(1/alpha)); n labeled / N unlabeled counts; kappa: feature
    norm bound; M: label bound.
    """

    sigma2: float
    R: float
    r: float
    alpha: float
    trace_alpha: float
    n: int
    N: float
    kappa: float
    M: float = 1.0

    def __post_init__(self):
        if not (0 < self.r <= 1):
            raise ValueError(f"r must lie in (0, 1], got {self.r}")
        if self.alpha <= 1:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")
        for name in ("R", "trace_alpha", "n", "N", "kappa", "M"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")


def weighted_moments(
    plan: LabelingPlan, features: np.ndarray, labels: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Empirical weighted second moment and cross-moment of the drawn labels.

    A = (1/n) sum_i w_i phi_i phi_i', b = (1/n) sum_i w_i y_i phi_i with
    w_i the plan's bias-correction weights.
    """
    F = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    idx = plan.indices
    if idx.min() < 0 or idx.max() >= F.shape[0]:
        raise IndexError("plan indices out of range for the feature matrix")
    if y.shape[0] != F.shape[0]:
        raise ValueError("labels must cover the whole pool")
    Fs = F[idx]
    ys = y[idx]
    n = idx.shape[0]
    coeff = plan.weights / n
    A = (Fs.T * coeff) @ Fs
    b = Fs.T @ (coeff * ys)
    return (A + A.T) / 2.0, b


def _spectral_norm_estimate(A: np.ndarray, iters: int = 30) -> float:
    rng = np.random.default_rng(0)
    v = rng.standard_normal(A.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = A @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        est = norm
        v = w / norm
    return float(est)


def gd_fit(
    A: np.ndarray,
    b: np.ndarray,
    eta: float,
    T: int,
    method: str = "cred_gd",
    plan_ref: str = "",
) -> Estimator:
    """T plain gradient-descent steps g <- g - eta (A g - b) from zero."""
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    lmax = _spectral_norm_estimate(A)
    if eta * lmax >= 1.0:
        warnings.warn(
            f"eta * lambda_max(A) = {eta * lmax:.3g} >= 1; gradient descent may diverge",
            RuntimeWarning,
            stacklevel=2,
        )
    g = np.zeros_like(b)
    for _ in range(T):
        g = g - eta * (A @ g - b)
    return Estimator(w=g, method=method, eta=eta, T=T, lam=0.0, plan_ref=plan_ref)


def gd_fit_spectral(
    A: np.ndarray,
    b: np.ndarray,
    eta: float,
    T: int,
    method: str = "cred_gd",
    plan_ref: str = "",
) -> Estimator:
    """Exact T-step GD iterate via the filter polynomial; O(d^3) not O(T d^2)."""
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    w = gd_filter_apply(np.asarray(A, float), np.asarray(b, float), eta, T)
    return Estimator(w=w, method=method, eta=eta, T=T, lam=0.0, plan_ref=plan_ref)


def ridge_fit(
    A: np.ndarray,
    b: np.ndarray,
    lam: float,
    method: str = "weighted_ridge",
    plan_ref: str = "",
) -> Estimator:
    """w = (A + lam I)^-1 b by Cholesky; lam = 0 only for full-rank A."""
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    shifted = A + lam * np.eye(A.shape[0]) if lam > 0 else A
    try:
        factor = cho_factor(shifted, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"system singular at lam={lam}; increase the regularization"
        ) from exc
    w = cho_solve(factor, b, check_finite=False)
    return Estimator(w=w, method=method, eta=0.0, T=0, lam=float(lam), plan_ref=plan_ref)


def default_step_size(features: np.ndarray) -> float:
    """eta = 1 / (2 max_j ||phi_j||^2): a safe constant for GD stability."""
    F = np.asarray(features, dtype=np.float64)
    kappa_sq = float(np.max(np.einsum("ij,ij->i", F, F)))
    if kappa_sq <= 0:
        raise ValueError("feature matrix has no nonzero rows")
    return 1.0 / (2.0 * kappa_sq)


def lambda_star(
    params: ScheduleParams, eta: float, log_factor: float | None = None
) -> tuple[float, int]:
    """Reference regularization level and matching iteration count.

    lam* = logf * [ (sigma2 Tr / n)^(alpha / (2 r alpha + 1))
                    + (R^2 Tr / n)^alpha + lam_N ]
    with every hidden constant set to one and logf = max(1, ln n) unless
    overridden; lam_N collects the finite-pool remainder terms and
    vanishes as N grows. T = ceil(1 / (eta lam*)). Exposed as a heuristic
    default: grid searches over the labeling regularization may override it.
    """
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    p = params
    logf = max(1.0, math.log(p.n)) if log_factor is None else float(log_factor)
    if logf <= 0:
        raise ValueError("log_factor must be positive")
    noise_term = (p.sigma2 * p.trace_alpha / p.n) ** (p.alpha / (2 * p.r * p.alpha + 1))
    source_term = (p.R**2 * p.trace_alpha / p.n) ** p.alpha
    pool_inner = (
        p.kappa**2 * p.sigma2
        + p.kappa**2 * p.M**2 / p.N
        + p.kappa ** (4 * p.r) * p.R**2 / p.N
    ) / (p.n * p.N)
    lam_N = (
        pool_inner ** (1.0 / (1.0 + 2.0 * p.r))
        + p.kappa**2 * p.R**2 / (p.n * p.N)
        + p.kappa * p.R / (math.sqrt(p.n) * p.N)
    )
    lam = logf * (noise_term + source_term + lam_N)
    if lam <= 0:
        raise ValueError("schedule produced a nonpositive regularization")
    T = int(math.ceil(1.0 / (eta * lam)))
    return lam, T


def lambda_pool_remainder(params: ScheduleParams) -> float:
    """The finite-pool term of the schedule alone (diagnostic)."""
    p = params
    pool_inner = (
        p.kappa**2 * p.sigma2
        + p.kappa**2 * p.M**2 / p.N
        + p.kappa ** (4 * p.r) * p.R**2 / p.N
    ) / (p.n * p.N)
    return (
        pool_inner ** (1.0 / (1.0 + 2.0 * p.r))
        + p.kappa**2 * p.R**2 / (p.n * p.N)
        + p.kappa * p.R / (math.sqrt(p.n) * p.N)
    )


def sssl_fit(
    pool_features: np.ndarray,
    plan: LabelingPlan,
    labels: np.ndarray,
    k: int,
    plan_ref: str = "",
    pool_spectrum=None,
) -> Estimator:
    """Least squares on the top-k covariance eigendirections of the pool.

    The unlabeled pool fixes the eigenbasis; the labeled subsample is
    projected onto the leading k directions and fit by ridge with a tiny
    conditioning term, then lifted back to feature space. Pass
    ``pool_spectrum`` to reuse an existing eigendecomposition of the pool
    covariance.
    """
    F = np.asarray(pool_features, dtype=np.float64)
    d = F.shape[1]
    if not (1 <= k <= d):
        raise ValueError(f"k must lie in [1, {d}], got {k}")
    if plan.scheme != "uniform":
        raise ValueError("this baseline expects a uniform labeling plan")
    spectrum = pool_spectrum
    if spectrum is None:
        spectrum = eigendecompose(empirical_covariance(F))
    Vk = spectrum.eigenvectors[:, :k]
    Fs = F[plan.indices] @ Vk
    ys = np.asarray(labels, dtype=np.float64)[plan.indices]
    n = Fs.shape[0]
    Ak = (Fs.T @ Fs) / n
    bk = Fs.T @ ys / n
    est = ridge_fit(Ak, bk, 1e-10, method="sssl", plan_ref=plan_ref)
    return Estimator(
        w=Vk @ est.w, method="sssl", eta=0.0, T=0, lam=1e-10, plan_ref=plan_ref
    )


def predict(est: Estimator, features: np.ndarray) -> np.ndarray:
    F = np.asarray(features, dtype=np.float64)
    if F.shape[1] != est.w.shape[0]:
        raise ValueError(
            f"features have {F.shape[1]} columns, estimator has {est.w.shape[0]}"
        )
    return F @ est.w


def rmse(est: Estimator, features: np.ndarray, labels: np.ndarray) -> float:
    y = np.asarray(labels, dtype=np.float64)
    pred = predict(est, features)
    if pred.shape != y.shape:
        raise ValueError("labels do not match prediction shape")
    return float(np.sqrt(np.mean((pred - y) ** 2)))
