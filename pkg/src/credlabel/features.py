"""Explicit feature maps: linear-with-bias, Gaussian random Fourier
features, and randomly initialized ReLU networks.

All three realize a kernel as an inner product of finite-dimensional
feature vectors. The Gaussian map uses paired cosine/sine components so
every feature vector has unit norm exactly, which makes the feature-norm
bound kappa = 1 testable rather than asymptotic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

KINDS = ("linear", "rff_gaussian", "relu_net")


@dataclass(frozen=True)
class FeatureMap:
    """Frozen description of one feature map.

    ``params`` holds the random draws made at construction (frequencies for
    the Fourier map, layer weights for the ReLU net); they are read-only
    arrays so a map can be shared freely between threads.
    """

    kind: str
    input_dim: int
    feature_dim: int
    params: dict = field(repr=False)
    seed: int = 0

    def __post_init__(self):
        for arr in self.params.values():
            if isinstance(arr, np.ndarray):
                arr.setflags(write=False)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def build_feature_map(
    kind: str,
    input_dim: int,
    feature_dim: int | None = None,
    seed: int = 0,
    *,
    bandwidth: float = 1.0,
    n_hidden_layers: int = 3,
    hidden_bias: bool = False,
    fan_in_scaling: bool = False,
    weights_override: list | None = None,
) -> FeatureMap:
    """Construct a feature map of the requested kind.

    linear
        Raw coordinates plus a constant-1 bias column; ``feature_dim`` is
        forced to ``input_dim + 1``.
    rff_gaussian
        ``feature_dim`` must be even: ``feature_dim / 2`` frequencies are
        drawn from N(0, bandwidth^-2 I) and each contributes a cos/sin
        pair, scaled so that ||phi(x)||^2 == 1 for every x. Inner products
        estimate exp(-||x - x'||^2 / (2 bandwidth^2)).
    relu_net
        ``n_hidden_layers`` fully connected layers of width ``feature_dim``
        with i.i.d. standard normal weights and no output layer; the last
        hidden activation is the feature vector. No bias terms and no
        fan-in scaling unless the corresponding flags are set.

    ``weights_override`` (relu_net only) replaces the random layer weights;
    it exists for tests that need degenerate nets.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown feature map kind {kind!r}; expected one of {KINDS}")
    if input_dim < 1:
        raise ValueError(f"input_dim must be >= 1, got {input_dim}")

    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))

    if kind == "linear":
        out_dim = input_dim + 1
        if feature_dim is not None and feature_dim != out_dim:
            raise ValueError(
                f"linear maps have feature_dim = input_dim + 1 = {out_dim}, got {feature_dim}"
            )
        return FeatureMap(kind, input_dim, out_dim, {}, int(seed))

    if kind == "rff_gaussian":
        if feature_dim is None or feature_dim < 2:
            raise ValueError("rff_gaussian requires feature_dim >= 2")
        if feature_dim % 2 != 0:
            raise ValueError(
                f"rff_gaussian requires an even feature_dim (cos/sin pairs), got {feature_dim}"
            )
        if bandwidth <= 0:
            raise ValueError(f"bandwidth must be positive, got {bandwidth}")
        n_freq = feature_dim // 2
        omega = rng.standard_normal((n_freq, input_dim)) / bandwidth
        params = {"omega": _frozen(omega), "bandwidth": float(bandwidth)}
        return FeatureMap(kind, input_dim, feature_dim, params, int(seed))

    # relu_net: every hidden layer shares the output width
    if feature_dim is None:
        feature_dim = 500
    if feature_dim < 1:
        raise ValueError("relu_net requires feature_dim >= 1")
    width = feature_dim
    if weights_override is not None:
        weights = [np.asarray(w, dtype=np.float64) for w in weights_override]
        if len(weights) != n_hidden_layers:
            raise ValueError(
                f"weights_override must supply {n_hidden_layers} matrices, got {len(weights)}"
            )
    else:
        weights = []
        fan_in = input_dim
        for _ in range(n_hidden_layers):
            weights.append(rng.standard_normal((width, fan_in)))
            fan_in = width
    params = {
        "n_hidden_layers": int(n_hidden_layers),
        "hidden_bias": bool(hidden_bias),
        "fan_in_scaling": bool(fan_in_scaling),
    }
    if hidden_bias:
        params["biases"] = tuple(
            _frozen(rng.standard_normal(width)) for _ in range(n_hidden_layers)
        )
    for i, w in enumerate(weights):
        expect = (width, input_dim if i == 0 else width)
        if w.shape != expect:
            raise ValueError(f"layer {i} weights must have shape {expect}, got {w.shape}")
        params[f"w{i}"] = _frozen(w)
    return FeatureMap(kind, input_dim, feature_dim, params, int(seed))


def apply(fmap: FeatureMap, X: np.ndarray) -> np.ndarray:
    """Map raw inputs (N x input_dim) to feature vectors (N x feature_dim)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != fmap.input_dim:
        raise ValueError(
            f"expected {fmap.input_dim} input columns, got {X.shape[1]}"
        )

    if fmap.kind == "linear":
        return np.hstack([X, np.ones((X.shape[0], 1))])

    if fmap.kind == "rff_gaussian":
        proj = X @ fmap.params["omega"].T
        n_freq = proj.shape[1]
        scale = 1.0 / math.sqrt(n_freq)
        return scale * np.hstack([np.cos(proj), np.sin(proj)])

    h = X
    n_layers = fmap.params["n_hidden_layers"]
    for i in range(n_layers):
        pre = h @ fmap.params[f"w{i}"].T
        if fmap.params["fan_in_scaling"]:
            pre = pre / math.sqrt(h.shape[1])
        if fmap.params["hidden_bias"]:
            pre = pre + fmap.params["biases"][i]
        h = np.maximum(pre, 0.0)
    return h


def kernel_estimate(fmap: FeatureMap, x: np.ndarray, x_prime: np.ndarray) -> float:
    """Inner product <phi(x), phi(x')>, the map's kernel value."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    x_prime = np.asarray(x_prime, dtype=np.float64).reshape(1, -1)
    fx = apply(fmap, x)
    fy = apply(fmap, x_prime)
    return float(np.dot(fx[0], fy[0]))


def gaussian_kernel(x: np.ndarray, x_prime: np.ndarray, bandwidth: float) -> float:
    """Analytic Gaussian kernel exp(-||x-x'||^2 / (2 s^2)); oracle for the RFF map."""
    d = np.asarray(x, dtype=np.float64) - np.asarray(x_prime, dtype=np.float64)
    return float(np.exp(-float(d @ d) / (2.0 * bandwidth**2)))


def max_squared_norm(features: np.ndarray) -> float:
    """Largest squared row norm of a feature matrix (empirical kappa^2)."""
    features = np.asarray(features, dtype=np.float64)
    if features.size == 0:
        raise ValueError("empty feature matrix")
    return float(np.max(np.einsum("ij,ij->i", features, features)))
