"""Nearest-neighbor estimators of entropy, cross-entropy, and Rényi divergence.

Every estimator turns kth-neighbor distances or ball-count ratios into an
information quantity, always in nats. The entropy of a set X is estimated
from each row's distance D to its kth-nearest neighbor within X (self
excluded):

    H_k(X) = mean_i log((N_X - 1) * exp(-psi(k)) * c_d * D_i**d)

where psi is the digamma function and c_d the unit-ball volume in R^d.
Cross-entropy CE_k(X, Y) is the same with distances measured into Y, a
factor N_Y instead, and no self-exclusion.

The Rényi J statistic compares two sets through the balls around each row
of Y whose radius reaches the kth-nearest neighbor in the union of both
sets; J_variant exposes the alternative ball and denominator conventions:

    union-ball  balls over the union, count ratio #X / (#Y + 1)
    self-ball   balls within Y only, ratio #X / #Y
    plus-one    balls within Y only, ratio #X / (#Y + 1)
    sigmoid     plus-one ratios pushed through a steep sigmoid with
                threshold eta / C, a smooth stand-in for an indicator

All variants scale by eta**alpha / N_Y with eta = N_Y / N_X.

A zero kth-neighbor distance (an exact duplicate row) is clamped to 1e-12
and recorded as a warning on the result instead of erroring; duplicates
then surface as strongly negative per-sample terms, which downstream
auditing relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .embeddings import EmbeddingSet
from .knn import (
    NeighborIndex,
    ball_counts,
    build_index,
    kth_distances,
    union_ball_stats,
)

ZERO_DISTANCE_CLAMP = 1e-12

VARIANTS = ("union-ball", "self-ball", "plus-one", "sigmoid")


@dataclass(frozen=True)
class EstimatorParams:
    """Every estimator knob in one place.

    k is the neighbor order. C is the coverage multiplicity tying a ball
    order k to a count threshold k' = k / C; it also sets the sigmoid
    variant's soft threshold eta / C. theta is the sigmoid steepness.
    alpha may stay None when the call site supplies it explicitly.
    """

    k: int = 5
    alpha: float | None = None
    theta: float = 50.0
    C: int = 3
    variant: str = "union-ball"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.theta <= 0:
            raise ValueError(f"theta must be > 0, got {self.theta}")
        if self.C < 1:
            raise ValueError(f"C must be >= 1, got {self.C}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")


@dataclass(frozen=True)
class EstimateValue:
    """One estimator output: value in nats plus bookkeeping.

    per_sample holds the per-row terms whose mean is the value; n_used
    records the sample counts that entered the estimate.
    """

    value: float
    n_used: tuple[int, ...]
    warnings: tuple[str, ...] = ()
    per_sample: np.ndarray | None = None


def digamma(z):
    """Digamma function for z > 0, accurate to 1e-10 absolute.

    Small arguments are lifted with psi(z) = psi(z + 1) - 1/z until the
    asymptotic series applies.
    """
    arr = np.asarray(z, dtype=np.float64)
    if np.any(arr <= 0):
        raise ValueError("digamma requires z > 0")
    scalar = arr.ndim == 0
    x = np.atleast_1d(arr).copy()
    acc = np.zeros_like(x)
    while True:
        small = x < 8.0
        if not small.any():
            break
        acc[small] -= 1.0 / x[small]
        x[small] += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    tail = inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 / 240)))
    out = acc + np.log(x) - 0.5 * inv - tail
    return float(out[0]) if scalar else out.reshape(arr.shape)


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in R^d."""
    return math.exp(log_unit_ball_volume(d))


def log_unit_ball_volume(d: int) -> float:
    """log of the unit-ball volume, stable for large d."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return 0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1.0)


def _log_clamped(dist: np.ndarray) -> tuple[np.ndarray, tuple[str, ...]]:
    n_zero = int(np.count_nonzero(dist == 0.0))
    if n_zero:
        dist = np.where(dist == 0.0, ZERO_DISTANCE_CLAMP, dist)
        plural = "s" if n_zero != 1 else ""
        warns = (f"{n_zero} zero kth-neighbor distance{plural} clamped to "
                 f"{ZERO_DISTANCE_CLAMP:g}",)
        return np.log(dist), warns
    return np.log(dist), ()


def entropy_knn(X: EmbeddingSet, k: int, index: NeighborIndex | None = None) -> EstimateValue:
    """kNN entropy estimate of X in nats.

    index, when given, must be built over X; passing one lets callers
    share it across estimators.
    """
    if X.n < k + 1:
        raise ValueError(f"entropy with k={k} needs at least {k + 1} samples, got {X.n}")
    idx = index if index is not None else build_index(X)
    dist = kth_distances(idx, k, queries=None, exclude_self=True)
    log_d, warns = _log_clamped(dist)
    const = math.log(X.n - 1) - digamma(k) + log_unit_ball_volume(X.d)
    terms = const + X.d * log_d
    return EstimateValue(float(np.mean(terms)), (X.n,), warns, terms)


def cross_entropy_knn(
    X: EmbeddingSet,
    Y: EmbeddingSet,
    k: int,
    index: NeighborIndex | None = None,
) -> EstimateValue:
    """kNN cross-entropy estimate CE(X, Y) in nats.

    Distances run from each row of X to its kth neighbor in Y with no
    self-exclusion: the sets are treated as distinct samples. index, when
    given, must be built over Y.
    """
    if X.d != Y.d:
        raise ValueError(f"dimension mismatch: X d={X.d}, Y d={Y.d}")
    if Y.n < k:
        raise ValueError(f"cross-entropy with k={k} needs at least {k} samples in Y, got {Y.n}")
    idx = index if index is not None else build_index(Y)
    dist = kth_distances(idx, k, queries=X.data, exclude_self=False)
    log_d, warns = _log_clamped(dist)
    const = math.log(Y.n) - digamma(k) + log_unit_ball_volume(X.d)
    terms = const + X.d * log_d
    return EstimateValue(float(np.mean(terms)), (X.n, Y.n), warns, terms)


def renyi_J_hat(
    X: EmbeddingSet,
    Y: EmbeddingSet,
    alpha: float,
    k: int,
    index_x: NeighborIndex | None = None,
    index_y: NeighborIndex | None = None,
) -> EstimateValue:
    """Rényi J statistic from union-ball count ratios.

    For each row of Y, the ball reaches its kth neighbor in X union Y
    (the row itself excluded); the term is (#X-in-ball / (#Y-in-ball + 1))
    raised to alpha. The value is eta**alpha / N_Y times the term sum.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if X.d != Y.d:
        raise ValueError(f"dimension mismatch: X d={X.d}, Y d={Y.d}")
    ix = index_x if index_x is not None else build_index(X)
    iy = index_y if index_y is not None else build_index(Y)
    _, counts_x, counts_y = union_ball_stats(ix, iy, k)
    eta = Y.n / X.n
    ratios = counts_x / (counts_y + 1.0)
    terms = eta ** alpha * ratios ** alpha
    return EstimateValue(float(np.mean(terms)), (X.n, Y.n), (), terms)


def renyi_divergence_hat(
    X: EmbeddingSet,
    Y: EmbeddingSet,
    alpha: float,
    k: int,
    index_x: NeighborIndex | None = None,
    index_y: NeighborIndex | None = None,
) -> EstimateValue:
    """Rényi divergence of order alpha from the J statistic.

    alpha must differ from 1 (the formula divides by alpha - 1). A zero J
    leaves the divergence undefined; it is reported as +inf with a warning
    rather than raising.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if alpha == 1:
        raise ValueError("alpha=1 is not defined for this divergence form")
    j = renyi_J_hat(X, Y, alpha, k, index_x, index_y)
    if j.value == 0.0:
        warns = j.warnings + ("J statistic is 0; divergence reported as +inf",)
        return EstimateValue(math.inf, j.n_used, warns, None)
    value = math.log(j.value) / (alpha - 1.0)
    return EstimateValue(value, j.n_used, j.warnings, None)


def J_variant(
    X: EmbeddingSet,
    Y: EmbeddingSet,
    alpha: float,
    params: EstimatorParams,
    index_x: NeighborIndex | None = None,
    index_y: NeighborIndex | None = None,
) -> EstimateValue:
    """J statistic under a selectable ball and denominator convention.

    See the module docstring for the four variants. All use balls
    centered on rows of Y with the center excluded from Y counts, closed
    boundaries, and the eta**alpha / N_Y scaling.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if X.d != Y.d:
        raise ValueError(f"dimension mismatch: X d={X.d}, Y d={Y.d}")
    if params.variant == "union-ball":
        return renyi_J_hat(X, Y, alpha, params.k, index_x, index_y)
    k = params.k
    if Y.n < k + 1:
        raise ValueError(f"self-ball variant with k={k} needs at least {k + 1} rows in Y, got {Y.n}")
    ix = index_x if index_x is not None else build_index(X)
    iy = index_y if index_y is not None else build_index(Y)
    radii = kth_distances(iy, k, queries=None, exclude_self=True)
    counts_x = ball_counts(ix, Y.data, radii)
    counts_y = ball_counts(iy, Y.data, radii, exclude_rows=np.arange(Y.n))
    if params.variant == "self-ball":
        ratios = counts_x / counts_y.astype(np.float64)
    else:
        ratios = counts_x / (counts_y + 1.0)
    eta = Y.n / X.n
    if params.variant == "sigmoid":
        terms = eta ** alpha * expit(params.theta * (ratios ** alpha - eta / params.C))
    else:
        terms = eta ** alpha * ratios ** alpha
    return EstimateValue(float(np.mean(terms)), (X.n, Y.n), (), terms)
