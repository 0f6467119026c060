"""Population-level scores comparing a real embedding set against a generated one.

Three entropy-based scores share a common zero point (identical
distributions score 0 on all three):

    pce  fidelity: cross-entropy of generated under real minus the real
         set's entropy; rises when generated points sit in low-density
         regions of the real distribution
    rce  inter-class recall: cross-entropy of real under generated minus
         the real entropy; rises when real modes go uncovered
    re   intra-class recall: generated entropy minus real entropy; falls
         when generated points cluster tighter than the real data

Alongside them: Density and Coverage (counts of generated points inside
real kNN balls), their thresholded generalizations pc and rc (at least k'
opposite-set points inside each k-ball, k = C * k'), and the Fréchet
distance between moment-matched Gaussians.

Every kNN score exposes per-sample contributions whose mean equals the
reported value, so any labeling of the attributed set partitions the
score exactly (see mode_report). audit ranks generated samples by their
fidelity contribution and flags near-duplicates of real rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingSet, LabeledSet, PairedInput
from .estimators import (
    ZERO_DISTANCE_CLAMP,
    EstimatorParams,
    cross_entropy_knn,
    entropy_knn,
)
from .knn import NeighborIndex, ball_counts, build_index, kth_distances, nearest_rows

DEFAULT_K = 5
DEFAULT_PRC = (15, 5)
DEFAULT_MEMORIZATION_THRESHOLD = -5.0
DEFAULT_METRICS = ("pce", "rce", "re", "density", "coverage", "pc", "rc", "fd")


class NumericError(RuntimeError):
    """A numeric precondition failed (e.g., a covariance is not PSD)."""


@dataclass(frozen=True)
class MetricReport:
    """One metric's value plus its per-sample dissection.

    per_sample, when present, has mean equal to value; attributed_set
    names the set (real or generated) its entries index. notes document
    any normalization applied to per_sample entries.
    """

    metric_id: str
    value: float
    per_sample: np.ndarray | None
    attributed_set: str | None
    params_used: EstimatorParams
    n_real: int
    n_gen: int
    warnings: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class AuditResult:
    """Per-generated-sample fidelity audit.

    ranked lists generated row indices by ascending contribution (most
    suspicious first). flags holds the subset in memorization tier: the
    contribution falls below the threshold AND the nearest real row lies
    within the degeneracy clamp distance. Strongly negative contributions
    alone occur for ordinary in-distribution samples at small k, so the
    distance conjunct pins flags to actual near-duplicates; contributions
    below zero without a near-duplicate form the softer warn tier.
    """

    ranked: np.ndarray
    flags: np.ndarray
    nearest_real: dict
    contributions: np.ndarray
    nearest_index: np.ndarray
    nearest_distance: np.ndarray
    threshold: float
    k: int

    def tier_of(self, row: int) -> str:
        if row in self.nearest_real:
            return "memorized"
        if self.contributions[row] < 0.0:
            return "warn"
        return "ok"


@dataclass(frozen=True)
class ModeReport:
    """Per-class breakdown of one metric's per-sample contributions."""

    metric_id: str
    attributed_set: str
    global_value: float
    per_class: dict


def _report(metric_id, per_sample, attributed, params, inp, warnings=(), notes=()):
    return MetricReport(
        metric_id=metric_id,
        value=float(np.mean(per_sample)),
        per_sample=per_sample,
        attributed_set=attributed,
        params_used=params,
        n_real=inp.real.n,
        n_gen=inp.generated.n,
        warnings=tuple(warnings),
        notes=tuple(notes),
    )


def pce(
    input: PairedInput,
    k: int = DEFAULT_K,
    index_real: NeighborIndex | None = None,
) -> MetricReport:
    """Fidelity score: CE(generated, real) minus the real set's entropy.

    per_sample is attributed to generated rows; a strongly negative entry
    marks a generated point implausibly close to real data.
    """
    h = entropy_knn(input.real, k, index=index_real)
    ce = cross_entropy_knn(input.generated, input.real, k, index=index_real)
    per = ce.per_sample - h.value
    return _report("pce", per, "generated", EstimatorParams(k=k), input,
                   warnings=h.warnings + ce.warnings)


def rce(
    input: PairedInput,
    k: int = DEFAULT_K,
    index_real: NeighborIndex | None = None,
    index_gen: NeighborIndex | None = None,
) -> MetricReport:
    """Inter-class recall score: CE(real, generated) minus the real entropy.

    per_sample is attributed to real rows; large entries mark real
    regions the generated set fails to reach.
    """
    h = entropy_knn(input.real, k, index=index_real)
    ce = cross_entropy_knn(input.real, input.generated, k, index=index_gen)
    per = ce.per_sample - h.value
    return _report("rce", per, "real", EstimatorParams(k=k), input,
                   warnings=h.warnings + ce.warnings)


def re(
    input: PairedInput,
    k: int = DEFAULT_K,
    index_real: NeighborIndex | None = None,
    index_gen: NeighborIndex | None = None,
) -> MetricReport:
    """Intra-class recall score: generated entropy minus real entropy.

    Negative values mean the generated set is tighter than the real one;
    per_sample is attributed to generated rows.
    """
    h_r = entropy_knn(input.real, k, index=index_real)
    h_g = entropy_knn(input.generated, k, index=index_gen)
    per = h_g.per_sample - h_r.value
    return _report("re", per, "generated", EstimatorParams(k=k), input,
                   warnings=h_r.warnings + h_g.warnings)


def _real_ball_gen_counts(input, k, index_real, index_gen):
    """Counts of generated points inside each real row's kNN ball.

    Radii are real-set kth-neighbor distances with the center excluded;
    balls are closed.
    """
    if input.real.n < k + 1:
        raise ValueError(f"k={k} needs at least {k + 1} real samples, got {input.real.n}")
    ir = index_real if index_real is not None else build_index(input.real)
    ig = index_gen if index_gen is not None else build_index(input.generated)
    radii = kth_distances(ir, k, queries=None, exclude_self=True)
    return ball_counts(ig, input.real.data, radii)


def density(
    input: PairedInput,
    k: int = DEFAULT_K,
    index_real: NeighborIndex | None = None,
    index_gen: NeighborIndex | None = None,
) -> MetricReport:
    """Generated mass inside real kNN balls, normalized to 1 in expectation.

    The value is the total generated-in-ball count over k * N_G. Each
    per_sample entry is one real ball's count scaled by N_R / (k * N_G)
    so the entries average to the value; multiply by N_G / N_R to recover
    a ball's raw count / k.
    """
    counts = _real_ball_gen_counts(input, k, index_real, index_gen)
    per = counts * (input.real.n / (k * input.generated.n))
    return _report("density", per, "real", EstimatorParams(k=k), input,
                   notes=("per-sample entries are ball counts scaled by "
                          "N_R/(k*N_G); their mean equals the value",))


def coverage(
    input: PairedInput,
    k: int = DEFAULT_K,
    index_real: NeighborIndex | None = None,
    index_gen: NeighborIndex | None = None,
) -> MetricReport:
    """Fraction of real kNN balls containing at least one generated point."""
    counts = _real_ball_gen_counts(input, k, index_real, index_gen)
    per = (counts >= 1).astype(np.float64)
    return _report("coverage", per, "real", EstimatorParams(k=k), input)


def pc(
    input: PairedInput,
    k: int = DEFAULT_PRC[0],
    k_prime: int = DEFAULT_PRC[1],
    index_real: NeighborIndex | None = None,
    index_gen: NeighborIndex | None = None,
) -> MetricReport:
    """Precision coverage: fraction of generated kNN balls holding >= k' real points.

    k must be an integer multiple of k' (the multiplicity C = k / k').
    """
    C = _check_prc(k, k_prime)
    if input.generated.n < k + 1:
        raise ValueError(f"k={k} needs at least {k + 1} generated samples, got {input.generated.n}")
    ig = index_gen if index_gen is not None else build_index(input.generated)
    ir = index_real if index_real is not None else build_index(input.real)
    radii = kth_distances(ig, k, queries=None, exclude_self=True)
    counts = ball_counts(ir, input.generated.data, radii)
    per = (counts >= k_prime).astype(np.float64)
    return _report("pc", per, "generated", EstimatorParams(k=k, C=C), input)


def rc(
    input: PairedInput,
    k: int = DEFAULT_PRC[0],
    k_prime: int = DEFAULT_PRC[1],
    index_real: NeighborIndex | None = None,
    index_gen: NeighborIndex | None = None,
) -> MetricReport:
    """Recall coverage: fraction of real kNN balls holding >= k' generated points.

    rc(input, k, 1) coincides with coverage(input, k) exactly.
    """
    C = _check_prc(k, k_prime)
    counts = _real_ball_gen_counts(input, k, index_real, index_gen)
    per = (counts >= k_prime).astype(np.float64)
    return _report("rc", per, "real", EstimatorParams(k=k, C=C), input)


def _check_prc(k: int, k_prime: int) -> int:
    if k_prime < 1:
        raise ValueError(f"k' must be >= 1, got {k_prime}")
    if k % k_prime != 0:
        raise ValueError(f"k must be an integer multiple of k'; got k={k}, k'={k_prime}")
    return k // k_prime


def frechet_distance(input: PairedInput) -> MetricReport:
    """Fréchet distance between moment-matched Gaussians of the two sets.

    Means and unbiased (n-1) covariances are fitted per set; the matrix
    square root comes from the eigendecomposition of the symmetrized
    product. Eigenvalues below -1e-8 raise NumericError; small negatives
    are clamped to zero.
    """
    R, G = input.real, input.generated
    if R.n < 2 or G.n < 2:
        raise ValueError("Fréchet distance needs at least 2 samples per set")
    mu_r = R.data.mean(axis=0)
    mu_g = G.data.mean(axis=0)
    S_r = np.atleast_2d(np.cov(R.data, rowvar=False, ddof=1))
    S_g = np.atleast_2d(np.cov(G.data, rowvar=False, ddof=1))
    root_r = _psd_sqrt(S_r, "real covariance")
    M = root_r @ S_g @ root_r
    M = 0.5 * (M + M.T)
    lam = np.linalg.eigvalsh(M)
    if lam.min() < -1e-8:
        raise NumericError(f"cross-covariance product has eigenvalue {lam.min():g} < -1e-8")
    lam = np.clip(lam, 0.0, None)
    diff = mu_r - mu_g
    value = float(diff @ diff + np.trace(S_r) + np.trace(S_g) - 2.0 * np.sum(np.sqrt(lam)))
    return MetricReport(
        metric_id="fd",
        value=value,
        per_sample=None,
        attributed_set=None,
        params_used=EstimatorParams(),
        n_real=R.n,
        n_gen=G.n,
    )


def _psd_sqrt(S: np.ndarray, what: str) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (S + S.T))
    if vals.min() < -1e-8:
        raise NumericError(f"{what} has eigenvalue {vals.min():g} < -1e-8")
    vals = np.clip(vals, 0.0, None)
    root = (vecs * np.sqrt(vals)) @ vecs.T
    return 0.5 * (root + root.T)


def audit(
    input: PairedInput,
    k: int = 1,
    memorization_threshold: float = DEFAULT_MEMORIZATION_THRESHOLD,
    index_real: NeighborIndex | None = None,
) -> AuditResult:
    """Rank generated samples by fidelity contribution and flag near-copies.

    Returns every generated row ranked by ascending per-sample pce
    contribution. A row lands in the memorization tier (flags) only when
    its contribution is below the threshold and its nearest real neighbor
    is within the degeneracy clamp distance; k defaults to 1 because the
    first-neighbor distance of an exact copy is what collapses to zero.
    """
    ir = index_real if index_real is not None else build_index(input.real)
    report = pce(input, k, index_real=ir)
    per = report.per_sample
    ranked = np.argsort(per, kind="stable")
    nearest_idx, nearest_dist = nearest_rows(ir, input.generated.data)
    mem = (per < memorization_threshold) & (nearest_dist <= ZERO_DISTANCE_CLAMP)
    flags = ranked[mem[ranked]]
    nearest_real = {int(i): (int(nearest_idx[i]), float(nearest_dist[i])) for i in flags}
    return AuditResult(
        ranked=ranked,
        flags=flags,
        nearest_real=nearest_real,
        contributions=per,
        nearest_index=nearest_idx,
        nearest_distance=nearest_dist,
        threshold=memorization_threshold,
        k=k,
    )


_MODE_METRICS = {"pce": pce, "rce": rce, "re": re}


def mode_report(real: LabeledSet, gen: LabeledSet, metric: str, k: int = DEFAULT_K) -> ModeReport:
    """Per-class means of a metric's per-sample contributions.

    metric is one of pce, rce, re. Contributions are grouped by the
    labels of the set the metric attributes them to; the count-weighted
    mean of the class means reproduces the global value.
    """
    if metric not in _MODE_METRICS:
        raise ValueError(f"metric must be one of {sorted(_MODE_METRICS)}, got {metric!r}")
    inp = PairedInput(real.embeddings, gen.embeddings)
    report = _MODE_METRICS[metric](inp, k)
    labels = gen.labels if report.attributed_set == "generated" else real.labels
    per = report.per_sample
    per_class = {}
    for cls in sorted(set(labels.tolist())):
        mask = labels == cls
        per_class[cls] = (int(mask.sum()), float(np.mean(per[mask])))
    return ModeReport(
        metric_id=metric,
        attributed_set=report.attributed_set,
        global_value=report.value,
        per_class=per_class,
    )


def evaluate(
    input: PairedInput,
    metrics=DEFAULT_METRICS,
    k: int = DEFAULT_K,
    prc: tuple[int, int] = DEFAULT_PRC,
) -> dict:
    """Compute a selection of metrics, sharing one index per set.

    metrics is an iterable of metric ids from DEFAULT_METRICS; prc is the
    (k, k') pair used by pc and rc. Returns {metric_id: MetricReport} in
    the requested order.
    """
    names = list(metrics)
    unknown = [m for m in names if m not in DEFAULT_METRICS]
    if unknown:
        raise ValueError(f"unknown metric(s) {unknown}; choose from {list(DEFAULT_METRICS)}")
    ir = build_index(input.real)
    ig = build_index(input.generated)
    out = {}
    for name in names:
        if name == "pce":
            out[name] = pce(input, k, index_real=ir)
        elif name == "rce":
            out[name] = rce(input, k, index_real=ir, index_gen=ig)
        elif name == "re":
            out[name] = re(input, k, index_real=ir, index_gen=ig)
        elif name == "density":
            out[name] = density(input, k, index_real=ir, index_gen=ig)
        elif name == "coverage":
            out[name] = coverage(input, k, index_real=ir, index_gen=ig)
        elif name == "pc":
            out[name] = pc(input, prc[0], prc[1], index_real=ir, index_gen=ig)
        elif name == "rc":
            out[name] = rc(input, prc[0], prc[1], index_real=ir, index_gen=ig)
        elif name == "fd":
            out[name] = frechet_distance(input)
    return out
