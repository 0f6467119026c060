"""Synthetic ground truth: Gaussian specs, seeded samplers, failure transforms.

GaussianSpec and MixtureSpec describe distributions with closed-form
entropy, cross-entropy, and KL oracles. sample() draws seeded data from
them (numpy's default PCG64 generator, so identical (spec, n, seed)
reproduce bitwise across platforms), and three transforms emulate the
classic generative failure modes on a labeled sample:

    apply_mode_drop    remove whole classes (inter-class recall failure)
    apply_mode_shrink  contract each class toward its center by a factor
                       s (intra-class recall failure)
    apply_mode_invent  replace a fraction of rows with an off-support
                       Gaussian blob (fidelity failure)

run_sweep ties these to the metrics module: for each (level, seed) cell
it synthesizes a real/generated pair, evaluates the requested metrics,
and aggregates mean and standard deviation per level.

Specs serialize to JSON. A Gaussian is {"mean": [...], "cov": ...} where
cov may be a scalar (isotropic), a list (diagonal), or a nested list
(full matrix); a mixture is {"components": [{"mean": ..., "cov": ...,
"weight": ..., "label": ...}, ...]} with weights summing to 1 and labels
optional (component index by default).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingSet, LabeledSet, PairedInput, attach_labels
from .metrics import DEFAULT_K, DEFAULT_PRC, evaluate

INVENTED_INT_LABEL = -1
INVENTED_STR_LABEL = "invented"

SWEEP_KINDS = ("drop", "shrink", "invent", "sample-size")


def _as_cov(cov, d: int) -> np.ndarray:
    arr = np.asarray(cov, dtype=np.float64)
    if arr.ndim == 0:
        return float(arr) * np.eye(d)
    if arr.ndim == 1:
        if arr.shape[0] != d:
            raise ValueError(f"diagonal covariance has length {arr.shape[0]}, mean has d={d}")
        return np.diag(arr)
    if arr.ndim == 2:
        if arr.shape != (d, d):
            raise ValueError(f"covariance shape {arr.shape} does not match d={d}")
        return arr.copy()
    raise ValueError(f"covariance must be scalar, 1-D, or 2-D, got ndim={arr.ndim}")


@dataclass(frozen=True)
class GaussianSpec:
    """A multivariate normal with symmetric positive-definite covariance.

    cov accepts a scalar (sigma^2 * I), a 1-D diagonal, or a full matrix.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        if mean.shape[0] < 1:
            raise ValueError("mean must have at least one coordinate")
        cov = _as_cov(self.cov, mean.shape[0])
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        cov = 0.5 * (cov + cov.T)
        vals = np.linalg.eigvalsh(cov)
        if vals.min() <= 0:
            raise ValueError(f"covariance must be positive definite; smallest eigenvalue {vals.min():g}")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        chol = np.linalg.cholesky(cov)
        chol.setflags(write=False)
        object.__setattr__(self, "_chol", chol)

    @property
    def d(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class MixtureSpec:
    """A finite Gaussian mixture with per-component labels."""

    components: tuple
    weights: tuple
    labels: tuple = ()

    def __post_init__(self):
        comps = tuple(self.components)
        weights = tuple(float(w) for w in self.weights)
        if not comps:
            raise ValueError("mixture needs at least one component")
        if len(weights) != len(comps):
            raise ValueError(f"{len(comps)} components but {len(weights)} weights")
        if any(w <= 0 for w in weights):
            raise ValueError("all component weights must be > 0")
        total = math.fsum(weights)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"component weights sum to {total:g}, expected 1")
        labels = tuple(self.labels) if self.labels else tuple(range(len(comps)))
        if len(labels) != len(comps):
            raise ValueError(f"{len(comps)} components but {len(labels)} labels")
        if len(set(labels)) != len(labels):
            raise ValueError("component labels must be unique")
        d = comps[0].d
        for i, c in enumerate(comps):
            if c.d != d:
                raise ValueError(f"component {i} has d={c.d}, expected {d}")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "labels", labels)

    @property
    def d(self) -> int:
        return self.components[0].d


def gaussian_entropy(spec: GaussianSpec) -> float:
    """Differential entropy in nats: (1/2) ln((2 pi e)^d det cov)."""
    sign, logdet = np.linalg.slogdet(spec.cov)
    return 0.5 * (spec.d * math.log(2.0 * math.pi * math.e) + logdet)


def gaussian_cross_entropy(p: GaussianSpec, q: GaussianSpec) -> float:
    """Cross-entropy CE(p, q) in nats."""
    if p.d != q.d:
        raise ValueError(f"dimension mismatch: p d={p.d}, q d={q.d}")
    sign, logdet_q = np.linalg.slogdet(q.cov)
    qinv_p = np.linalg.solve(q.cov, p.cov)
    diff = p.mean - q.mean
    maha = float(diff @ np.linalg.solve(q.cov, diff))
    return 0.5 * (p.d * math.log(2.0 * math.pi) + logdet_q + np.trace(qinv_p) + maha)


def gaussian_kl(p: GaussianSpec, q: GaussianSpec) -> float:
    """KL divergence in nats, as cross-entropy minus entropy."""
    return gaussian_cross_entropy(p, q) - gaussian_entropy(p)


def sample(spec, n: int, seed) -> LabeledSet:
    """n seeded draws from a GaussianSpec or MixtureSpec.

    Mixture draws pick a component per row by weight, then transform
    standard normals through that component's Cholesky factor; labels
    record the component. Identical (spec, n, seed) give identical
    output. seed is anything numpy's default_rng accepts.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    if isinstance(spec, GaussianSpec):
        z = rng.standard_normal((n, spec.d))
        data = spec.mean + z @ spec._chol.T
        return attach_labels(EmbeddingSet(data), np.zeros(n, dtype=np.int64))
    if not isinstance(spec, MixtureSpec):
        raise TypeError(f"spec must be GaussianSpec or MixtureSpec, got {type(spec).__name__}")
    comp_idx = rng.choice(len(spec.components), size=n, p=np.asarray(spec.weights))
    data = np.empty((n, spec.d))
    for ci, comp in enumerate(spec.components):
        mask = comp_idx == ci
        count = int(mask.sum())
        if count == 0:
            continue
        z = rng.standard_normal((count, comp.d))
        data[mask] = comp.mean + z @ comp._chol.T
    labels = np.asarray(spec.labels)[comp_idx]
    return attach_labels(EmbeddingSet(data), labels)


def apply_mode_drop(set_: LabeledSet, drop) -> LabeledSet:
    """Remove all rows whose label is in drop, preserving survivor order."""
    drop = list(drop)
    vocab = set(set_.labels.tolist())
    unknown = [c for c in drop if c not in vocab]
    if unknown:
        raise ValueError(f"unknown class(es) in drop: {unknown}")
    if not drop:
        return set_
    keep = ~np.isin(set_.labels, drop)
    if not keep.any():
        raise ValueError("dropping all classes would leave an empty set")
    return attach_labels(EmbeddingSet(set_.embeddings.data[keep]), set_.labels[keep])


def _class_centers(set_: LabeledSet, centers) -> dict:
    if isinstance(centers, MixtureSpec):
        return {lab: comp.mean for lab, comp in zip(centers.labels, centers.components)}
    if isinstance(centers, dict):
        return {lab: np.asarray(v, dtype=np.float64) for lab, v in centers.items()}
    if centers == "empirical":
        out = {}
        for cls in set(set_.labels.tolist()):
            mask = set_.labels == cls
            out[cls] = set_.embeddings.data[mask].mean(axis=0)
        return out
    raise ValueError("centers must be 'empirical', a label->vector mapping, or a MixtureSpec")


def apply_mode_shrink(set_: LabeledSet, s: float, centers="empirical") -> LabeledSet:
    """Contract each row toward its class center: x -> center + s * (x - center).

    centers is 'empirical' (per-class sample means), a label-to-vector
    mapping, or a MixtureSpec whose component means are used by label.
    A single-sample class is its own empirical center.
    """
    if not 0.0 < s <= 1.0:
        raise ValueError(f"shrink factor must be in (0, 1], got {s}")
    lookup = _class_centers(set_, centers)
    missing = [c for c in set(set_.labels.tolist()) if c not in lookup]
    if missing:
        raise ValueError(f"no center provided for class(es): {sorted(missing)}")
    data = set_.embeddings.data.copy()
    for cls, center in lookup.items():
        mask = set_.labels == cls
        if mask.any():
            data[mask] = center + s * (data[mask] - center)
    return attach_labels(EmbeddingSet(data), set_.labels)


def apply_mode_invent(set_: LabeledSet, fraction: float, offset_scale: float, seed) -> LabeledSet:
    """Replace floor(fraction * n) rows with an off-support Gaussian blob.

    The blob is a unit-covariance Gaussian centered at the global mean
    plus offset_scale along a seeded random unit direction. Replaced rows
    take the reserved invented label (-1 for integer labels, 'invented'
    for strings).
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"fraction must be in [0, 1), got {fraction}")
    n = set_.embeddings.n
    m = int(fraction * n)
    if m == 0:
        return set_
    rng = np.random.default_rng(seed)
    data = set_.embeddings.data.copy()
    d = set_.embeddings.d
    direction = rng.standard_normal(d)
    direction /= np.linalg.norm(direction)
    center = data.mean(axis=0) + offset_scale * direction
    rows = rng.choice(n, size=m, replace=False)
    data[rows] = center + rng.standard_normal((m, d))
    labels = set_.labels.copy()
    if labels.dtype.kind in "iu":
        labels[rows] = INVENTED_INT_LABEL
    else:
        labels = labels.astype(object)
        labels[rows] = INVENTED_STR_LABEL
        labels = np.asarray(labels.tolist())
    return attach_labels(EmbeddingSet(data), labels)


@dataclass(frozen=True)
class SweepResult:
    """One sweep's aggregated series.

    axis holds the swept levels; series and dispersion map metric id to
    per-level mean and standard deviation across seeds; raw keeps the
    full (level, seed) value grid.
    """

    kind: str
    axis: tuple
    series: dict
    dispersion: dict
    seeds: tuple
    raw: dict


def _drop_components(spec: MixtureSpec, count: int) -> MixtureSpec:
    if count == 0:
        return spec
    if count >= len(spec.components):
        raise ValueError(f"cannot drop {count} of {len(spec.components)} components")
    order = sorted(range(len(spec.labels)), key=lambda i: str(spec.labels[i]))
    dropped = set(order[:count])
    keep = [i for i in range(len(spec.components)) if i not in dropped]
    weights = [spec.weights[i] for i in keep]
    total = math.fsum(weights)
    return MixtureSpec(
        components=tuple(spec.components[i] for i in keep),
        weights=tuple(w / total for w in weights),
        labels=tuple(spec.labels[i] for i in keep),
    )


def run_sweep(
    kind: str,
    levels,
    metrics,
    seeds,
    base_real,
    base_gen=None,
    n: int = 2000,
    k: int = DEFAULT_K,
    prc: tuple[int, int] = DEFAULT_PRC,
    offset_scale: float = 25.0,
) -> SweepResult:
    """Evaluate metrics over synthetic (level, seed) cells.

    kind selects what a level means: 'drop' counts mixture components
    removed from the generated side (sampled from the reduced mixture at
    full n); 'shrink' is the contraction factor applied to a generated
    sample, with spec means as centers; 'invent' is the replaced
    fraction; 'sample-size' is the per-set sample count, with base_gen
    (or base_real again) supplying the generated side. Real data always
    comes from base_real. Each cell is independently seeded and fully
    deterministic.
    """
    if kind not in SWEEP_KINDS:
        raise ValueError(f"kind must be one of {SWEEP_KINDS}, got {kind!r}")
    levels = list(levels)
    seeds = [int(s) for s in seeds]
    if not levels:
        raise ValueError("levels must be non-empty")
    if not seeds:
        raise ValueError("seeds must be non-empty")
    metrics = list(metrics)
    if kind == "drop" and not isinstance(base_real, MixtureSpec):
        raise ValueError("drop sweeps need a MixtureSpec base")
    raw = {m: np.empty((len(levels), len(seeds))) for m in metrics}
    for li, level in enumerate(levels):
        for si, seed in enumerate(seeds):
            if kind == "sample-size":
                n_cell = int(level)
                real = sample(base_real, n_cell, [seed, li, 0])
                gen = sample(base_gen if base_gen is not None else base_real,
                             n_cell, [seed, li, 1])
            elif kind == "drop":
                real = sample(base_real, n, [seed, li, 0])
                gen = sample(_drop_components(base_real, int(level)), n, [seed, li, 1])
            elif kind == "shrink":
                real = sample(base_real, n, [seed, li, 0])
                gen = sample(base_real, n, [seed, li, 1])
                centers = base_real if isinstance(base_real, MixtureSpec) else "empirical"
                gen = apply_mode_shrink(gen, float(level), centers=centers)
            else:
                real = sample(base_real, n, [seed, li, 0])
                gen = sample(base_real, n, [seed, li, 1])
                gen = apply_mode_invent(gen, float(level), offset_scale, [seed, li, 2])
            pair = PairedInput(real.embeddings, gen.embeddings)
            reports = evaluate(pair, metrics, k=k, prc=prc)
            for m in metrics:
                raw[m][li, si] = reports[m].value
    ddof = 1 if len(seeds) > 1 else 0
    series = {m: raw[m].mean(axis=1) for m in metrics}
    dispersion = {m: raw[m].std(axis=1, ddof=ddof) for m in metrics}
    return SweepResult(
        kind=kind,
        axis=tuple(levels),
        series=series,
        dispersion=dispersion,
        seeds=tuple(seeds),
        raw=raw,
    )


def parse_spec(obj: dict):
    """Build a GaussianSpec or MixtureSpec from its JSON-friendly dict form."""
    if not isinstance(obj, dict):
        raise ValueError(f"spec must be a JSON object, got {type(obj).__name__}")
    if "components" in obj:
        comps, weights, labels = [], [], []
        raw = obj["components"]
        if not isinstance(raw, list) or not raw:
            raise ValueError('"components" must be a non-empty list')
        for i, c in enumerate(raw):
            if not isinstance(c, dict) or "mean" not in c or "cov" not in c:
                raise ValueError(f'component {i} must be an object with "mean" and "cov"')
            try:
                comps.append(GaussianSpec(mean=c["mean"], cov=c["cov"]))
            except ValueError as exc:
                raise ValueError(f"component {i}: {exc}") from exc
            if "weight" not in c:
                raise ValueError(f'component {i} is missing "weight"')
            weights.append(c["weight"])
            labels.append(c.get("label", i))
        return MixtureSpec(components=tuple(comps), weights=tuple(weights), labels=tuple(labels))
    if "mean" in obj and "cov" in obj:
        return GaussianSpec(mean=obj["mean"], cov=obj["cov"])
    raise ValueError('spec needs either "components" or top-level "mean" and "cov"')


def spec_to_dict(spec) -> dict:
    """Inverse of parse_spec."""
    if isinstance(spec, GaussianSpec):
        return {"mean": spec.mean.tolist(), "cov": spec.cov.tolist()}
    return {"components": [
        {"mean": c.mean.tolist(), "cov": c.cov.tolist(), "weight": w, "label": lab}
        for c, w, lab in zip(spec.components, spec.weights, spec.labels)
    ]}


def load_spec_file(path):
    """Read a JSON spec file into a GaussianSpec or MixtureSpec."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON: {exc}") from exc
    try:
        return parse_spec(obj)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc
