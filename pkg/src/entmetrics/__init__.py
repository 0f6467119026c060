"""entmetrics: compare real and generated embedding sets.

Entropy-based fidelity and recall scores (pce, rce, re) with per-sample
and per-mode dissection, count-based baselines (density, coverage, pc,
rc), the Fréchet distance, memorization auditing, and a synthetic lab of
Gaussian mixtures with closed-form oracles. See the cli module or the
`entmetrics` command for the batch interface.
"""

__version__ = "0.1.0"

from .embeddings import (
    EmbeddingSet,
    FormatError,
    LabeledSet,
    PairedInput,
    attach_labels,
    decode_embeddings,
    encode_embeddings,
    read_embeddings,
    read_labels,
    write_embeddings,
    write_labels,
)
from .estimators import (
    EstimateValue,
    EstimatorParams,
    J_variant,
    cross_entropy_knn,
    digamma,
    entropy_knn,
    log_unit_ball_volume,
    renyi_J_hat,
    renyi_divergence_hat,
    unit_ball_volume,
)
from .knn import (
    NeighborIndex,
    build_index,
    count_within,
    kth_distance,
    mixed_ball_stats,
)
from .metrics import (
    AuditResult,
    MetricReport,
    ModeReport,
    NumericError,
    audit,
    coverage,
    density,
    evaluate,
    frechet_distance,
    mode_report,
    pc,
    pce,
    rc,
    rce,
    re,
)
from .synth import (
    GaussianSpec,
    MixtureSpec,
    SweepResult,
    apply_mode_drop,
    apply_mode_invent,
    apply_mode_shrink,
    gaussian_cross_entropy,
    gaussian_entropy,
    gaussian_kl,
    load_spec_file,
    parse_spec,
    run_sweep,
    sample,
    spec_to_dict,
)

__all__ = [name for name in dir() if not name.startswith("_")]
