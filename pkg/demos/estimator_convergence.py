"""kNN entropy estimates against closed-form Gaussian oracles.

Draws real samples from N(0, I_4) and generated samples from
N(0, 0.8 I_4), where entropy, cross-entropy, and every derived score
have exact closed forms. Prints the estimates next to the oracles as
the sample count grows, then checks the bookkeeping identity that every
score is exactly the mean of its per-sample contributions (that is what
makes the per-sample audit and the per-mode reports consistent with the
headline numbers).

Run: python3 demos/estimator_convergence.py [--k 5]
"""

import argparse

import numpy as np

from entmetrics import (
    EmbeddingSet,
    GaussianSpec,
    PairedInput,
    cross_entropy_knn,
    entropy_knn,
    evaluate,
    gaussian_cross_entropy,
    gaussian_entropy,
    sample,
)

SIZES = (500, 2000, 8000)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--k", type=int, default=5, help="neighbor order")
    args = parser.parse_args(argv)

    real_spec = GaussianSpec(mean=np.zeros(4), cov=1.0)
    gen_spec = GaussianSpec(mean=np.zeros(4), cov=0.8)

    h_r = gaussian_entropy(real_spec)
    h_g = gaussian_entropy(gen_spec)
    oracle = {
        "H(gen)": h_g,
        "CE(gen, real)": gaussian_cross_entropy(gen_spec, real_spec),
        "pce": gaussian_cross_entropy(gen_spec, real_spec) - h_r,
        "rce": gaussian_cross_entropy(real_spec, gen_spec) - h_r,
        "re": h_g - h_r,
    }

    print(f"real ~ N(0, I_4), gen ~ N(0, 0.8 I_4), k={args.k}\n")
    print(f"{'n per set':>10}" + "".join(f"{name:>16}" for name in oracle))
    print(f"{'oracle':>10}" + "".join(f"{v:>16.4f}" for v in oracle.values()))
    for n in SIZES:
        real = sample(real_spec, n, seed=[n, 0]).embeddings
        gen = sample(gen_spec, n, seed=[n, 1]).embeddings
        reports = evaluate(PairedInput(real, gen), ("pce", "rce", "re"), k=args.k)
        row = {
            "H(gen)": entropy_knn(gen, args.k).value,
            "CE(gen, real)": cross_entropy_knn(gen, real, args.k).value,
            "pce": reports["pce"].value,
            "rce": reports["rce"].value,
            "re": reports["re"].value,
        }
        print(f"{n:>10}" + "".join(f"{row[name]:>16.4f}" for name in oracle))
    print("\nEstimates tighten toward the oracle row as n grows; the trio")
    print("converges faster than its parts because the shared entropy terms")
    print("carry correlated errors that cancel in the differences.\n")

    n = SIZES[-1]
    real = sample(real_spec, n, seed=[n, 0]).embeddings
    gen = sample(gen_spec, n, seed=[n, 1]).embeddings
    reports = evaluate(PairedInput(real, gen), ("pce", "rce", "re", "density"))
    print("partition identity (value == mean of per-sample contributions):")
    for name, report in reports.items():
        match = report.value == float(np.mean(report.per_sample))
        side = report.attributed_set
        print(f"  {name:>8}: value {report.value:>9.4f}, attributed to the "
              f"{side} set, exact match: {match}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
