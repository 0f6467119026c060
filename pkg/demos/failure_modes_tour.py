"""Tour of three generator failure modes and the scores that see them.

Builds a labeled Gaussian mixture, damages the generated side in three
controlled ways (dropping modes, shrinking each mode, inventing an
off-support mode), and prints how the entropy trio and the count
baselines respond. Read together, the trio separates the failures:
dropping modes moves rce, shrinking modes moves re, inventing mass
moves pce, and in each case the other two stay nearly put.

Run: python3 demos/failure_modes_tour.py [--n 1000] [--seeds 3]
"""

import argparse

import numpy as np

from entmetrics import GaussianSpec, MixtureSpec, run_sweep

METRICS = ("pce", "rce", "re", "density", "coverage")


def ring_mixture(n_modes=8, radius=40.0, d=4):
    # Well-separated unit-covariance modes on a circle in the first two coords.
    comps = []
    for j in range(n_modes):
        angle = 2.0 * np.pi * j / n_modes
        mean = np.zeros(d)
        mean[0] = radius * np.cos(angle)
        mean[1] = radius * np.sin(angle)
        comps.append(GaussianSpec(mean=mean, cov=1.0))
    return MixtureSpec(components=tuple(comps), weights=(1.0 / n_modes,) * n_modes)


def print_sweep(title, result):
    print(title)
    print("-" * len(title))
    header = f"{'level':>8}" + "".join(f"{m:>10}" for m in METRICS)
    print(header)
    for i, level in enumerate(result.axis):
        row = f"{level:>8g}"
        for m in METRICS:
            row += f"{result.series[m][i]:>10.3f}"
        print(row)
    print()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=1000, help="samples per set")
    parser.add_argument("--seeds", type=int, default=3, help="seeds per cell")
    args = parser.parse_args(argv)

    spec = ring_mixture()
    seeds = range(args.seeds)
    print(f"mixture: 8 modes on a circle of radius 40 in R^4, "
          f"{args.n} samples per set, {args.seeds} seeds per cell\n")

    drop = run_sweep("drop", [0, 1, 2, 3, 4], METRICS, seeds, spec, n=args.n)
    print_sweep("Mode dropping (level = modes removed from the generator)", drop)
    print("  rce climbs steeply (real samples in dropped modes have no nearby")
    print("  generated mass) and coverage falls, while pce barely moves: the")
    print("  surviving generated samples are all still on the real manifold.\n")

    shrink = run_sweep("shrink", [1.0, 0.8, 0.6, 0.4], METRICS, seeds, spec, n=args.n)
    print_sweep("Mode shrinkage (level = contraction factor toward mode centers)", shrink)
    print("  re drops (the generator's entropy falls with its spread) and pce")
    print("  follows it down, but rce is nearly flat: shrunk modes still sit")
    print("  under the real modes, so real samples keep generated neighbors.")
    print("  Coverage only reacts once the contraction is severe, which is why")
    print("  shrinkage is the failure coverage-style checks are late to see.\n")

    invent = run_sweep("invent", [0.0, 0.05, 0.1, 0.2], METRICS, seeds, spec, n=args.n)
    print_sweep("Mode invention (level = fraction replaced by an off-support blob)", invent)
    print("  pce climbs (invented samples sit in regions of near-zero real")
    print("  density) while rce and coverage move little: the untouched")
    print("  fraction still covers every real mode.\n")

    print("Fingerprint summary: rce up = missing modes, re down with flat rce =")
    print("shrunken modes, pce up with flat rce = invented mass.")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
