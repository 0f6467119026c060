"""Acceptance suite: one test per stated behavioral criterion.

Run with -v to get one pass/fail line per criterion. Every test prints its
measured evidence table, so a failing line carries the cell-by-cell numbers
it was judged on.
"""

import math

import numpy as np

from entmetrics.embeddings import EmbeddingSet, PairedInput
from entmetrics.estimators import cross_entropy_knn, entropy_knn
from entmetrics.knn import (
    ball_counts,
    build_index,
    kth_distances,
    nearest_rows,
    union_ball_stats,
)
from entmetrics.metrics import (
    audit,
    coverage,
    density,
    evaluate,
    pc,
    pce,
    rc,
    rce,
    re,
)
from entmetrics.synth import (
    GaussianSpec,
    MixtureSpec,
    gaussian_cross_entropy,
    gaussian_entropy,
    gaussian_kl,
    run_sweep,
    sample,
)


def _ten_mode_mixture(d=4, radius=50.0):
    """Ten well-separated unit-covariance modes on a circle in the first
    two coordinates; labels m0..m9 so drops remove modes in index order."""
    comps, labels = [], []
    for j in range(10):
        angle = 2.0 * math.pi * j / 10.0
        mean = np.zeros(d)
        mean[0] = radius * math.cos(angle)
        mean[1] = radius * math.sin(angle)
        comps.append(GaussianSpec(mean=mean, cov=1.0))
        labels.append(f"m{j}")
    return MixtureSpec(components=tuple(comps), weights=(0.1,) * 10,
                       labels=tuple(labels))


def test_criterion_01_closed_form_gaussian_table():
    """gaussian_kl / cross_entropy / entropy reproduce the reference table
    for G = N(0, s2*I_10) against R = N(0, I_10), s2 in {0.25, 1, 2.5}."""
    table = {0.25: (3.18, 10.44, 7.26),
             1.0: (0.00, 14.19, 14.19),
             2.5: (2.92, 21.69, 18.77)}
    r_spec = GaussianSpec(mean=np.zeros(10), cov=1.0)
    lines, failures = [], []
    for s2, (kl_ref, ce_ref, h_ref) in table.items():
        g_spec = GaussianSpec(mean=np.zeros(10), cov=s2)
        got = (gaussian_kl(g_spec, r_spec),
               gaussian_cross_entropy(g_spec, r_spec),
               gaussian_entropy(g_spec))
        for name, val, ref in zip(("kl", "ce", "h"), got, (kl_ref, ce_ref, h_ref)):
            ok = abs(val - ref) <= 0.01
            lines.append(f"s2={s2:<5} {name:<3} {val:+8.4f} ref {ref:+8.4f} "
                         f"{'PASS' if ok else 'FAIL'}")
            if not ok:
                failures.append(lines[-1])
    print("\n".join(lines))
    assert not failures, "\n" + "\n".join(failures)


def test_criterion_02_estimator_consistency_at_ten_thousand():
    """With 10000 samples per set in R^10 at k=5, the entropy and
    cross-entropy estimates land within 0.15 of the closed forms for
    s2 in {0.25, 1, 2.5}, and pce/rce/re within 0.3 of theirs."""
    r_spec = GaussianSpec(mean=np.zeros(10), cov=1.0)
    lines, failures = [], []
    for i, s2 in enumerate((0.25, 1.0, 2.5)):
        g_spec = GaussianSpec(mean=np.zeros(10), cov=s2)
        R = sample(r_spec, 10_000, [2, i, 0]).embeddings
        G = sample(g_spec, 10_000, [2, i, 1]).embeddings
        ir, ig = build_index(R), build_index(G)
        pair = PairedInput(R, G)
        h_r, h_g = gaussian_entropy(r_spec), gaussian_entropy(g_spec)
        cells = [
            ("entropy(G)", entropy_knn(G, 5, index=ig).value, h_g, 0.15),
            ("cross_entropy(G,R)", cross_entropy_knn(G, R, 5, index=ir).value,
             gaussian_cross_entropy(g_spec, r_spec), 0.15),
            ("pce", pce(pair, 5, index_real=ir).value,
             gaussian_cross_entropy(g_spec, r_spec) - h_r, 0.3),
            ("rce", rce(pair, 5, index_real=ir, index_gen=ig).value,
             gaussian_cross_entropy(r_spec, g_spec) - h_r, 0.3),
            ("re", re(pair, 5, index_real=ir, index_gen=ig).value, h_g - h_r, 0.3),
        ]
        for name, est, oracle, tol in cells:
            err = est - oracle
            ok = abs(err) <= tol
            lines.append(f"s2={s2:<5} {name:<19} est {est:+9.4f} oracle "
                         f"{oracle:+9.4f} err {err:+7.4f} tol {tol} "
                         f"{'PASS' if ok else 'FAIL'}")
            if not ok:
                failures.append(lines[-1])
    print("\n".join(lines))
    assert not failures, "\n" + "\n".join(failures)


def test_criterion_03_density_saturation_with_sample_size():
    """Density on N((0,0),S) vs N((2,2),S), S=[[1,.1],[.1,1]], k=5 sits
    near 0.69 at 10^4 total samples, moves strictly toward 1 at 10^5, and
    pc(15,5) drifts at most 0.05 over the same range.

    Density's per-ball counts are strongly correlated, so single draws at
    this size scatter with sd about 0.05 and the estimator's expected
    value at 10^4 sits within 0.01 of the tolerance edge; the small scale
    is averaged over 40 seeds to test that location rather than one
    draw's luck. The large scale's margins are wide, so 10 seeds suffice.
    """
    cov = [[1.0, 0.1], [0.1, 1.0]]
    r_spec = GaussianSpec(mean=[0.0, 0.0], cov=cov)
    g_spec = GaussianSpec(mean=[2.0, 2.0], cov=cov)
    results = {}
    for total, n_seeds in ((10_000, 40), (100_000, 10)):
        n_set = total // 2
        d_vals, pc_vals = [], []
        for seed in range(n_seeds):
            pair = PairedInput(sample(r_spec, n_set, [3, total, seed, 0]).embeddings,
                               sample(g_spec, n_set, [3, total, seed, 1]).embeddings)
            ir, ig = build_index(pair.real), build_index(pair.generated)
            d_vals.append(density(pair, k=5, index_real=ir, index_gen=ig).value)
            pc_vals.append(pc(pair, 15, 5, index_real=ir, index_gen=ig).value)
        results[total] = (float(np.mean(d_vals)), float(np.mean(pc_vals)))
    d_small, pc_small = results[10_000]
    d_large, pc_large = results[100_000]
    print(f"density: {d_small:.4f} at 10^4 -> {d_large:.4f} at 10^5; "
          f"pc(15,5): {pc_small:.4f} -> {pc_large:.4f}")
    assert abs(d_small - 0.69) <= 0.05
    assert abs(1.0 - d_large) < abs(1.0 - d_small)
    assert abs(pc_large - pc_small) <= 0.05


def test_criterion_04_coverage_equals_recall_coverage_at_one():
    """coverage(k) and rc(k, 1) agree bitwise on 100 random instances."""
    rng = np.random.default_rng(4)
    for trial in range(100):
        d = int(rng.integers(1, 9))
        k = int(rng.integers(1, 9))
        n_r = int(rng.integers(k + 1, 501))
        n_g = int(rng.integers(1, 501))
        pair = PairedInput(
            EmbeddingSet(rng.standard_normal((n_r, d))),
            EmbeddingSet(rng.standard_normal((n_g, d)) * 1.2 + 0.3),
        )
        cov = coverage(pair, k=k)
        equiv = rc(pair, k=k, k_prime=1)
        assert cov.value == equiv.value, f"trial {trial}"
        assert np.array_equal(cov.per_sample, equiv.per_sample), f"trial {trial}"
    print("100/100 instances bitwise identical")


def test_criterion_05_identical_distribution_zero_point():
    """Same-distribution pairs (N=5000, d=8, k=5): |pce|, |rce|, |re|
    average at most 0.1 over 10 seeds and fd at most 0.05."""
    sums = {"pce": 0.0, "rce": 0.0, "re": 0.0, "fd": 0.0}
    for seed in range(10):
        real = np.random.default_rng([5, seed, 0]).standard_normal((5000, 8))
        gen = np.random.default_rng([5, seed, 1]).standard_normal((5000, 8))
        pair = PairedInput(EmbeddingSet(real), EmbeddingSet(gen))
        out = evaluate(pair, metrics=("pce", "rce", "re", "fd"), k=5)
        for name in sums:
            sums[name] += abs(out[name].value)
    means = {name: total / 10.0 for name, total in sums.items()}
    print(" ".join(f"{name}={val:.4f}" for name, val in means.items()))
    for name in ("pce", "rce", "re"):
        assert means[name] <= 0.1, f"{name} averaged {means[name]:.4f}"
    assert means["fd"] <= 0.05, f"fd averaged {means['fd']:.4f}"


def test_criterion_06_mode_drop_sensitivity():
    """Dropping 0..5 of 10 modes from the generated side: rce strictly
    rises, coverage and rc strictly fall (10-seed averages), and the pce
    and re excursions each stay below 25% of the rce excursion."""
    mix = _ten_mode_mixture()
    res = run_sweep("drop", levels=[0, 1, 2, 3, 4, 5],
                    metrics=("pce", "rce", "re", "coverage", "rc"),
                    seeds=list(range(10)), base_real=mix, n=2000, k=5)
    for name in ("pce", "rce", "re", "coverage", "rc"):
        vals = " ".join(f"{v:+.4f}" for v in res.series[name])
        print(f"{name:<9} {vals}")
    assert np.all(np.diff(res.series["rce"]) > 0)
    assert np.all(np.diff(res.series["coverage"]) < 0)
    assert np.all(np.diff(res.series["rc"]) < 0)
    d_rce = res.series["rce"][-1] - res.series["rce"][0]
    assert abs(res.series["pce"][-1] - res.series["pce"][0]) < 0.25 * d_rce
    assert abs(res.series["re"][-1] - res.series["re"][0]) < 0.25 * d_rce


def test_criterion_07_mode_shrink_sensitivity():
    """Contracting every mode by s in {1.0, 0.8, 0.6, 0.4}: re strictly
    falls, pce never rises (10-seed averages), and the rce excursion stays
    below 25% of the re excursion."""
    mix = _ten_mode_mixture()
    res = run_sweep("shrink", levels=[1.0, 0.8, 0.6, 0.4],
                    metrics=("pce", "rce", "re"),
                    seeds=list(range(10)), base_real=mix, n=2000, k=5)
    for name in ("pce", "rce", "re"):
        vals = " ".join(f"{v:+.4f}" for v in res.series[name])
        print(f"{name:<4} {vals}")
    assert np.all(np.diff(res.series["re"]) < 0)
    assert np.all(np.diff(res.series["pce"]) <= 0)
    d_re = res.series["re"][-1] - res.series["re"][0]
    assert abs(res.series["rce"][-1] - res.series["rce"][0]) < 0.25 * abs(d_re)


def test_criterion_08_memorization_audit():
    """Five exact real rows planted into a 5000-sample generated set take
    the five most-negative contribution ranks and all five are flagged;
    the unplanted control flags nothing at threshold -5."""
    mix = _ten_mode_mixture()
    real = sample(mix, 5000, seed=0).embeddings
    gen = sample(mix, 5000, seed=1).embeddings
    planted_rows = (7, 100, 2500, 3333, 4999)
    data = gen.data.copy()
    data[list(planted_rows)] = real.data[[1, 2, 3, 4, 5]]
    planted = audit(PairedInput(real, EmbeddingSet(data)))
    control = audit(PairedInput(real, gen))
    print(f"planted ranks {planted.ranked[:5].tolist()} "
          f"flags {sorted(planted.flags.tolist())} "
          f"control flags {control.flags.size}")
    assert set(planted.ranked[:5].tolist()) == set(planted_rows)
    assert set(planted.flags.tolist()) == set(planted_rows)
    assert control.flags.size == 0


def test_criterion_09_invariance_suite():
    """Every kNN metric moves at most 1e-9 under a shared rigid motion;
    under a shared positive scaling the count metrics are exact and the
    entropy scores move at most 1e-9; each per_sample mean matches its
    value to 1e-9."""
    rng = np.random.default_rng(90)
    base = PairedInput(EmbeddingSet(rng.standard_normal((300, 3))),
                       EmbeddingSet(rng.standard_normal((300, 3)) * 1.1 + 0.2))
    Q, _ = np.linalg.qr(np.random.default_rng(91).standard_normal((3, 3)))
    shift = np.array([5.0, -2.0, 11.0])
    moved = PairedInput(EmbeddingSet(base.real.data @ Q + shift),
                        EmbeddingSet(base.generated.data @ Q + shift))
    scaled = PairedInput(EmbeddingSet(base.real.data * 2.0),
                         EmbeddingSet(base.generated.data * 2.0))
    calls = (("pce", lambda p: pce(p, k=4)), ("rce", lambda p: rce(p, k=4)),
             ("re", lambda p: re(p, k=4)), ("density", lambda p: density(p, k=4)),
             ("coverage", lambda p: coverage(p, k=4)),
             ("pc", lambda p: pc(p, k=4, k_prime=2)),
             ("rc", lambda p: rc(p, k=4, k_prime=2)))
    for name, fn in calls:
        drift = abs(fn(moved).value - fn(base).value)
        print(f"rigid   {name:<8} drift {drift:.3g}")
        assert drift <= 1e-9, name
    for name, fn in calls:
        a, b = fn(scaled).value, fn(base).value
        if name in ("density", "coverage", "pc", "rc"):
            assert a == b, name
        else:
            print(f"scaling {name:<8} drift {abs(a - b):.3g}")
            assert abs(a - b) <= 1e-9, name
    for name, report in evaluate(base, k=4, prc=(4, 2)).items():
        if report.per_sample is not None:
            assert abs(report.value - float(np.mean(report.per_sample))) <= 1e-9, name


def test_criterion_10_engine_backend_equivalence():
    """Tree-backed queries equal brute force exactly on 500-point sets in
    d = 1, 2, 8 for every k up to 20: kth distances (self-excluded and
    cross-set), ball counts at those radii, union-ball statistics, and
    nearest-row lookups."""
    for d in (1, 2, 8):
        rng = np.random.default_rng(100 + d)
        X = EmbeddingSet(rng.standard_normal((500, d)))
        Y = EmbeddingSet(rng.standard_normal((200, d)) * 1.3 + 0.1)
        tx, bx = build_index(X, "kdtree"), build_index(X, "brute")
        ty, by = build_index(Y, "kdtree"), build_index(Y, "brute")
        for k in range(1, 21):
            self_t = kth_distances(tx, k)
            self_b = kth_distances(bx, k)
            assert np.array_equal(self_t, self_b), (d, k, "self")
            cross_t = kth_distances(tx, k, queries=Y.data, exclude_self=False)
            cross_b = kth_distances(bx, k, queries=Y.data, exclude_self=False)
            assert np.array_equal(cross_t, cross_b), (d, k, "cross")
            own = np.arange(X.n)
            counts_t = ball_counts(tx, X.data, self_t, exclude_rows=own)
            counts_b = ball_counts(bx, X.data, self_b, exclude_rows=own)
            assert np.array_equal(counts_t, counts_b), (d, k, "counts")
        for k in (1, 5, 20):
            u_t = union_ball_stats(tx, ty, k)
            u_b = union_ball_stats(bx, by, k)
            for part_t, part_b in zip(u_t, u_b):
                assert np.array_equal(part_t, part_b), (d, k, "union")
        for part_t, part_b in zip(nearest_rows(tx, Y.data), nearest_rows(bx, Y.data)):
            assert np.array_equal(part_t, part_b), (d, "nearest")
    print("tree == brute for all d in (1, 2, 8), k <= 20")
