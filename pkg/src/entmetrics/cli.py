"""Command-line surface: evaluate, audit, synthesize, and sweep.

    entmetrics eval  --real real.emb --gen gen.emb --out report.json
    entmetrics audit --real real.emb --gen gen.emb --out ranked.csv
    entmetrics synth --spec mixture.json --n 2000 --seed 0 --out sample.emb
    entmetrics sweep --kind shrink --levels 1.0,0.8,0.6,0.4 --seeds 0,1,2 \
                     --spec mixture.json --out sweep.csv

Reports are JSON by default with a versioned schema; per-sample and sweep
tables are CSV. Exit codes: 0 success, 1 usage or parameter validation,
2 input-data errors (with a located message), 3 numeric failure.
The environment variable ENTMETRICS_THREADS caps query parallelism.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time

from . import __version__
from .embeddings import (
    FormatError,
    PairedInput,
    attach_labels,
    read_embeddings,
    read_labels,
    write_embeddings,
    write_labels,
)
from .estimators import renyi_divergence_hat
from .metrics import (
    DEFAULT_MEMORIZATION_THRESHOLD,
    DEFAULT_METRICS,
    DEFAULT_PRC,
    NumericError,
    audit,
    evaluate,
    mode_report,
)
from .synth import SWEEP_KINDS, load_spec_file, run_sweep, sample

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

SCHEMA_VERSION = 1

EVAL_METRICS = DEFAULT_METRICS + ("renyi",)


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; the exit-code contract
    # reserves 2 for data errors, so usage problems are re-raised and
    # mapped to 1 in main().
    def error(self, message):
        raise _ArgError(message)


def _fail(code: int, message: str) -> int:
    print(f"entmetrics: error: {message}", file=sys.stderr)
    return code


def _json_value(v: float):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="entmetrics",
                     description="Compare real and generated embedding sets.")
    parser.add_argument("--version", action="version", version=f"entmetrics {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="compute metrics on an embedding pair")
    _add_pair_args(p_eval)
    p_eval.add_argument("--metrics", default=",".join(DEFAULT_METRICS),
                        help=f"comma list from {','.join(EVAL_METRICS)}")
    p_eval.add_argument("--alpha", type=float, default=None,
                        help="Rényi order for the optional renyi metric (must differ from 1)")
    p_eval.add_argument("--theta", type=float, default=50.0,
                        help="sigmoid steepness, echoed for API-level J variants")
    p_eval.add_argument("--format", choices=("json", "csv"), default="json")
    p_eval.set_defaults(func=cmd_eval)

    p_audit = sub.add_parser("audit", help="rank generated samples by fidelity contribution")
    _add_pair_args(p_audit, k_default=1)
    p_audit.add_argument("--threshold", type=float, default=DEFAULT_MEMORIZATION_THRESHOLD,
                         help="memorization-tier contribution threshold in nats")
    p_audit.add_argument("--top", type=int, default=None,
                         help="emit only the N most negative rows")
    p_audit.set_defaults(func=cmd_audit)

    p_synth = sub.add_parser("synth", help="draw a seeded sample from a JSON spec")
    p_synth.add_argument("--spec", required=True, help="JSON Gaussian/mixture spec file")
    p_synth.add_argument("--n", type=int, required=True, help="number of rows to draw")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True, help="embedding output path")
    p_synth.add_argument("--labels-out", default=None,
                         help="label sidecar path (default OUT.labels)")
    p_synth.add_argument("--format", choices=("binary", "csv"), default="binary")
    p_synth.set_defaults(func=cmd_synth)

    p_sweep = sub.add_parser("sweep", help="evaluate metrics across synthetic failure levels")
    p_sweep.add_argument("--kind", required=True, choices=SWEEP_KINDS)
    p_sweep.add_argument("--levels", required=True,
                         help="comma list of levels (ints for drop/sample-size)")
    p_sweep.add_argument("--seeds", required=True, help="comma list of integer seeds")
    p_sweep.add_argument("--spec", required=True, help="base JSON spec file")
    p_sweep.add_argument("--gen-spec", default=None,
                         help="generated-side spec for sample-size sweeps")
    p_sweep.add_argument("--metrics", default="pce,rce,re,density,coverage",
                         help=f"comma list from {','.join(DEFAULT_METRICS)}")
    p_sweep.add_argument("--n", type=int, default=2000, help="samples per set and side")
    p_sweep.add_argument("--k", type=int, default=5)
    p_sweep.add_argument("--k-prime", type=int, default=None,
                         help="PRC count threshold; with --k it must divide k")
    p_sweep.add_argument("--offset-scale", type=float, default=25.0,
                         help="blob offset for invent sweeps")
    p_sweep.add_argument("--out", required=True, help="long-format CSV path")
    p_sweep.set_defaults(func=cmd_sweep)

    return parser


def _add_pair_args(p, k_default: int = 5):
    p.add_argument("--real", required=True, help="real embedding file (EMB1 or CSV)")
    p.add_argument("--gen", required=True, help="generated embedding file")
    p.add_argument("--real-labels", default=None, help="label sidecar for the real set")
    p.add_argument("--gen-labels", default=None, help="label sidecar for the generated set")
    p.add_argument("--k", type=int, default=k_default, help="neighbor order")
    p.add_argument("--k-prime", type=int, default=None,
                   help="PRC count threshold; with --k it must divide k")
    p.add_argument("--seed", type=int, default=0, help="echoed into the report")
    p.add_argument("--out", default=None, help="output path (stdout when omitted)")


def _check_paths(*paths) -> str | None:
    for p in paths:
        if p is not None and not os.path.exists(p):
            return f"no such file: {p}"
    return None


def _load_pair(args):
    """Returns (PairedInput, real labels or None, gen labels or None)."""
    sets = {}
    for name, path in (("real", args.real), ("gen", args.gen)):
        try:
            sets[name] = read_embeddings(path)
        except (FormatError, ValueError) as exc:
            raise FormatError(f"{path}: {exc}") from exc
    labels = {}
    for name, path in (("real", args.real_labels), ("gen", args.gen_labels)):
        if path is None:
            labels[name] = None
            continue
        try:
            raw = read_labels(path)
            labels[name] = attach_labels(sets[name], raw)
        except (FormatError, ValueError) as exc:
            raise FormatError(f"{path}: {exc}") from exc
    try:
        pair = PairedInput(sets["real"], sets["gen"])
    except ValueError as exc:
        # Two well-formed files that do not fit together is a data error.
        raise FormatError(str(exc)) from exc
    return pair, labels["real"], labels["gen"]


def _prc_config(args):
    """Resolve the PRC (k, k') pair; returns (pair, note or None)."""
    if args.k_prime is not None:
        if args.k_prime < 1 or args.k % args.k_prime != 0:
            raise _ArgError(
                f"k must be an integer multiple of k'; got k={args.k}, k'={args.k_prime}")
        return (args.k, args.k_prime), None
    return DEFAULT_PRC, (f"pc/rc defaulted to (k={DEFAULT_PRC[0]}, k'={DEFAULT_PRC[1]}); "
                         f"set --k and --k-prime to override")


def _write_text(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_eval(args) -> int:
    missing = _check_paths(args.real, args.gen, args.real_labels, args.gen_labels)
    if missing:
        return _fail(EXIT_USAGE, missing)
    names = [m.strip() for m in args.metrics.split(",") if m.strip()]
    unknown = [m for m in names if m not in EVAL_METRICS]
    if unknown:
        return _fail(EXIT_USAGE, f"unknown metric(s) {unknown}; choose from {list(EVAL_METRICS)}")
    if "renyi" in names:
        if args.alpha is None:
            return _fail(EXIT_USAGE, "the renyi metric requires --alpha")
        if args.alpha == 1 or args.alpha <= 0:
            return _fail(EXIT_USAGE, f"--alpha must be positive and differ from 1, got {args.alpha}")
    try:
        prc, prc_note = _prc_config(args)
    except _ArgError as exc:
        return _fail(EXIT_USAGE, str(exc))
    try:
        pair, real_labeled, gen_labeled = _load_pair(args)
    except FormatError as exc:
        return _fail(EXIT_DATA, str(exc))
    except OSError as exc:
        return _fail(EXIT_DATA, str(exc))
    try:
        return _run_eval(args, pair, real_labeled, gen_labeled, names, prc, prc_note)
    except NumericError as exc:
        return _fail(EXIT_NUMERIC, str(exc))
    except ValueError as exc:
        return _fail(EXIT_USAGE, str(exc))


def _run_eval(args, pair, real_labeled, gen_labeled, names, prc, prc_note) -> int:
    t_start = time.perf_counter()
    timings = {}
    sections = {}
    core = [m for m in names if m != "renyi"]
    for name in core:
        t0 = time.perf_counter()
        rep = evaluate(pair, [name], k=args.k, prc=prc)[name]
        timings[name] = time.perf_counter() - t0
        entry = {
            "value": _json_value(rep.value),
            "n_real": rep.n_real,
            "n_gen": rep.n_gen,
            "k": rep.params_used.k,
            "warnings": list(rep.warnings),
            "notes": list(rep.notes),
        }
        if name in ("pc", "rc"):
            entry["k_prime"] = rep.params_used.k // rep.params_used.C
        sections[name] = entry
    if "renyi" in names:
        t0 = time.perf_counter()
        est = renyi_divergence_hat(pair.generated, pair.real, args.alpha, args.k)
        timings["renyi"] = time.perf_counter() - t0
        sections["renyi"] = {
            "value": _json_value(est.value),
            "n_real": pair.real.n,
            "n_gen": pair.generated.n,
            "k": args.k,
            "alpha": args.alpha,
            "warnings": list(est.warnings),
            "notes": [],
        }
    modes = {}
    for name in names:
        if name not in ("pce", "rce", "re"):
            continue
        attributed = gen_labeled if name in ("pce", "re") else real_labeled
        side = "generated" if name in ("pce", "re") else "real"
        if attributed is None:
            continue
        labeled_real = real_labeled if real_labeled is not None else attach_labels(
            pair.real, [0] * pair.real.n)
        labeled_gen = gen_labeled if gen_labeled is not None else attach_labels(
            pair.generated, [0] * pair.generated.n)
        mr = mode_report(labeled_real, labeled_gen, name, k=args.k)
        modes[name] = {
            "attributed_set": side,
            "per_class": {str(cls): {"count": cnt, "mean": _json_value(mean)}
                          for cls, (cnt, mean) in mr.per_class.items()},
        }
    config = {
        "real": args.real, "gen": args.gen,
        "real_labels": args.real_labels, "gen_labels": args.gen_labels,
        "k": args.k, "k_prime": args.k_prime, "prc_k": prc[0], "prc_k_prime": prc[1],
        "alpha": args.alpha, "theta": args.theta, "seed": args.seed,
        "metrics": names, "format": args.format, "out": args.out,
        "notes": [prc_note] if prc_note and ("pc" in names or "rc" in names) else [],
    }
    warnings_all = sorted({w for s in sections.values() for w in s["warnings"]})
    timings["total"] = time.perf_counter() - t_start
    if args.format == "csv":
        lines = ["metric,value"]
        lines += [f"{name},{sections[name]['value']}" for name in names]
        _write_text(args.out, "\n".join(lines) + "\n")
        return EXIT_OK
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool": "entmetrics",
        "version": __version__,
        "command": "eval",
        "config": config,
        "metrics": sections,
        "modes": modes,
        "warnings": warnings_all,
        "timings_s": {k_: round(v, 6) for k_, v in timings.items()},
    }
    _write_text(args.out, json.dumps(report, indent=2))
    return EXIT_OK


def cmd_audit(args) -> int:
    missing = _check_paths(args.real, args.gen, args.real_labels, args.gen_labels)
    if missing:
        return _fail(EXIT_USAGE, missing)
    if args.top is not None and args.top < 1:
        return _fail(EXIT_USAGE, f"--top must be >= 1, got {args.top}")
    try:
        pair, _, _ = _load_pair(args)
    except FormatError as exc:
        return _fail(EXIT_DATA, str(exc))
    except OSError as exc:
        return _fail(EXIT_DATA, str(exc))
    t0 = time.perf_counter()
    try:
        result = audit(pair, k=args.k, memorization_threshold=args.threshold)
    except NumericError as exc:
        return _fail(EXIT_NUMERIC, str(exc))
    except ValueError as exc:
        return _fail(EXIT_USAGE, str(exc))
    elapsed = time.perf_counter() - t0
    rows = result.ranked if args.top is None else result.ranked[:args.top]
    lines = ["rank,index,contribution,nearest_real_index,nearest_real_distance,tier"]
    for rank, idx in enumerate(rows):
        i = int(idx)
        lines.append(f"{rank},{i},{float(result.contributions[i])!r},"
                     f"{int(result.nearest_index[i])},{float(result.nearest_distance[i])!r},"
                     f"{result.tier_of(i)}")
    _write_text(args.out, "\n".join(lines) + "\n")
    n_warn = int((result.contributions < 0).sum())
    summary = {
        "schema_version": SCHEMA_VERSION,
        "tool": "entmetrics",
        "version": __version__,
        "command": "audit",
        "config": {"real": args.real, "gen": args.gen, "k": args.k,
                   "threshold": args.threshold, "top": args.top,
                   "seed": args.seed, "out": args.out},
        "n_generated": pair.generated.n,
        "n_flagged_memorized": int(result.flags.shape[0]),
        "n_below_zero": n_warn,
        "timings_s": {"total": round(elapsed, 6)},
    }
    print(json.dumps(summary, indent=2) if args.out else json.dumps(summary))
    return EXIT_OK


def cmd_synth(args) -> int:
    missing = _check_paths(args.spec)
    if missing:
        return _fail(EXIT_USAGE, missing)
    if args.n < 1:
        return _fail(EXIT_USAGE, f"--n must be >= 1, got {args.n}")
    try:
        spec = load_spec_file(args.spec)
    except ValueError as exc:
        return _fail(EXIT_DATA, str(exc))
    labeled = sample(spec, args.n, args.seed)
    labels_out = args.labels_out if args.labels_out is not None else args.out + ".labels"
    try:
        write_embeddings(args.out, labeled.embeddings, format=args.format)
        write_labels(labels_out, labeled.labels)
    except OSError as exc:
        return _fail(EXIT_DATA, str(exc))
    print(f"wrote {labeled.embeddings.n} x {labeled.embeddings.d} embeddings to {args.out}, "
          f"labels to {labels_out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    missing = _check_paths(args.spec, args.gen_spec)
    if missing:
        return _fail(EXIT_USAGE, missing)
    names = [m.strip() for m in args.metrics.split(",") if m.strip()]
    unknown = [m for m in names if m not in DEFAULT_METRICS]
    if unknown:
        return _fail(EXIT_USAGE, f"unknown metric(s) {unknown}; choose from {list(DEFAULT_METRICS)}")
    try:
        prc, _ = _prc_config(args)
    except _ArgError as exc:
        return _fail(EXIT_USAGE, str(exc))
    try:
        if args.kind in ("drop", "sample-size"):
            levels = [int(x) for x in args.levels.split(",")]
        else:
            levels = [float(x) for x in args.levels.split(",")]
        seeds = [int(x) for x in args.seeds.split(",")]
    except ValueError:
        return _fail(EXIT_USAGE, f"could not parse --levels {args.levels!r} / --seeds {args.seeds!r}")
    try:
        base = load_spec_file(args.spec)
        gen_base = load_spec_file(args.gen_spec) if args.gen_spec else None
    except ValueError as exc:
        return _fail(EXIT_DATA, str(exc))
    t0 = time.perf_counter()
    try:
        result = run_sweep(args.kind, levels, names, seeds, base, base_gen=gen_base,
                           n=args.n, k=args.k, prc=prc, offset_scale=args.offset_scale)
    except NumericError as exc:
        return _fail(EXIT_NUMERIC, str(exc))
    except ValueError as exc:
        return _fail(EXIT_USAGE, str(exc))
    elapsed = time.perf_counter() - t0
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "seed", "metric", "value"])
        for li, level in enumerate(result.axis):
            for si, seed in enumerate(result.seeds):
                for m in names:
                    writer.writerow([level, seed, m, repr(float(result.raw[m][li, si]))])
    summary_path = os.path.splitext(args.out)[0] + ".summary.csv"
    with open(summary_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "metric", "mean", "sd"])
        for li, level in enumerate(result.axis):
            for m in names:
                writer.writerow([level, m, repr(float(result.series[m][li])),
                                 repr(float(result.dispersion[m][li]))])
    print(f"swept {len(result.axis)} levels x {len(result.seeds)} seeds in {elapsed:.1f}s; "
          f"wrote {args.out} and {summary_path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgError as exc:
        print(f"entmetrics: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
