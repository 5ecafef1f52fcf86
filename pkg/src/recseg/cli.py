"""Command-line interface: ``recseg {fit,generate,evaluate,sweep-h,bench,trace}``."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import logging
import sys
import time

from .core import IngestError, baseline_loglik, model_loglik, normalized_loglik, read_edges, write_edges
from .estimation import FitConfig, fit_restarts
from .evaluation import bench_scaling, generate, intensity_trace, rand_index, sweep_h, trace_gap
from .modelfile import ModelFile
from .segmentation import SegmentationError

log = logging.getLogger("recseg")


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _write_csv(rows, header, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if path in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())


def _add_fit_args(p: argparse.ArgumentParser, levels_required: bool = True) -> None:
    p.add_argument("--groups", "-R", type=int, required=True)
    p.add_argument("--segments", "-K", type=int, required=True)
    if levels_required:
        p.add_argument("--levels", "-H", type=int, required=True)
    p.add_argument("--theta", type=float, default=1e-3)
    p.add_argument("--eta", type=float, default=1e-3)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--naive-dp", action="store_true", help="use the quadratic DP instead of SMAWK")


def _add_input_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["auto", "csv", "whitespace"], default="auto")
    p.add_argument("--window", type=float, nargs=2, metavar=("A", "B"),
                   help="observation window; defaults to the span of the edges")


def _config(args, H: int) -> FitConfig:
    return FitConfig(R=args.groups, K=args.segments, H=H, theta=args.theta, eta=args.eta,
                     max_iters=args.max_iters, tol=args.tol, seed=args.seed, restarts=args.restarts,
                     engine="naive" if args.naive_dp else "smawk")


def cmd_fit(args) -> int:
    G = read_edges(args.input, args.format, args.window)
    cfg = _config(args, args.levels)
    start = time.perf_counter()
    model, _ = fit_restarts(G, cfg)
    secs = time.perf_counter() - start
    ModelFile.from_model(G, model, seed=cfg.seed, config=cfg.to_dict()).save(args.out)
    print(f"loglik={model.loglik:.6f} normalized={model.normalized_loglik:.6f} "
          f"iterations={model.iterations} seconds={secs:.2f}")
    return 0


def cmd_generate(args) -> int:
    gt = generate(args.nodes, args.groups, args.segments, args.levels, args.rate_lo, args.rate_hi,
                  args.seg_duration, seed=args.seed)
    write_edges(gt.graph, args.out)
    if args.truth:
        ModelFile.from_model(gt.graph, gt.model, seed=args.seed, config=gt.gen_params).save(args.truth)
    print(f"n={gt.graph.n} m={gt.graph.m} loglik={gt.model.loglik:.6f} "
          f"normalized={gt.model.normalized_loglik:.6f}")
    return 0


def cmd_evaluate(args) -> int:
    mf = ModelFile.load(args.model)
    G = read_edges(args.edges, args.format, tuple(mf.window))
    model = mf.to_model(G)
    ll = model_loglik(G, model.partition, model.segmentation, model.levels, model.lam)
    norm = normalized_loglik(G, ll)
    print(f"loglik={ll:.6f}")
    print(f"baseline={baseline_loglik(G):.6f}")
    print(f"normalized={norm:.6f}" + ("  (worse than baseline)" if norm > 1 else ""))
    if args.truth:
        truth = ModelFile.load(args.truth).to_model(G)
        print(f"rand_index={rand_index(model.partition, truth.partition):.6f}")
        if truth.R == model.R:
            print(f"max_rate_gap={trace_gap(model, truth, args.points):.6f}")
    return 0


def cmd_sweep_h(args) -> int:
    G = read_edges(args.input, args.format, args.window)
    H_list = _int_list(args.levels_list) if args.levels_list else list(range(1, args.segments + 1))
    cfg = _config(args, 1)
    curve = sweep_h(G, args.groups, args.segments, H_list, cfg)
    _write_csv([(h, repr(v)) for h, v in curve], ["h", "norm_ll"], args.out)
    return 0


def cmd_bench(args) -> int:
    cfg = FitConfig(R=args.groups, K=args.segments, H=args.levels, max_iters=args.iters, restarts=1,
                    seed=args.seed)
    rows = bench_scaling(_int_list(args.sizes), cfg, engines=args.engines.split(","), repeats=args.repeats,
                         seed=args.seed)
    _write_csv([(e, m, f"{s:.6f}") for e, m, s in rows], ["engine", "m", "seconds"], args.out)
    return 0


def cmd_trace(args) -> int:
    mf = ModelFile.load(args.model)
    G = read_edges(args.edges, args.format, tuple(mf.window))
    model = mf.to_model(G)
    tr = intensity_trace(model, args.pair[0] - 1, args.pair[1] - 1, args.points)
    _write_csv([(repr(float(t)), repr(float(v))) for t, v in tr], ["t", "lambda"], args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recseg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a (K, H, R) model to an edge list")
    p.add_argument("input")
    _add_fit_args(p)
    _add_input_args(p)
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("generate", help="sample a synthetic network with known structure")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--groups", type=int, required=True)
    p.add_argument("--segments", type=int, required=True)
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--rate-lo", type=float, default=0.05)
    p.add_argument("--rate-hi", type=float, default=0.7)
    p.add_argument("--seg-duration", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", "-o", required=True)
    p.add_argument("--truth")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="score a model file against an edge list")
    p.add_argument("model")
    p.add_argument("edges")
    p.add_argument("--truth")
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--format", choices=["auto", "csv", "whitespace"], default="auto")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep-h", help="normalized log-likelihood as a function of H")
    p.add_argument("input")
    _add_fit_args(p, levels_required=False)
    _add_input_args(p)
    p.add_argument("--levels-list", help="e.g. 1,2,5 or 1-10 (default 1..K)")
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_sweep_h)

    p = sub.add_parser("bench", help="running time versus number of edges")
    p.add_argument("--sizes", default="10000,20000,40000")
    p.add_argument("--groups", type=int, default=3)
    p.add_argument("--segments", type=int, default=5)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--iters", type=int, default=1)
    p.add_argument("--engines", default="smawk,naive")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("trace", help="rate between two groups over time, as CSV")
    p.add_argument("model")
    p.add_argument("edges")
    p.add_argument("--pair", type=int, nargs=2, default=(1, 2), metavar=("I", "J"))
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--format", choices=["auto", "csv", "whitespace"], default="auto")
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (IngestError, SegmentationError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
