"""Command-line front end.

Three subcommands:

    prune   read token features (and optionally query embeddings) from NPY
            files, run the selector, write the selection JSON and optional
            pruned-feature NPY.
    flops   evaluate the decoder cost model over keep ratios or an explicit
            pruned length; prints a table and CSV.
    bench   run the synthetic planted-token benchmark across strategies.

Exit codes: 0 success, 1 unreadable/unwritable or malformed input files,
2 flag and validation errors. Diagnostics are single lines on stderr.
Identical invocations (without --timing) produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import time

import numpy as np

from . import __version__
from .bench import format_table, run_bench, write_csv
from .core import (
    DataError,
    PruneConfig,
    VispruneError,
    WEIGHTING_SCHEMES,
    CostModelSpec,
)
from .flops import DECODER_PRESETS, SweepPoint, pruned_cost, sweep
from .query import QueryEmbedding, QuerySpec, build_query, no_text_query
from .selection import prune_video
from .tensorio import (
    NpyFormatError,
    config_echo,
    read_features,
    read_query_embeddings,
    write_pruned_features,
    write_selection,
)


def _float_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("expected at least one value")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="visprune",
        description="Query-aware visual token pruning and its decoder cost model.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "prune",
        help="select tokens per frame and write the selection JSON",
        description="Prune visual tokens frame by frame: score each token "
        "against the prompt query, then greedily keep a budget of tokens "
        "maximizing min-dissimilarity-to-selected plus alpha times relevance.",
    )
    p.add_argument("--features", required=True, help="NPY file (LxC or NxLxC) or directory of per-frame NPY files")
    qsrc = p.add_mutually_exclusive_group(required=True)
    qsrc.add_argument("--query-embeddings", help="NPY file: JxC prompt token embeddings, or a length-C precomputed query")
    qsrc.add_argument("--no-text", action="store_true", help="prune without a prompt (pure diversity)")
    p.add_argument("--ratio", type=float, default=0.15, help="fraction of tokens kept per frame (default 0.15)")
    p.add_argument("--alpha", type=float, default=1.0, help="relevance weight in the greedy objective (default 1.0)")
    p.add_argument("--tau", type=float, default=0.0, help="relevance threshold for the candidate pre-filter (default 0: keep all candidates)")
    p.add_argument("--cap-m", type=int, default=None, help="hard cap on candidate count (default unbounded)")
    p.add_argument("--beta", type=float, default=3.0, help="candidate cap as a multiple of the remaining budget (default 3)")
    p.add_argument("--eps", type=float, default=PruneConfig().eps, help="norm floor for row normalization (default 1e-12)")
    p.add_argument("--weighting", choices=WEIGHTING_SCHEMES, default="exponential", help="prompt-token aggregation scheme (default exponential)")
    p.add_argument("--gamma", type=float, default=1.5, help="growth rate for exponential weighting (default 1.5)")
    p.add_argument("--explicit-weights", type=_float_list, default=None, help="comma-separated per-token weights for --weighting explicit")
    p.add_argument("--out", required=True, help="output selection JSON path")
    p.add_argument("--out-features", default=None, help="optional NPY path for the gathered kept tokens")
    p.add_argument("--emit-relevance", action="store_true", help="include each frame's full relevance vector in the JSON")
    p.add_argument("--workers", type=int, default=None, help="frame-parallel workers (default: available cores)")
    p.add_argument("--timing", action="store_true", help="record wall-clock pruning time in the JSON (off by default so outputs are reproducible)")
    p.set_defaults(func=cmd_prune)

    f = sub.add_parser(
        "flops",
        help="decoder FLOPs with and without pruning",
        description="Evaluate total decoder FLOPs when the first K layers "
        "see the full sequence and the rest see the pruned one.",
    )
    f.add_argument("--preset", choices=sorted(DECODER_PRESETS), default=None, help="named decoder geometry (7b: d=4096, m=11008, T=32)")
    f.add_argument("--d", type=int, default=None, help="model width")
    f.add_argument("--m", type=int, default=None, help="FFN hidden width")
    f.add_argument("--T", type=int, default=None, help="decoder layer count")
    f.add_argument("--text-tokens", type=int, required=True, help="prompt text length t")
    f.add_argument("--v-full", type=int, required=True, help="visual tokens before pruning")
    length = f.add_mutually_exclusive_group(required=True)
    length.add_argument("--ratios", type=_float_list, help="comma-separated keep ratios to sweep")
    length.add_argument("--v-pruned", type=int, help="explicit visual token count after pruning")
    f.add_argument("--k-layer", type=int, default=0, help="layers that still see the full sequence (default 0)")
    f.add_argument("--csv", default=None, help="also write the CSV rows to this path")
    f.set_defaults(func=cmd_flops)

    b = sub.add_parser(
        "bench",
        help="synthetic planted-token benchmark",
        description="Compare relevance-only, diversity-only, and combined "
        "selection on generated frames with planted relevant tokens and "
        "duplicated filler tokens.",
    )
    b.add_argument("--seed", type=int, default=0, help="generator seed (default 0)")
    b.add_argument("--frames", type=int, default=20, help="generated frames (default 20)")
    b.add_argument("--tokens", type=int, default=128, help="tokens per frame (default 128)")
    b.add_argument("--dims", type=int, default=32, help="feature channels (default 32)")
    b.add_argument("--redundancy", type=float, default=0.5, help="fraction of filler tokens overwritten with duplicates (default 0.5)")
    b.add_argument("--planted-relevant", type=float, default=0.1, help="fraction of tokens planted near the query (default 0.1)")
    b.add_argument("--ratios", type=_float_list, default=(0.1, 0.15, 0.25), help="keep ratios (default 0.1,0.15,0.25)")
    b.add_argument("--alpha", type=float, default=1.0, help="relevance weight (default 1.0)")
    b.add_argument("--out", default=None, help="CSV output path")
    b.add_argument("--timing", action="store_true", help="include per-frame microseconds in the CSV")
    b.set_defaults(func=cmd_bench)
    return parser


def _query_from_flags(args, feature_dim: int) -> QueryEmbedding:
    if args.no_text or args.weighting == "none":
        return no_text_query(feature_dim)
    arr = read_query_embeddings(args.query_embeddings)
    if arr.ndim == 1:
        norm = float(np.linalg.norm(arr))
        if norm <= args.eps:
            return QueryEmbedding(np.zeros(arr.shape[0]), "precomputed", degenerate=True)
        return QueryEmbedding(arr / norm, "precomputed")
    spec = QuerySpec(
        token_embeddings=arr,
        weighting=args.weighting,
        explicit_weights=(
            None if args.explicit_weights is None else np.asarray(args.explicit_weights)
        ),
        gamma=args.gamma,
    )
    return build_query(spec)


def cmd_prune(args) -> int:
    video = read_features(args.features)
    q_hat = _query_from_flags(args, video.feature_dim)
    cfg = PruneConfig(
        r=args.ratio,
        alpha=args.alpha,
        tau=args.tau,
        cap_m=args.cap_m,
        beta=args.beta,
        eps=args.eps,
    )
    workers = args.workers if args.workers is not None else (os.cpu_count() or 1)
    start = time.perf_counter()
    selections = prune_video(video, q_hat, cfg, workers=workers)
    timing_ms = (time.perf_counter() - start) * 1e3 if args.timing else None

    write_selection(
        selections,
        args.out,
        config_echo(cfg, q_hat.scheme_used, args.gamma),
        timing_ms=timing_ms,
        include_relevance=args.emit_relevance,
    )
    if args.out_features:
        write_pruned_features(video, selections, args.out_features)
    for i, sel in enumerate(selections):
        total = video.frames[i].rows
        print(
            f"frame {i:03d}: kept {sel.budget}/{total} tokens,"
            f" relevance [{sel.relevance.min():+.4f}, {sel.relevance.max():+.4f}]"
        )
    return 0


def _flops_rows(args) -> list[SweepPoint]:
    if args.preset is not None:
        geometry = DECODER_PRESETS[args.preset]
        d, m, T = geometry["d"], geometry["m"], geometry["T"]
    else:
        if args.d is None or args.m is None or args.T is None:
            raise VispruneError("either --preset or all of --d/--m/--T are required")
        d, m, T = args.d, args.m, args.T
    if args.ratios is not None:
        return sweep(d, m, T, args.text_tokens, args.v_full, args.ratios, K=args.k_layer)
    report = pruned_cost(
        CostModelSpec(
            d=d,
            m=m,
            T=T,
            K=args.k_layer,
            t=args.text_tokens,
            v_full=args.v_full,
            v_pruned=args.v_pruned,
        )
    )
    r = args.v_pruned / args.v_full if args.v_full else 1.0
    return [
        SweepPoint(
            r=r,
            v_pruned=args.v_pruned,
            flops_full=report.flops_full,
            flops_pruned=report.flops_pruned,
            ratio=report.ratio,
        )
    ]


def _flops_csv(points: list[SweepPoint]) -> str:
    # Shortest-round-trip floats so the CSV is a lossless transport; the
    # human-readable table handles pretty-printing.
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["r", "v_pruned", "flops_full", "flops_pruned", "ratio"])
    for p in points:
        writer.writerow([repr(p.r), p.v_pruned, repr(p.flops_full), repr(p.flops_pruned), repr(p.ratio)])
    return buf.getvalue()


def cmd_flops(args) -> int:
    points = _flops_rows(args)
    header = f"{'r':>6} {'v_pruned':>9} {'TFLOPs full':>12} {'TFLOPs pruned':>14} {'ratio':>8}"
    print(header)
    print("-" * len(header))
    for p in points:
        print(
            f"{p.r:>6.3f} {p.v_pruned:>9d} {p.flops_full / 1e12:>12.4f}"
            f" {p.flops_pruned / 1e12:>14.4f} {p.ratio:>8.4f}"
        )
    text = _flops_csv(points)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fh.write(text)
    else:
        print()
        print(text, end="")
    return 0


def cmd_bench(args) -> int:
    rows = run_bench(
        seed=args.seed,
        frames=args.frames,
        tokens=args.tokens,
        dims=args.dims,
        planted_fraction=args.planted_relevant,
        redundancy=args.redundancy,
        ratios=tuple(args.ratios),
        alpha=args.alpha,
        timing=args.timing,
    )
    print(format_table(rows))
    if args.out:
        write_csv(rows, args.out)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NpyFormatError, DataError, OSError) as exc:
        # The class name is part of the diagnostic contract: wrappers in
        # other languages re-raise under the same name.
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except VispruneError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
