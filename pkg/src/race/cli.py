"""Command-line entry point: ``race run`` and ``race sweep-k``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .compression import LABEL_CODINGS, VARIANTS
from .harness import (
    METHODS,
    ExperimentConfig,
    SynthSpec,
    emit_report,
    format_sweep,
    run_prequential,
    sweep_k,
    sweep_range,
)

log = logging.getLogger("race")


def _common(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="ARFF file")
    src.add_argument("--synth", help="synthetic stream: m=..,l=..,n=..,density=..,dep=..[,seed=..]")
    p.add_argument("--labels", help="Mulan label XML (with --data)")
    p.add_argument("--variant", choices=VARIANTS, default="cls-adaptive")
    p.add_argument("--window", type=int, default=50)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iter", type=int, default=1, help="presentations per batch")
    p.add_argument("--label-coding", choices=LABEL_CODINGS, default="binary",
                   help="label values seen by encoder and decoder: 0/1 or -1/+1")
    p.add_argument("--decode-threshold", type=float, default=0.0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="race", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="prequential evaluation of one method")
    _common(run)
    run.add_argument("--method", choices=METHODS, default="race")
    run.add_argument("--k", type=int, help="reduced label size (default ceil(log2 l))")

    sweep = sub.add_parser("sweep-k", help="RACE metrics as a function of k")
    _common(sweep)
    sweep.add_argument("--k-min", type=int)
    sweep.add_argument("--k-max", type=int)
    return parser


def _config(args, method: str, k=None) -> ExperimentConfig:
    if args.data and not args.labels:
        raise ValueError("--data requires --labels")
    return ExperimentConfig(
        method=method,
        variant=args.variant,
        k=k,
        window=args.window,
        runs=args.runs,
        seed=args.seed,
        iter=args.iter,
        label_coding=args.label_coding,
        decode_threshold=args.decode_threshold,
        data=args.data,
        labels=args.labels,
        synth=SynthSpec.parse(args.synth) if args.synth else None,
        output_format=args.format,
        out=args.out,
    )


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            config = _config(args, args.method, args.k)
            ds = config.load()
            log.info("loaded %s: n=%d m=%d l=%d", ds.name, ds.n, ds.m, ds.l)
            results = run_prequential(config, ds)
            text = emit_report(results, config.output_format, config.out)
            if config.out is None:
                sys.stdout.write(text)
        else:
            config = _config(args, "race")
            ds = config.load()
            ks = sweep_range(ds.l, args.k_min, args.k_max)
            log.info("sweeping k over %s", ks)
            points = sweep_k(config, ks, ds)
            _write(format_sweep(points, config.output_format, ds.name, config.variant), config.out)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"race: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
