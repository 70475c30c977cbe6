"""Across-batch variance of RACE metrics with one versus several presentations per batch."""
import argparse

import numpy as np

from race.harness import ExperimentConfig, SynthSpec, run_prequential


def across_batch_variance(results, metric):
    return float(np.mean([np.var([getattr(b, metric) for b in r.batches], ddof=1) for r in results]))


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--synth", default="m=20,l=16,n=5000,density=0.2,dep=0.6")
    p.add_argument("--variant", default="cls-adaptive")
    p.add_argument("--window", type=int, default=500)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--iters", type=int, nargs="+", default=[1, 3])
    args = p.parse_args()

    ds = SynthSpec.parse(args.synth).build()
    metrics = ("example_accuracy", "hamming_loss", "micro_f1")
    print("iter," + ",".join(f"{m}_mean,{m}_var" for m in metrics))
    for it in args.iters:
        cfg = ExperimentConfig(method="race", variant=args.variant, window=args.window, runs=args.runs, iter=it)
        res = run_prequential(cfg, ds)
        cells = []
        for m in metrics:
            cells.append(repr(float(np.mean([getattr(r.aggregate, m) for r in res]))))
            cells.append(repr(across_batch_variance(res, m)))
        print(f"{it}," + ",".join(cells))


if __name__ == "__main__":
    main()
