"""Compare RACE variants with the baselines on a synthetic stream and print a ranked table."""
import argparse

from race.harness import ExperimentConfig, SynthSpec, emit_report, run_prequential

METHODS = [("race", "cls-fixed"), ("race", "cls-adaptive"), ("race", "reg-fixed"), ("race", "reg-adaptive"),
           ("obr", "cls-adaptive"), ("oecc", "cls-adaptive"), ("majority", "cls-adaptive"),
           ("negative", "cls-adaptive")]


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--synth", default="m=20,l=16,n=5000,density=0.2,dep=0.6")
    p.add_argument("--window", type=int, default=500)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--label-coding", default="binary", choices=("binary", "bipolar"))
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.add_argument("--out")
    args = p.parse_args()

    ds = SynthSpec.parse(args.synth).build()
    results = []
    for method, variant in METHODS:
        cfg = ExperimentConfig(method=method, variant=variant, window=args.window, runs=args.runs,
                               label_coding=args.label_coding)
        results += run_prequential(cfg, ds)
    text = emit_report(results, args.format, args.out)
    if args.out is None:
        print(text, end="")


if __name__ == "__main__":
    main()
