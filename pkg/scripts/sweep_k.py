"""Metric-versus-k series for RACE, from ceil(log2 l) up to its square by default."""
import argparse

from race.harness import ExperimentConfig, SynthSpec, format_sweep, sweep_k, sweep_range


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--synth", default="m=20,l=53,n=2000,density=0.06,dep=0.6")
    p.add_argument("--variant", default="reg-fixed")
    p.add_argument("--window", type=int, default=100)
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--k-min", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    args = p.parse_args()

    cfg = ExperimentConfig(method="race", variant=args.variant, window=args.window, runs=args.runs,
                           synth=SynthSpec.parse(args.synth))
    ds = cfg.load()
    points = sweep_k(cfg, sweep_range(ds.l, args.k_min, args.k_max), ds)
    print(format_sweep(points, args.format, ds.name, args.variant), end="")


if __name__ == "__main__":
    main()
