"""Prequential (test-then-train) experiment driver and report writers."""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

import numpy as np

from .baselines import Majority, Negative, OnlineBinaryRelevance, OnlineEnsembleClassifierChains
from .compression import VARIANTS, Race, RaceConfig, default_k
from .data_io import Dataset, StreamConfig, batch_iter, load_dataset, synth_stream
from .metrics import METRICS, MetricsReport, aggregate, evaluate, mean_report, rank_table

METHODS = ("race", "obr", "oecc", "majority", "negative")
CSV_COLUMNS = ("dataset", "method", "variant", "metric", "mean", "std", "rank")
REPORT_METRICS = METRICS + ("runtime_seconds",)


class StreamError(RuntimeError):
    """The stream changed shape mid-run."""

    def __init__(self, message: str, batch: int):
        self.batch = batch
        super().__init__(f"batch {batch}: {message}")


@dataclass
class SynthSpec:
    m: int = 20
    l: int = 16
    n: int = 5000
    density: float = 0.2
    dep: float = 0.6
    seed: int = 0

    @classmethod
    def parse(cls, text: str) -> "SynthSpec":
        """Parse ``m=..,l=..,n=..,density=..,dep=..[,seed=..]``."""
        spec = cls()
        for item in filter(None, (s.strip() for s in text.split(","))):
            key, sep, value = item.partition("=")
            if not sep or key not in ("m", "l", "n", "density", "dep", "seed"):
                raise ValueError(f"bad synthetic parameter {item!r}")
            setattr(spec, key, float(value) if key in ("density", "dep") else int(value))
        return spec

    def build(self) -> Dataset:
        return synth_stream(self.seed, self.n, self.m, self.l, self.density, self.dep)


@dataclass
class ExperimentConfig:
    method: str = "race"
    variant: str = "cls-adaptive"
    k: int | None = None
    window: int = 50
    runs: int = 10
    seed: int = 0
    iter: int = 1
    label_coding: str = "binary"
    decode_threshold: float = 0.0
    data: str | None = None
    labels: str | None = None
    synth: SynthSpec | None = None
    output_format: str = "csv"
    out: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.runs < 1 or self.iter < 1 or self.window < 1:
            raise ValueError("runs, iter and window must all be at least 1")
        if self.output_format not in ("csv", "json"):
            raise ValueError("output format must be csv or json")

    @property
    def descriptor(self) -> str:
        if self.method != "race":
            return self.method
        return f"race({self.variant})"

    def load(self) -> Dataset:
        if self.synth is not None:
            return self.synth.build()
        if self.data is None or self.labels is None:
            raise ValueError("need either --synth or both --data and --labels")
        return load_dataset(self.data, self.labels)


@dataclass
class RunResult:
    dataset: str
    method: str
    variant: str
    seed: int
    k: int | None
    batches: list[MetricsReport]
    aggregate: MetricsReport
    runtime_seconds: float

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "method": self.method,
            "variant": self.variant,
            "seed": self.seed,
            "k": self.k,
            "runtime_seconds": self.runtime_seconds,
            "aggregate": self.aggregate.to_dict(),
            "batches": [b.to_dict() for b in self.batches],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunResult":
        return cls(
            dataset=d["dataset"],
            method=d["method"],
            variant=d["variant"],
            seed=d["seed"],
            k=d["k"],
            batches=[MetricsReport.from_dict(b) for b in d["batches"]],
            aggregate=MetricsReport.from_dict(d["aggregate"]),
            runtime_seconds=d["runtime_seconds"],
        )


def make_method(config: ExperimentConfig, ds: Dataset, seed: int):
    nominal = ds.nominal_features()
    if config.method == "race":
        rc = RaceConfig(
            l=ds.l,
            k=config.k,
            variant=config.variant,
            seed=seed,
            decode_threshold=config.decode_threshold,
            label_coding=config.label_coding,
            nominal=nominal,
        )
        return Race(rc)
    if config.method == "obr":
        return OnlineBinaryRelevance(ds.l, nominal)
    if config.method == "oecc":
        return OnlineEnsembleClassifierChains(ds.l, seed=seed, nominal=nominal)
    if config.method == "majority":
        return Majority(ds.l)
    return Negative(ds.l)


def prequential(method, batches: Iterable, iterations: int = 1) -> tuple[list[MetricsReport], float]:
    """Replay ``batches`` test-then-train through ``method``.

    The first batch only initializes the method and is not scored. Returns
    the per-batch reports and the wall-clock time spent inside the method.
    """
    reports: list[MetricsReport] = []
    elapsed = 0.0
    arity = None
    for i, batch in enumerate(batches):
        X, L = batch.X, batch.L
        if arity is None:
            arity = (X.shape[1], L.shape[1])
        elif (X.shape[1], L.shape[1]) != arity:
            raise StreamError(
                f"shape changed from {arity[0]} features/{arity[1]} labels "
                f"to {X.shape[1]}/{L.shape[1]}",
                i,
            )
        if X.shape[0] == 0:
            continue
        if i == 0:
            t0 = time.perf_counter()
            method.init(X, L)
            for _ in range(iterations - 1):
                method.train(X, L)
            elapsed += time.perf_counter() - t0
            continue
        t0 = time.perf_counter()
        Y = method.predict(X)
        t1 = time.perf_counter()
        reports.append(evaluate(L, Y))
        t2 = time.perf_counter()
        for _ in range(iterations):
            method.train(X, L)
        elapsed += (t1 - t0) + (time.perf_counter() - t2)
    return reports, elapsed


def run_prequential(config: ExperimentConfig, ds: Dataset | None = None) -> list[RunResult]:
    """``config.runs`` independent runs with seeds ``config.seed + r``."""
    if ds is None:
        ds = config.load()
    k = (config.k or default_k(ds.l)) if config.method == "race" else None
    results = []
    for r in range(config.runs):
        seed = config.seed + r
        method = make_method(config, ds, seed)
        reports, elapsed = prequential(
            method, batch_iter(ds, StreamConfig(config.window)), config.iter
        )
        results.append(
            RunResult(
                dataset=ds.name,
                method=config.method,
                variant=config.variant if config.method == "race" else "",
                seed=seed,
                k=k,
                batches=reports,
                aggregate=mean_report(reports, elapsed),
                runtime_seconds=elapsed,
            )
        )
    return results


# ----------------------------------------------------------------- reports

def _group(results: list[RunResult]) -> dict[tuple[str, str, str], list[RunResult]]:
    groups: dict[tuple[str, str, str], list[RunResult]] = {}
    for r in results:
        groups.setdefault((r.dataset, r.method, r.variant), []).append(r)
    return groups


def summary_rows(results: list[RunResult], metrics=REPORT_METRICS) -> list[dict]:
    """One row per (dataset, method, variant, metric) with mean, std and rank."""
    groups = _group(results)
    stats = {}
    for key, runs in groups.items():
        means, stds = aggregate([r.aggregate for r in runs])
        stats[key] = (means, stds)
    rows = []
    for dataset in dict.fromkeys(k[0] for k in groups):
        keys = [k for k in groups if k[0] == dataset]
        ranks = rank_table({k: {m: stats[k][0][m] for m in metrics} for k in keys})
        for key in keys:
            for m in metrics:
                rows.append(
                    {
                        "dataset": key[0],
                        "method": key[1],
                        "variant": key[2],
                        "metric": m,
                        "mean": stats[key][0][m],
                        "std": stats[key][1][m],
                        "rank": ranks[key][m],
                    }
                )
    return rows


def format_csv(results: list[RunResult]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in summary_rows(results):
        writer.writerow({**row, "mean": repr(row["mean"]), "std": repr(row["std"])})
    return buf.getvalue()


def format_json(results: list[RunResult]) -> str:
    doc = {
        "columns": list(CSV_COLUMNS),
        "summary": summary_rows(results),
        "runs": [r.to_dict() for r in results],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def emit_report(results: list[RunResult], fmt: str = "csv", path=None) -> str:
    """Render ``results`` as CSV or JSON; write to ``path`` when given."""
    if fmt == "csv":
        text = format_csv(results)
    elif fmt == "json":
        text = format_json(results)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        path = Path(path)
        try:
            path.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
    return text


def load_json_report(text: str) -> list[RunResult]:
    return [RunResult.from_dict(d) for d in json.loads(text)["runs"]]


def mask_runtime(text: str, fmt: str = "csv") -> str:
    """Drop wall-clock fields so two reports can be compared byte for byte."""
    if fmt == "csv":
        return "".join(
            line for line in text.splitlines(keepends=True) if ",runtime_seconds," not in line
        )

    def strip(node):
        if isinstance(node, dict):
            if node.get("metric") == "runtime_seconds":
                return None
            return {k: strip(v) for k, v in node.items() if k != "runtime_seconds"}
        if isinstance(node, list):
            return [x for x in (strip(v) for v in node) if x is not None]
        return node

    return json.dumps(strip(json.loads(text)), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------- k sweep

@dataclass
class SweepPoint:
    k: int
    means: dict[str, float]
    stds: dict[str, float]
    results: list[RunResult] = field(repr=False, default_factory=list)


def sweep_k(config: ExperimentConfig, k_values, ds: Dataset | None = None) -> list[SweepPoint]:
    """Run the RACE experiment once per reduced label size."""
    if config.method != "race":
        raise ValueError("sweep_k applies to the race method only")
    if ds is None:
        ds = config.load()
    points = []
    for k in k_values:
        results = run_prequential(replace(config, k=int(k)), ds)
        means, stds = aggregate([r.aggregate for r in results])
        points.append(SweepPoint(int(k), means, stds, results))
    return points


def sweep_range(l: int, k_min: int | None = None, k_max: int | None = None) -> list[int]:
    """Default sweep from ``ceil(log2 l)`` to its square, capped at ``l``."""
    base = default_k(l)
    lo = k_min if k_min is not None else base
    hi = k_max if k_max is not None else base * base
    hi = min(hi, l)
    if lo < 1 or lo > hi:
        raise ValueError(f"empty k range [{lo}, {hi}]")
    return list(range(lo, hi + 1))


def format_sweep(points: list[SweepPoint], fmt: str = "csv", dataset: str = "", variant: str = "") -> str:
    if fmt == "json":
        doc = {
            "dataset": dataset,
            "variant": variant,
            "k": [p.k for p in points],
            "series": {m: [p.means[m] for p in points] for m in REPORT_METRICS},
            "std": {m: [p.stds[m] for p in points] for m in REPORT_METRICS},
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["dataset", "variant", "k", "metric", "mean", "std"])
    for p in points:
        for m in REPORT_METRICS:
            writer.writerow([dataset, variant, p.k, m, repr(p.means[m]), repr(p.stds[m])])
    return buf.getvalue()
