"""Online multi-label classification by random label compression."""
from .baselines import Majority, Negative, OnlineBinaryRelevance, OnlineEnsembleClassifierChains
from .compression import Race, RaceConfig, RaceState, default_k, process_batch, race_init
from .data_io import Dataset, StreamConfig, batch_iter, load_dataset, synth_stream
from .harness import ExperimentConfig, RunResult, emit_report, run_prequential, sweep_k
from .metrics import MetricsReport, evaluate

__all__ = [
    "Dataset",
    "ExperimentConfig",
    "Majority",
    "MetricsReport",
    "Negative",
    "OnlineBinaryRelevance",
    "OnlineEnsembleClassifierChains",
    "Race",
    "RaceConfig",
    "RaceState",
    "RunResult",
    "StreamConfig",
    "batch_iter",
    "default_k",
    "emit_report",
    "evaluate",
    "load_dataset",
    "process_batch",
    "race_init",
    "run_prequential",
    "sweep_k",
    "synth_stream",
]
