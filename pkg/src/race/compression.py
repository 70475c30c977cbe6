"""Online random label compression.

Labels ``L`` (n x l, binary) are projected onto ``k`` orthonormal random
directions ``A`` (l x k) to give pseudo labels ``H = L A``. A Binary
Relevance model learns ``X -> H``; a recursive least-squares decoder
``beta`` (k x l) maps predicted pseudo labels back to label space.

Four variants combine the base learner (``cls``: binarized pseudo labels and
naive Bayes, ``reg``: real pseudo labels and SGD) with the encoder policy
(``fixed``, or ``adaptive`` where the encoder is replaced by the transpose of
the previous decoder before each training step).

With ``label_coding="bipolar"`` labels enter the encoder and the decoder
targets as -1/+1 instead of 0/1, so the decoder's ``>= 0`` threshold sits
halfway between the two label values. Predictions are always 0/1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .learners import BinaryRelevance
from .linalg_core import DEFAULT_RIDGE, RlsState, batch_least_squares, gram_schmidt, rls_update

VARIANTS = ("cls-fixed", "cls-adaptive", "reg-fixed", "reg-adaptive")
LABEL_CODINGS = ("binary", "bipolar")


def default_k(l: int) -> int:
    """``ceil(log2 l)``, at least 1."""
    if l < 1:
        raise ValueError("label count must be positive")
    return max(1, (l - 1).bit_length())


@dataclass
class RaceConfig:
    l: int
    k: int | None = None
    variant: str = "cls-adaptive"
    seed: int = 0
    ridge: float = DEFAULT_RIDGE
    decode_threshold: float = 0.0
    learning_rate: float = 1e-4
    soft_predictions: bool = False
    label_coding: str = "binary"
    nominal: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if self.label_coding not in LABEL_CODINGS:
            raise ValueError(f"unknown label coding {self.label_coding!r}")
        if self.k is None:
            self.k = default_k(self.l)
        if not 1 <= self.k <= self.l:
            raise ValueError(f"need 1 <= k <= l, got k={self.k}, l={self.l}")

    @property
    def classification(self) -> bool:
        return self.variant.startswith("cls")

    @property
    def adaptive(self) -> bool:
        return self.variant.endswith("adaptive")


@dataclass
class RaceState:
    config: RaceConfig
    encoder: np.ndarray
    decoder: RlsState
    learners: BinaryRelevance
    # training presentations absorbed, the initialization batch included
    batches_seen: int = 1


def init_encoder(l: int, k: int, seed) -> np.ndarray:
    """Random ``l x k`` encoder with orthonormal columns.

    Entries are drawn uniformly from [-1, 1] and the columns orthonormalized;
    a column that degenerates is redrawn from the same generator.
    """
    if not 1 <= k <= l:
        raise ValueError(f"need 1 <= k <= l, got k={k}, l={l}")
    rng = np.random.default_rng(seed)
    raw = rng.uniform(-1.0, 1.0, size=(l, k))
    return gram_schmidt(raw, regenerate=lambda: rng.uniform(-1.0, 1.0, size=l))


def encode(L, A) -> np.ndarray:
    L = np.asarray(L, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    if L.ndim != 2 or A.ndim != 2 or L.shape[1] != A.shape[0]:
        raise ValueError(f"cannot encode labels {L.shape} with encoder {A.shape}")
    return L @ A


def binarize(H) -> np.ndarray:
    return (np.asarray(H) >= 0).astype(np.float64)


def decode(P, beta, threshold: float = 0.0) -> np.ndarray:
    P = np.asarray(P, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if P.ndim != 2 or beta.ndim != 2 or P.shape[1] != beta.shape[0]:
        raise ValueError(f"cannot decode predictions {P.shape} with decoder {beta.shape}")
    return (P @ beta >= threshold).astype(np.int8)


def adapt_encoder(state: RaceState) -> np.ndarray:
    """Replace the encoder by the transpose of the current decoder."""
    if not state.config.adaptive:
        raise RuntimeError(f"encoder adaptation called on fixed variant {state.config.variant}")
    state.encoder = state.decoder.beta.T.copy()
    return state.encoder


def _code_labels(config: RaceConfig, L) -> np.ndarray:
    L = np.asarray(L, dtype=np.float64)
    return 2.0 * L - 1.0 if config.label_coding == "bipolar" else L


def _pseudo_labels(config: RaceConfig, L, A) -> np.ndarray:
    H = encode(L, A)
    return binarize(H) if config.classification else H


def race_init(config: RaceConfig, X, L) -> RaceState:
    """Initialization on the first batch: encoder, learners and decoder."""
    X = np.asarray(X, dtype=np.float64)
    L = np.asarray(L, dtype=np.float64)
    if X.shape[0] < 1:
        raise ValueError("the initialization batch is empty")
    if L.shape != (X.shape[0], config.l):
        raise ValueError(f"labels have shape {L.shape}, expected ({X.shape[0]}, {config.l})")
    A = init_encoder(config.l, config.k, config.seed)
    L = _code_labels(config, L)
    H = _pseudo_labels(config, L, A)
    learners = BinaryRelevance(
        X.shape[1],
        config.k,
        mode="classification" if config.classification else "regression",
        nominal=config.nominal,
        learning_rate=config.learning_rate,
    )
    learners.update(X, H)
    decoder = batch_least_squares(H, L, config.ridge)
    return RaceState(config=config, encoder=A, decoder=decoder, learners=learners)


def race_predict(state: RaceState, X) -> np.ndarray:
    """Decoded 0/1 label predictions from the current model."""
    P = state.learners.predict(X, soft=state.config.soft_predictions)
    return decode(P, state.decoder.beta, state.config.decode_threshold)


def race_train(state: RaceState, X, L) -> None:
    """One presentation of a labelled batch: adapt, encode, update learners and decoder."""
    if state.config.adaptive:
        adapt_encoder(state)
    L = _code_labels(state.config, L)
    H = _pseudo_labels(state.config, L, state.encoder)
    state.learners.update(X, H)
    state.decoder = rls_update(state.decoder, H, L)
    state.batches_seen += 1


def process_batch(state: RaceState, X, L, iterations: int = 1) -> tuple[np.ndarray, RaceState]:
    """Test-then-train on one batch; the returned predictions precede any training."""
    X = np.asarray(X, dtype=np.float64)
    L = np.asarray(L, dtype=np.float64)
    if X.shape[0] == 0:
        return np.zeros((0, state.config.l), dtype=np.int8), state
    Y = race_predict(state, X)
    for _ in range(iterations):
        race_train(state, X, L)
    return Y, state


class Race:
    """Stream-learner wrapper with the same ``init / predict / train`` surface as the baselines."""

    def __init__(self, config: RaceConfig):
        self.config = config
        self.state: RaceState | None = None

    def init(self, X, L) -> None:
        self.state = race_init(self.config, X, L)

    def predict(self, X) -> np.ndarray:
        return race_predict(self.state, X)

    def train(self, X, L) -> None:
        race_train(self.state, np.asarray(X, dtype=np.float64), np.asarray(L, dtype=np.float64))
