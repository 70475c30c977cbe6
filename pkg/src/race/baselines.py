"""Comparison methods for the prequential harness.

Every method exposes ``init(X, L)``, ``predict(X)`` and ``train(X, L)``;
``process_batch`` runs the test-then-train step shared by all of them.
"""
from __future__ import annotations

from typing import Mapping

import numpy as np

from .learners import BinaryRelevance, NaiveBayes

OECC_ENSEMBLE_SIZE = 5


def process_batch(method, X, L, iterations: int = 1) -> np.ndarray:
    """Predict on ``X`` first, then train ``iterations`` times on ``(X, L)``."""
    X = np.asarray(X, dtype=np.float64)
    L = np.asarray(L, dtype=np.float64)
    if X.shape[0] == 0:
        return np.zeros((0, L.shape[1] if L.ndim == 2 else 0), dtype=np.int8)
    Y = method.predict(X)
    for _ in range(iterations):
        method.train(X, L)
    return Y


class OnlineBinaryRelevance:
    """One naive Bayes per original label."""

    def __init__(self, l: int, nominal: Mapping[int, int] | None = None):
        self.l = l
        self.nominal = dict(nominal or {})
        self.model: BinaryRelevance | None = None

    def init(self, X, L) -> None:
        X = np.asarray(X, dtype=np.float64)
        self.model = BinaryRelevance(X.shape[1], self.l, "classification", self.nominal)
        self.train(X, L)

    def predict(self, X) -> np.ndarray:
        return self.model.predict(X).astype(np.int8)

    def train(self, X, L) -> None:
        self.model.update(X, L)


class ClassifierChain:
    """Naive Bayes links in a fixed label order.

    Link ``j`` sees the original features followed by the labels of links
    ``0 .. j-1`` (as binary nominal features). Training feeds the true
    labels forward, prediction feeds the chain's own hard predictions.
    """

    def __init__(self, n_features: int, order, nominal: Mapping[int, int] | None = None):
        self.order = np.asarray(order, dtype=np.intp)
        self.n_features = n_features
        base = dict(nominal or {})
        self.links = []
        for j in range(len(self.order)):
            link_nominal = dict(base)
            link_nominal.update({n_features + p: 2 for p in range(j)})
            self.links.append(NaiveBayes(n_features + j, link_nominal))

    def train(self, X, L) -> None:
        X = np.asarray(X, dtype=np.float64)
        Lo = np.asarray(L, dtype=np.float64)[:, self.order]
        for j, link in enumerate(self.links):
            link.update_batch(np.hstack([X, Lo[:, :j]]), Lo[:, j])

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        n, l = X.shape[0], len(self.order)
        pred = np.zeros((n, l))
        for j, link in enumerate(self.links):
            pred[:, j] = link.predict(np.hstack([X, pred[:, :j]]))
        Y = np.zeros((n, l), dtype=np.int8)
        Y[:, self.order] = pred
        return Y


class OnlineEnsembleClassifierChains:
    """Vote of ``size`` classifier chains with independently shuffled label orders."""

    def __init__(
        self,
        l: int,
        seed=0,
        size: int = OECC_ENSEMBLE_SIZE,
        nominal: Mapping[int, int] | None = None,
        orders=None,
    ):
        self.l = l
        self.nominal = dict(nominal or {})
        if orders is None:
            rng = np.random.default_rng(seed)
            orders = [rng.permutation(l) for _ in range(size)]
        self.orders = [np.asarray(o, dtype=np.intp) for o in orders]
        self.chains: list[ClassifierChain] = []

    def init(self, X, L) -> None:
        m = np.asarray(X).shape[1]
        self.chains = [ClassifierChain(m, o, self.nominal) for o in self.orders]
        self.train(X, L)

    def predict(self, X) -> np.ndarray:
        votes = np.mean([c.predict(X) for c in self.chains], axis=0)
        return (votes >= 0.5).astype(np.int8)

    def train(self, X, L) -> None:
        for chain in self.chains:
            chain.train(X, L)


class Majority:
    """Predicts the ``floor(c)`` most frequent labels, ``c`` being the last batch's cardinality."""

    def __init__(self, l: int):
        self.l = l
        self.cardinality: float | None = None
        self.counts = np.zeros(l)

    def init(self, X, L) -> None:
        self.train(X, L)

    def positive_labels(self) -> np.ndarray:
        if self.cardinality is None:
            return np.zeros(0, dtype=np.intp)
        top = min(max(int(np.floor(self.cardinality)), 0), self.l)
        # stable sort on negated counts keeps lower label indices first among ties
        return np.argsort(-self.counts, kind="stable")[:top]

    def predict(self, X) -> np.ndarray:
        Y = np.zeros((np.asarray(X).shape[0], self.l), dtype=np.int8)
        Y[:, self.positive_labels()] = 1
        return Y

    def train(self, X, L) -> None:
        L = np.asarray(L, dtype=np.float64)
        if L.shape[0] == 0:
            return
        self.cardinality = float(L.sum(axis=1).mean())
        self.counts += L.sum(axis=0)


class Negative:
    """Always predicts the empty label set."""

    def __init__(self, l: int):
        self.l = l

    def init(self, X, L) -> None:
        pass

    def predict(self, X) -> np.ndarray:
        return np.zeros((np.asarray(X).shape[0], self.l), dtype=np.int8)

    def train(self, X, L) -> None:
        pass


def obr_process_batch(state: OnlineBinaryRelevance, X, L):
    return process_batch(state, X, L), state


def oecc_process_batch(state: OnlineEnsembleClassifierChains, X, L):
    return process_batch(state, X, L), state


def majority_process_batch(state: Majority, X, L):
    return process_batch(state, X, L), state


def negative_process_batch(state: Negative, X, L):
    return process_batch(state, X, L), state
