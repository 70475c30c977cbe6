"""Incremental single-target learners and the Binary Relevance wrapper.

``NaiveBayes`` is an updateable two-class naive Bayes: Gaussian likelihoods
for numeric features (running mean / sum of squared deviations) and
Laplace-smoothed frequencies for nominal ones. ``SgdRegressor`` is a plain
squared-loss linear model trained one instance at a time.

Missing feature values are encoded as NaN and skipped both in training and
in prediction.
"""
from __future__ import annotations

import json
from typing import Mapping

import numpy as np

VARIANCE_FLOOR = 1e-9
SNAPSHOT_VERSION = 1
_LOG_2PI = np.log(2.0 * np.pi)


class NotFittedError(RuntimeError):
    pass


def _check_arity(X: np.ndarray, m: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != m:
        raise ValueError(f"expected {m} features, got {X.shape[1]}")
    return X


class NaiveBayes:
    """Two-class updateable naive Bayes.

    Parameters
    ----------
    n_features : int
        Feature arity, fixed for the lifetime of the model.
    nominal : mapping of feature index -> number of distinct values
        Features listed here are treated as categorical with values
        ``0 .. n_values-1``; all other features are numeric.
    """

    def __init__(self, n_features: int, nominal: Mapping[int, int] | None = None):
        self.n_features = int(n_features)
        self.nominal = {int(i): int(v) for i, v in (nominal or {}).items()}
        for i in self.nominal:
            if not 0 <= i < self.n_features:
                raise ValueError(f"nominal feature index {i} out of range")
        self.numeric = np.array(
            [i for i in range(self.n_features) if i not in self.nominal], dtype=np.intp
        )
        p = len(self.numeric)
        self.class_count = np.zeros(2)
        # per (class, numeric feature): observed count, mean, sum of squared deviations
        self.count = np.zeros((2, p))
        self.mean = np.zeros((2, p))
        self.m2 = np.zeros((2, p))
        self.value_count = {i: np.zeros((2, v)) for i, v in self.nominal.items()}

    @property
    def n_seen(self) -> int:
        return int(self.class_count.sum())

    def update(self, x, y) -> None:
        """Absorb a single instance."""
        self.update_batch(np.asarray(x, dtype=np.float64)[None, :], np.asarray([y]))

    def update_batch(self, X, y) -> None:
        """Absorb rows of ``X`` with binary targets ``y``.

        Per-class statistics of the batch are merged into the running ones
        with the pairwise (Chan et al.) form of Welford's recurrence, which
        gives the same result as feeding the rows one by one.
        """
        X = _check_arity(X, self.n_features)
        y = np.asarray(y).reshape(-1)
        if y.shape[0] != X.shape[0]:
            raise ValueError("X and y have different numbers of rows")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("naive Bayes targets must be 0 or 1")
        for c in (0, 1):
            rows = X[y == c]
            if rows.shape[0] == 0:
                continue
            self.class_count[c] += rows.shape[0]
            if len(self.numeric):
                self._merge_numeric(c, rows[:, self.numeric])
            for i, counts in self.value_count.items():
                col = rows[:, i]
                col = col[~np.isnan(col)].astype(np.intp)
                if col.size and (col.min() < 0 or col.max() >= counts.shape[1]):
                    raise ValueError(f"nominal feature {i} has a value out of range")
                counts[c] += np.bincount(col, minlength=counts.shape[1])

    def _merge_numeric(self, c: int, Z: np.ndarray) -> None:
        present = ~np.isnan(Z)
        nb = present.sum(axis=0).astype(np.float64)
        Zf = np.where(present, Z, 0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            mb = np.where(nb > 0, Zf.sum(axis=0) / nb, 0.0)
        m2b = (np.where(present, Zf - mb, 0.0) ** 2).sum(axis=0)
        na, ma = self.count[c], self.mean[c]
        n = na + nb
        with np.errstate(invalid="ignore", divide="ignore"):
            delta = mb - ma
            self.mean[c] = np.where(n > 0, ma + delta * nb / n, 0.0)
            self.m2[c] = np.where(n > 0, self.m2[c] + m2b + delta**2 * na * nb / n, 0.0)
        self.count[c] = n

    def variance(self) -> np.ndarray:
        """Per (class, numeric feature) sample variance, floored."""
        with np.errstate(invalid="ignore", divide="ignore"):
            var = np.where(self.count > 1, self.m2 / (self.count - 1), 0.0)
        return np.maximum(var, VARIANCE_FLOOR)

    def log_prior(self) -> np.ndarray:
        return np.log((self.class_count + 1.0) / (self.class_count.sum() + 2.0))

    def joint_log_likelihood(self, X) -> np.ndarray:
        """``log P(c) + sum_i log P(x_i | c)`` for each row, shape ``(n, 2)``.

        While one of the classes has never been observed the likelihood terms
        are dropped for both classes and only the smoothed prior is used.
        """
        if self.n_seen == 0:
            raise NotFittedError("naive Bayes model has not been trained")
        X = _check_arity(X, self.n_features)
        jll = np.tile(self.log_prior(), (X.shape[0], 1))
        if np.any(self.class_count == 0):
            return jll
        if len(self.numeric):
            Z = X[:, self.numeric]
            var = self.variance()
            for c in (0, 1):
                ll = -0.5 * (_LOG_2PI + np.log(var[c]) + (Z - self.mean[c]) ** 2 / var[c])
                jll[:, c] += np.where(np.isnan(Z), 0.0, ll).sum(axis=1)
        for i, counts in self.value_count.items():
            col = X[:, i]
            ok = ~np.isnan(col)
            idx = np.where(ok, col, 0).astype(np.intp)
            if np.any(idx[ok] < 0) or np.any(idx[ok] >= counts.shape[1]):
                raise ValueError(f"nominal feature {i} has a value out of range")
            probs = (counts + 1.0) / (counts.sum(axis=1, keepdims=True) + counts.shape[1])
            jll += np.where(ok[:, None], np.log(probs[:, idx].T), 0.0)
        return jll

    def predict_proba(self, X) -> np.ndarray:
        """Posterior probability of class 1 for each row."""
        jll = self.joint_log_likelihood(X)
        return 1.0 / (1.0 + np.exp(np.clip(jll[:, 0] - jll[:, 1], -700, 700)))

    def predict(self, X) -> np.ndarray:
        """Hard 0/1 labels; exact ties go to 0."""
        jll = self.joint_log_likelihood(X)
        return (jll[:, 1] > jll[:, 0]).astype(np.int8)

    def to_dict(self) -> dict:
        return {
            "type": "naive_bayes",
            "n_features": self.n_features,
            "nominal": {str(i): v for i, v in self.nominal.items()},
            "class_count": self.class_count.tolist(),
            "count": self.count.tolist(),
            "mean": self.mean.tolist(),
            "m2": self.m2.tolist(),
            "value_count": {str(i): c.tolist() for i, c in self.value_count.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NaiveBayes":
        model = cls(d["n_features"], {int(i): v for i, v in d["nominal"].items()})
        p = len(model.numeric)
        model.class_count = np.asarray(d["class_count"], dtype=np.float64)
        model.count = np.asarray(d["count"], dtype=np.float64).reshape(2, p)
        model.mean = np.asarray(d["mean"], dtype=np.float64).reshape(2, p)
        model.m2 = np.asarray(d["m2"], dtype=np.float64).reshape(2, p)
        model.value_count = {
            int(i): np.asarray(c, dtype=np.float64) for i, c in d["value_count"].items()
        }
        return model


def nb_update(model: NaiveBayes, x, y) -> None:
    model.update(x, y)


def nb_predict(model: NaiveBayes, x) -> tuple[int, float]:
    """Label and class-1 posterior for a single instance."""
    jll = model.joint_log_likelihood(np.asarray(x, dtype=np.float64)[None, :])[0]
    label = int(jll[1] > jll[0])
    posterior = 1.0 / (1.0 + np.exp(np.clip(jll[0] - jll[1], -700, 700)))
    return label, float(posterior)


class SgdRegressor:
    """Linear regressor trained by one squared-loss gradient step per instance."""

    def __init__(self, n_features: int, learning_rate: float = 1e-4):
        self.n_features = int(n_features)
        self.learning_rate = float(learning_rate)
        self.weights = np.zeros(self.n_features)
        self.bias = 0.0

    def update(self, x, target) -> None:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_features,):
            raise ValueError(f"expected {self.n_features} features, got shape {x.shape}")
        if not (np.all(np.isfinite(x)) and np.isfinite(target)):
            raise ValueError("SGD input contains non-finite values")
        err = self.weights @ x + self.bias - target
        self.weights -= self.learning_rate * err * x
        self.bias -= self.learning_rate * err

    def update_batch(self, X, targets) -> None:
        X = _check_arity(X, self.n_features)
        targets = np.asarray(targets, dtype=np.float64).reshape(-1)
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(targets))):
            raise ValueError("SGD input contains non-finite values")
        w, b, eta = self.weights, self.bias, self.learning_rate
        for x, t in zip(X, targets):
            err = w @ x + b - t
            w -= eta * err * x
            b -= eta * err
        self.bias = b

    def predict(self, X) -> np.ndarray:
        X = _check_arity(X, self.n_features)
        return X @ self.weights + self.bias

    def to_dict(self) -> dict:
        return {
            "type": "sgd",
            "n_features": self.n_features,
            "learning_rate": self.learning_rate,
            "weights": self.weights.tolist(),
            "bias": self.bias,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SgdRegressor":
        model = cls(d["n_features"], d["learning_rate"])
        model.weights = np.asarray(d["weights"], dtype=np.float64)
        model.bias = float(d["bias"])
        return model


def sgd_update(model: SgdRegressor, x, target: float) -> None:
    model.update(x, target)


def sgd_predict(model: SgdRegressor, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise ValueError(f"expected {model.n_features} features, got shape {x.shape}")
    return float(model.weights @ x + model.bias)


class BinaryRelevance:
    """One independent learner per target column.

    ``mode="classification"`` uses :class:`NaiveBayes` on binary targets,
    ``mode="regression"`` uses :class:`SgdRegressor` on real targets.
    """

    def __init__(
        self,
        n_features: int,
        n_targets: int,
        mode: str = "classification",
        nominal: Mapping[int, int] | None = None,
        learning_rate: float = 1e-4,
    ):
        if mode not in ("classification", "regression"):
            raise ValueError(f"unknown mode {mode!r}")
        if n_targets < 1:
            raise ValueError("need at least one target")
        self.mode = mode
        self.n_features = int(n_features)
        if mode == "classification":
            self.learners = [NaiveBayes(n_features, nominal) for _ in range(n_targets)]
        else:
            self.learners = [SgdRegressor(n_features, learning_rate) for _ in range(n_targets)]

    @property
    def n_targets(self) -> int:
        return len(self.learners)

    def update(self, X, T) -> None:
        X = _check_arity(X, self.n_features)
        T = np.asarray(T, dtype=np.float64)
        if T.ndim != 2 or T.shape != (X.shape[0], self.n_targets):
            raise ValueError(
                f"targets have shape {T.shape}, expected ({X.shape[0]}, {self.n_targets})"
            )
        if self.mode == "classification" and not np.all((T == 0) | (T == 1)):
            raise ValueError("classification targets must be binary")
        if self.mode == "regression":
            X = np.nan_to_num(X, nan=0.0)
        for j, learner in enumerate(self.learners):
            learner.update_batch(X, T[:, j])

    def predict(self, X, soft: bool = False) -> np.ndarray:
        """``n x targets`` matrix of hard labels (or posteriors when ``soft``)."""
        X = _check_arity(X, self.n_features)
        if self.mode == "regression":
            X = np.nan_to_num(X, nan=0.0)
        out = np.empty((X.shape[0], self.n_targets))
        for j, learner in enumerate(self.learners):
            if self.mode == "classification" and soft:
                out[:, j] = learner.predict_proba(X)
            else:
                out[:, j] = learner.predict(X)
        return out

    def to_dict(self) -> dict:
        return {
            "version": SNAPSHOT_VERSION,
            "type": "binary_relevance",
            "mode": self.mode,
            "n_features": self.n_features,
            "learners": [m.to_dict() for m in self.learners],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BinaryRelevance":
        if d.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {d.get('version')!r}")
        loader = NaiveBayes if d["mode"] == "classification" else SgdRegressor
        model = cls.__new__(cls)
        model.mode = d["mode"]
        model.n_features = d["n_features"]
        model.learners = [loader.from_dict(m) for m in d["learners"]]
        return model

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "BinaryRelevance":
        return cls.from_dict(json.loads(text))


def br_update(model: BinaryRelevance, X, T) -> None:
    model.update(X, T)


def br_predict(model: BinaryRelevance, X) -> np.ndarray:
    return model.predict(X)
