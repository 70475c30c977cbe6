"""Dense least-squares primitives for the label decoder.

Matrices are plain ``numpy`` float64 arrays. The decoder state keeps the
inverse Gram matrix ``K = (H^T H + ridge I)^-1`` together with the decoding
matrix ``beta`` so that new batches are absorbed with a Woodbury update
instead of a fresh inversion.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

DEFAULT_RIDGE = 1e-6
DEGENERATE_NORM = 1e-12
# reciprocal condition number below which a Gram matrix is treated as singular
_RCOND = 1e-14
_MAX_REGENERATIONS = 100


class DegenerateColumnError(ValueError):
    """A Gram-Schmidt column collapsed to (numerically) zero."""


class SingularMatrixError(np.linalg.LinAlgError):
    """A matrix that must be inverted is (numerically) singular."""


@dataclass
class RlsState:
    """Recursive least-squares decoder: ``K`` (k x k), ``beta`` (k x l), rows absorbed."""

    K: np.ndarray
    beta: np.ndarray
    seen: int

    @property
    def k(self) -> int:
        return self.K.shape[0]

    @property
    def l(self) -> int:
        return self.beta.shape[1]

    def copy(self) -> "RlsState":
        return RlsState(self.K.copy(), self.beta.copy(), self.seen)


def _as_matrix(a, name: str) -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def _symmetrize(K: np.ndarray) -> np.ndarray:
    return 0.5 * (K + K.T)


def _solve(A: np.ndarray, B: np.ndarray, name: str, check_cond: bool = True) -> np.ndarray:
    """Solve ``A X = B`` by pivoted LU, rejecting singular ``A``."""
    try:
        X = np.linalg.solve(A, B)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"{name} is singular") from exc
    if not np.all(np.isfinite(X)) or (check_cond and 1.0 / np.linalg.cond(A, 1) < _RCOND):
        raise SingularMatrixError(f"{name} is numerically singular")
    return X


def gram_schmidt(
    columns: Sequence[np.ndarray] | np.ndarray,
    regenerate: Callable[[], np.ndarray] | None = None,
) -> np.ndarray:
    """Orthonormalize ``k`` vectors of length ``l`` into an ``l x k`` matrix.

    ``columns`` is either a sequence of 1-d vectors or an ``l x k`` array
    whose columns are the vectors. Each vector has the projections onto the
    previously accepted directions subtracted one at a time, then is scaled
    to unit norm.

    If a vector collapses below ``1e-12`` in norm it is replaced by a fresh
    draw from ``regenerate`` and retried. Without ``regenerate`` a
    :class:`DegenerateColumnError` is raised.
    """
    if isinstance(columns, np.ndarray) and columns.ndim == 2:
        vecs = [columns[:, i] for i in range(columns.shape[1])]
    else:
        vecs = [np.asarray(c, dtype=np.float64) for c in columns]
    if not vecs:
        raise ValueError("gram_schmidt needs at least one column")
    l = vecs[0].shape[0]
    k = len(vecs)
    if k > l:
        raise ValueError(f"cannot orthonormalize {k} vectors in R^{l}")

    out = np.empty((l, k))
    for i, a in enumerate(vecs):
        a = np.asarray(a, dtype=np.float64)
        if a.shape != (l,):
            raise ValueError(f"column {i} has shape {a.shape}, expected ({l},)")
        for _ in range(_MAX_REGENERATIONS):
            v = a.copy()
            for j in range(i):
                v -= (out[:, j] @ v) * out[:, j]
            norm = np.linalg.norm(v)
            if norm >= DEGENERATE_NORM:
                break
            if regenerate is None:
                raise DegenerateColumnError(
                    f"column {i} is linearly dependent on the previous columns"
                )
            a = np.asarray(regenerate(), dtype=np.float64)
        else:
            raise DegenerateColumnError(
                f"column {i} stayed degenerate after {_MAX_REGENERATIONS} redraws"
            )
        out[:, i] = v / norm
    return out


def batch_least_squares(H, L, ridge: float = DEFAULT_RIDGE) -> RlsState:
    """One-shot ridge least squares ``beta = (H^T H + ridge I)^-1 H^T L``."""
    H = _as_matrix(H, "H")
    L = _as_matrix(L, "L")
    if H.shape[0] != L.shape[0]:
        raise ValueError(f"H has {H.shape[0]} rows but L has {L.shape[0]}")
    if H.shape[0] < 1:
        raise ValueError("batch_least_squares needs at least one row")
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    k = H.shape[1]
    gram = H.T @ H + ridge * np.eye(k)
    K = _symmetrize(_solve(gram, np.eye(k), "Gram matrix H^T H + ridge*I"))
    beta = K @ (H.T @ L)
    return RlsState(K=K, beta=beta, seen=H.shape[0])


def rls_update(state: RlsState, H_new, L_new) -> RlsState:
    """Absorb a batch ``(H_new, L_new)`` via the Woodbury identity.

    Returns a new state; ``state`` itself is left untouched.
    """
    H = _as_matrix(H_new, "H_new")
    L = _as_matrix(L_new, "L_new")
    n = H.shape[0]
    if n < 1:
        raise ValueError("rls_update needs at least one row")
    if H.shape[1] != state.k:
        raise ValueError(f"H_new has {H.shape[1]} columns, decoder expects {state.k}")
    if L.shape != (n, state.l):
        raise ValueError(f"L_new has shape {L.shape}, expected ({n}, {state.l})")

    K = state.K
    # K - K H^T (I_n + H K H^T)^-1 H K  ==  (I_k + K H^T H)^-1 K  (push-through);
    # the right-hand form avoids subtracting two nearly equal matrices when K is large
    K_new = _solve(np.eye(state.k) + K @ (H.T @ H), K, "I + K H^T H", check_cond=False)
    K_new = _symmetrize(K_new)
    beta = state.beta + K_new @ (H.T @ (L - H @ state.beta))
    if not np.all(np.isfinite(beta)):
        raise FloatingPointError("decoder update produced non-finite values")
    return RlsState(K=K_new, beta=beta, seen=state.seen + n)
