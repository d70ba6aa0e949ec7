"""G-optimal experimental design over a finite action set.

The solver runs Frank-Wolfe with away steps on the log-det (D-optimal)
objective. By the Kiefer-Wolfowitz equivalence the D-optimal design is also
G-optimal, and ``max_a a^T M(Q)^{-1} a`` doubles as the stopping certificate:
it is never below ``d`` and equals ``d`` exactly at the optimum.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.linalg

from .errors import RankDeficient, Singular
from .model import ActionSet

logger = logging.getLogger(__name__)

PRUNE_THRESHOLD = 1e-7


@dataclass(frozen=True)
class DesignWeights:
    """A design ``Q`` over action indices.

    ``dim`` is the dimension the design was solved in: the ambient ``d`` for
    spanning sets, the rank of the span when solved in a subspace.
    """

    weights: dict[int, float]
    g_value: float
    duality_gap: float
    dim: int
    converged: bool = True
    iterations: int = 0

    @property
    def support(self) -> list[int]:
        return sorted(self.weights)

    def as_array(self, K: int) -> np.ndarray:
        w = np.zeros(K)
        for i, q in self.weights.items():
            w[i] = q
        return w

    def to_json(self) -> str:
        support = self.support
        return json.dumps(
            {
                "support": support,
                "weights": [self.weights[i] for i in support],
                "g": self.g_value,
                "gap": self.duality_gap,
            }
        )


def _as_matrix(actions: ActionSet | np.ndarray) -> np.ndarray:
    if isinstance(actions, ActionSet):
        return actions.vectors
    x = np.asarray(actions, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def _leverages(X: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``a^T M(w)^{-1} a`` for every row ``a`` of ``X``."""
    M = X.T @ (w[:, None] * X)
    try:
        c = scipy.linalg.cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise Singular("moment matrix M(Q) is not positive definite") from exc
    Z = scipy.linalg.cho_solve(c, X.T, check_finite=False)
    return np.einsum("ij,ji->i", X, Z)


def g_of(actions: ActionSet | np.ndarray, weights: Mapping[int, float] | np.ndarray) -> float:
    """Evaluate ``g(Q) = max_a a^T (sum_b Q(b) b b^T)^{-1} a``."""
    X = _as_matrix(actions)
    if isinstance(weights, Mapping):
        w = np.zeros(X.shape[0])
        for i, q in weights.items():
            w[int(i)] = q
    else:
        w = np.asarray(weights, dtype=float)
    return float(_leverages(X, w).max())


def _initial_basis(X: np.ndarray) -> np.ndarray:
    # column pivoting on X^T ranks actions by how much new direction they add
    _, _, piv = scipy.linalg.qr(X.T, pivoting=True, mode="economic")
    return np.sort(piv[: X.shape[1]])


def _frank_wolfe(X: np.ndarray, tolerance: float, max_iters: int) -> tuple[np.ndarray, float, bool, int]:
    K, d = X.shape
    w = np.zeros(K)
    w[_initial_basis(X)] = 1.0 / d
    target = d * (1.0 + tolerance)

    best_w, best_g = w.copy(), np.inf
    for it in range(max_iters + 1):
        g = _leverages(X, w)
        j = int(np.argmax(g))
        g_max = float(g[j])
        if g_max < best_g:
            best_w, best_g = w.copy(), g_max
        if g_max <= target:
            return w, g_max, True, it
        if it == max_iters:
            break

        on = np.flatnonzero(w > 0)
        i = int(on[np.argmin(g[on])])
        g_min = float(g[i])
        if g_max - d >= d - g_min:
            gamma = (g_max / d - 1.0) / (g_max - 1.0)
            w *= 1.0 - gamma
            w[j] += gamma
        else:
            gamma_cap = w[i] / (1.0 - w[i])
            gamma = gamma_cap if g_min <= 1.0 else min((d - g_min) / (d * (g_min - 1.0)), gamma_cap)
            w *= 1.0 + gamma
            w[i] -= gamma
            if gamma == gamma_cap or w[i] < 0:
                w[i] = 0.0
        w /= w.sum()

    logger.warning("G-optimal design did not reach tolerance in %d iterations (g=%.6g, d=%d)", max_iters, best_g, d)
    return best_w, best_g, False, max_iters


def _vech_columns(X: np.ndarray) -> np.ndarray:
    d = X.shape[1]
    iu = np.triu_indices(d)
    return np.stack([np.outer(a, a)[iu] for a in X], axis=1)


def _reduce_support(X: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Caratheodory reduction to at most ``d(d+1)/2`` atoms.

    Moves along a null direction of the moment map, so ``M(Q)`` is unchanged
    before renormalization; the sign is chosen so the total mass does not grow,
    hence renormalizing can only lower ``g``.
    """
    d = X.shape[1]
    cap = d * (d + 1) // 2
    w = w.copy()
    while np.count_nonzero(w) > cap:
        on = np.flatnonzero(w > 0)
        _, _, vt = np.linalg.svd(_vech_columns(X[on]))
        v = vt[-1]
        if v.sum() > 0:
            v = -v
        neg = v < 0
        ratios = w[on][neg] / -v[neg]
        k = int(np.argmin(ratios))
        w[on] += ratios[k] * v
        w[on[np.flatnonzero(neg)[k]]] = 0.0
        w[w < 0] = 0.0
        w /= w.sum()
    return w


def _prune(X: np.ndarray, w: np.ndarray, g_before: float, tolerance: float) -> tuple[np.ndarray, float]:
    d = X.shape[1]
    pruned = np.where(w < PRUNE_THRESHOLD, 0.0, w)
    pruned /= pruned.sum()
    if np.count_nonzero(pruned) > d * (d + 1) // 2:
        pruned = _reduce_support(X, pruned)
    try:
        g_after = float(_leverages(X, pruned).max())
    except Singular:
        return w, g_before
    if g_after > g_before + tolerance * d:
        return w, g_before
    return pruned, g_after


def _spanning_design(X: np.ndarray, tolerance: float, max_iters: int) -> tuple[np.ndarray, float, bool, int]:
    w, g, converged, iters = _frank_wolfe(X, tolerance, max_iters)
    w, g = _prune(X, w, g, tolerance)
    return w, g, converged, iters


def solve_g_optimal(
    actions: ActionSet | np.ndarray,
    tolerance: float = 1e-3,
    max_iters: int | None = None,
    *,
    subspace: bool = False,
) -> DesignWeights:
    """Near G-optimal design with ``g(Q) <= dim * (1 + tolerance)``.

    Raises :class:`RankDeficient` when the actions do not span ``R^d``, unless
    ``subspace`` is set, in which case the design is solved in the span of the
    actions and ``g`` is measured there (its optimum is then the rank).
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    X = _as_matrix(actions)
    K, d = X.shape
    if max_iters is None:
        max_iters = 10 * K * d

    rank = int(np.linalg.matrix_rank(X))
    if rank < d:
        if not subspace:
            raise RankDeficient(rank, d)
        if rank == 0:
            return DesignWeights({0: 1.0}, 0.0, 0.0, dim=0)
        _, _, vt = np.linalg.svd(X, full_matrices=False)
        X = X @ vt[:rank].T
        d = rank

    w, g, converged, iters = _spanning_design(X, tolerance, max_iters)
    weights = {int(i): float(w[i]) for i in np.flatnonzero(w)}
    return DesignWeights(weights, g, max(g - d, 0.0), dim=d, converged=converged, iterations=iters)
