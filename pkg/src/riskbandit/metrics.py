"""Mean-variance gaps, intermediate regret and the empirical variance split."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import MVInstance


@dataclass(frozen=True, eq=False)
class GapTable:
    mu: np.ndarray
    sigma2: np.ndarray
    best_index: int
    Delta: np.ndarray
    Gamma: np.ndarray


def gap_table(instance: MVInstance) -> GapTable:
    mu = instance.means
    sigma2 = instance.variances
    mv = sigma2 - instance.rho * mu
    best = int(np.argmin(mv))
    delta = mv - mv[best]
    delta[best] = 0.0
    return GapTable(mu, sigma2, best, np.maximum(delta, 0.0), mu[:, None] - mu[None, :])


def mean_variance(rewards, rho: float) -> float:
    """Cumulative mean-variance: sum of squared deviations minus ``rho`` times the sum."""
    x = np.asarray(rewards, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("mean_variance of an empty reward sequence")
    return float(np.sum((x - x.mean()) ** 2) - rho * x.sum())


def regret_from_counts(counts: np.ndarray, gaps: GapTable, T: int | None = None) -> float:
    """``sum_a tau_a Delta_a + (1/T) sum_{a != b} tau_a tau_b Gamma_{a,b}^2``.

    The pair sum equals ``2 T sum_a tau_a (mu_a - mu_bar)^2`` with ``mu_bar`` the
    count-weighted mean, which is what gets evaluated.
    """
    tau = np.asarray(counts, dtype=float)
    total = tau.sum()
    if T is None:
        T = total
    if total != T:
        raise ValueError(f"pull counts sum to {total:g}, expected T = {T}")
    if T == 0:
        return 0.0
    on = tau > 0
    mu = gaps.mu[on]
    w = tau[on]
    mu_bar = w @ mu / total
    pair = 2.0 * total * (w @ (mu - mu_bar) ** 2)
    return float(w @ gaps.Delta[on] + pair / T)


def intermediate_regret(traj, gaps: GapTable, T: int | None = None) -> float:
    counts = traj.pull_counts if hasattr(traj, "pull_counts") else np.asarray(traj)
    return regret_from_counts(counts, gaps, T)


def regret_curve(chosen: np.ndarray, gaps: GapTable, checkpoints) -> np.ndarray:
    """Intermediate regret of each prefix ``chosen[:t]`` for ``t`` in ``checkpoints``."""
    K = len(gaps.mu)
    chosen = np.asarray(chosen)
    ts = np.asarray(checkpoints, dtype=int)
    if ts.size and (np.any(np.diff(ts) < 0) or ts[0] < 1 or ts[-1] > len(chosen)):
        raise ValueError("checkpoints must be increasing within [1, T]")
    out = np.empty(ts.size)
    counts = np.zeros(K, dtype=np.int64)
    prev = 0
    for k, t in enumerate(ts):
        counts += np.bincount(chosen[prev:t], minlength=K)
        prev = t
        out[k] = regret_from_counts(counts, gaps, t)
    return out


def log_checkpoints(T: int, n: int = 100, start: int = 10) -> np.ndarray:
    """Up to ``n`` distinct integer times log-spaced over ``[start, T]``, always ending at ``T``."""
    start = min(start, T)
    ts = np.unique(np.round(np.geomspace(start, T, n)).astype(int))
    ts[-1] = T
    return ts


def variance_decomposition_check(chosen, rewards) -> tuple[float, float, float]:
    """Empirical variance of the whole run against its within/between-arm split.

    Returns ``(total, within, between)``; in exact arithmetic
    ``total == within + between``.
    """
    a = np.asarray(chosen, dtype=np.int64)
    x = np.asarray(rewards, dtype=float)
    T = x.size
    total = float(np.sum((x - x.mean()) ** 2) / T)
    arms = np.unique(a)
    within = between = 0.0
    mu = x.mean()
    for arm in arms:
        xa = x[a == arm]
        mu_a = xa.mean()
        within += xa.size * np.mean((xa - mu_a) ** 2)
        between += xa.size * (mu_a - mu) ** 2
    return total, float(within / T), float(between / T)
