"""Independent reference computations used as test oracles.

Nothing here imports the code paths it checks.
"""
from __future__ import annotations

import itertools

import numpy as np


def project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, v.size + 1)
    r = np.nonzero(u * k > css - 1)[0][-1]
    tau = (css[r] - 1) / (r + 1)
    return np.maximum(v - tau, 0.0)


def projected_gradient_design(X: np.ndarray, gap: float = 1e-6, max_iters: int = 200_000) -> np.ndarray:
    """Maximize log det M(w) over the simplex by projected gradient ascent.

    Stops when ``max_a a^T M^{-1} a - d <= gap * d``.
    """
    K, d = X.shape
    w = np.full(K, 1.0 / K)
    step = 1.0 / d
    for _ in range(max_iters):
        Minv = np.linalg.inv(X.T @ (w[:, None] * X))
        lev = np.einsum("ij,jk,ik->i", X, Minv, X)
        if lev.max() - d <= gap * d:
            return w
        cur = np.linalg.slogdet(X.T @ (w[:, None] * X))[1]
        eta = step
        while True:
            cand = project_simplex(w + eta * lev)
            val = np.linalg.slogdet(X.T @ (cand[:, None] * X))
            if val[0] > 0 and val[1] >= cur:
                break
            eta /= 2
        w = cand
        step = min(eta * 2, 1e3)
    raise RuntimeError("oracle did not converge")


def dense_g(X: np.ndarray, w: np.ndarray) -> float:
    M = sum(wi * np.outer(a, a) for wi, a in zip(w, X))
    Minv = np.linalg.inv(M)
    return max(float(a @ Minv @ a) for a in X)


def count_compositions(d: int, S: int) -> int:
    """Number of ways to write S as an ordered sum of d non-negative integers, by recursion."""
    if d == 1:
        return 1
    return sum(count_compositions(d - 1, S - k) for k in range(S + 1))


def brute_allocations(d: int, S: int) -> list[tuple[int, ...]]:
    return [v for v in itertools.product(range(S + 1), repeat=d) if sum(v) == S]


def brute_regret(counts, mu, delta) -> float:
    K = len(counts)
    T = sum(counts)
    total = sum(counts[a] * delta[a] for a in range(K))
    for a in range(K):
        for b in range(K):
            if a != b:
                total += counts[a] * counts[b] * (mu[a] - mu[b]) ** 2 / T
    return total


def two_pass_mean_variance(x, rho: float) -> float:
    n = len(x)
    m = 0.0
    for v in x:
        m += v
    m /= n
    ss = 0.0
    for v in x:
        ss += (v - m) * (v - m)
    return ss - rho * sum(x)
