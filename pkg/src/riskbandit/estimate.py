"""Least-squares estimators for the reward and variance coefficients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import Singular


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """``V = sum_s A_s A_s^T`` over a batch of pulls, plus ``I_d`` if ridged."""

    V: np.ndarray
    ridge_applied: bool = False

    @classmethod
    def from_pulls(cls, actions: np.ndarray, *, ridge: bool = False) -> "DesignMatrix":
        A = np.atleast_2d(np.asarray(actions, dtype=float))
        V = A.T @ A
        V = 0.5 * (V + V.T)
        if ridge:
            V = V + np.eye(A.shape[1])
        return cls(V, ridge)

    @classmethod
    def from_counts(cls, vectors: np.ndarray, counts: np.ndarray, *, ridge: bool = False) -> "DesignMatrix":
        X = np.asarray(vectors, dtype=float)
        V = X.T @ (np.asarray(counts, dtype=float)[:, None] * X)
        V = 0.5 * (V + V.T)
        if ridge:
            V = V + np.eye(X.shape[1])
        return cls(V, ridge)

    def solve(self, b: np.ndarray) -> np.ndarray:
        try:
            c = scipy.linalg.cho_factor(self.V, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise Singular("design matrix is singular; pulls do not span R^d") from exc
        return scipy.linalg.cho_solve(c, b, check_finite=False)


@dataclass(frozen=True, eq=False)
class Estimates:
    theta_hat: np.ndarray
    phi_hat: np.ndarray
    n_samples: int


def estimate_theta(actions: np.ndarray, rewards: np.ndarray, V: DesignMatrix) -> np.ndarray:
    """OLS estimate ``V^{-1} sum_s X_s A_s``."""
    A = np.atleast_2d(np.asarray(actions, dtype=float))
    X = np.asarray(rewards, dtype=float).reshape(-1)
    return V.solve(A.T @ X)


def estimate_phi(
    actions: np.ndarray,
    rewards: np.ndarray,
    theta_hat: np.ndarray,
    V: DesignMatrix,
    omega: float,
) -> np.ndarray:
    """Regress the variance-link inverse of squared residuals on the actions.

    With ``f(x) = x + omega`` the response is ``(X_s - <theta_hat, A_s>)^2 - omega``.
    No clipping: the resulting per-action variance estimates may be negative.
    """
    A = np.atleast_2d(np.asarray(actions, dtype=float))
    X = np.asarray(rewards, dtype=float).reshape(-1)
    resid = X - A @ np.asarray(theta_hat, dtype=float)
    return V.solve(A.T @ (resid**2 - omega))


def estimate(actions: np.ndarray, rewards: np.ndarray, omega: float, *, ridge: bool = False) -> Estimates:
    V = DesignMatrix.from_pulls(actions, ridge=ridge)
    theta_hat = estimate_theta(actions, rewards, V)
    phi_hat = estimate_phi(actions, rewards, theta_hat, V, omega)
    if not (np.all(np.isfinite(theta_hat)) and np.all(np.isfinite(phi_hat))):
        raise Singular("non-finite estimate")
    return Estimates(theta_hat, phi_hat, len(np.atleast_1d(rewards)))


def mv_score(theta_hat: np.ndarray, phi_hat: np.ndarray, rho: float, action: np.ndarray) -> float | np.ndarray:
    """Estimated mean-variance ``<phi_hat - rho*theta_hat, a>``; accepts one action or a K x d stack."""
    return np.asarray(action, dtype=float) @ (np.asarray(phi_hat) - rho * np.asarray(theta_hat))
