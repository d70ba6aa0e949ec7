"""Bandit policies under the mean-variance criterion.

``RISE`` explores on a G-optimal design then commits; ``RISEPP`` eliminates
actions in phases of halving tolerance, each phase explored on a fresh design
over the surviving actions. ``MV_UCB`` and ``MV_EXPEXP`` are the
multi-armed baselines that ignore the linear structure.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .design import solve_g_optimal
from .errors import Singular
from .estimate import DesignMatrix, estimate_phi, estimate_theta
from .model import Environment


class Variant(str, enum.Enum):
    RISE = "RISE"
    RISEPP = "RISEPP"
    MV_UCB = "MV_UCB"
    MV_EXPEXP = "MV_EXPEXP"
    RANDOM = "RANDOM"


@dataclass(frozen=True)
class PolicyConfig:
    """Run parameters for one policy.

    ``delta``, ``epsilon`` and ``ucb_coeff`` left as ``None`` resolve to the
    horizon-dependent defaults: ``delta = 1/T`` (``T^-2`` for MV_UCB),
    ``epsilon = d T^{-1/3}``, ``ucb_coeff = 5 + rho``.
    """

    variant: Variant
    horizon: int
    rho: float = 2.0
    mode: str = "practical"
    c_tilde: float = 1.0
    c_hat: float = 1.0
    practical_coeff: float = 1e-4
    delta: float | None = None
    epsilon: float | None = None
    ucb_coeff: float | None = None
    design_tol: float = 1e-3

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant(self.variant))
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon!r}")
        object.__setattr__(self, "horizon", int(self.horizon))
        if self.mode not in ("practical", "theoretical"):
            raise ValueError(f"mode must be 'practical' or 'theoretical', got {self.mode!r}")
        if self.rho < 0:
            raise ValueError("rho must be non-negative")
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")
        for name in ("c_tilde", "c_hat", "practical_coeff", "design_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.ucb_coeff is not None and self.ucb_coeff <= 0:
            raise ValueError("ucb_coeff must be positive")

    @property
    def name(self) -> str:
        return self.variant.value

    def with_horizon(self, horizon: int) -> "PolicyConfig":
        return replace(self, horizon=horizon)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "horizon": self.horizon,
            "rho": self.rho,
            "mode": self.mode,
            "c_tilde": self.c_tilde,
            "c_hat": self.c_hat,
            "practical_coeff": self.practical_coeff,
            "delta": self.delta,
            "epsilon": self.epsilon,
            "ucb_coeff": self.ucb_coeff,
            "design_tol": self.design_tol,
        }


@dataclass(frozen=True)
class PhaseRecord:
    phase: int
    active: tuple[int, ...]
    epsilon: float
    budgets: dict[int, int]
    start: int
    pulled: int


@dataclass(eq=False)
class Trajectory:
    K: int
    chosen: np.ndarray
    rewards: np.ndarray
    explore_length: int | None = None
    committed: int | None = None
    phase_log: list[PhaseRecord] = field(default_factory=list)

    @property
    def T(self) -> int:
        return len(self.chosen)

    @property
    def pull_counts(self) -> np.ndarray:
        return np.bincount(self.chosen, minlength=self.K)

    def counts_at(self, t: int) -> np.ndarray:
        """Pull counts over the first ``t`` rounds."""
        return np.bincount(self.chosen[:t], minlength=self.K)

    def sidecar(self) -> dict:
        counts = self.pull_counts
        return {
            "T": self.T,
            "K": self.K,
            "pull_counts": {str(i): int(counts[i]) for i in np.flatnonzero(counts)},
            "explore_length": self.explore_length,
            "committed": self.committed,
            "phase_log": [
                {
                    "phase": p.phase,
                    "active": list(p.active),
                    "epsilon": p.epsilon,
                    "budgets": {str(k): v for k, v in sorted(p.budgets.items())},
                    "start": p.start,
                    "pulled": p.pulled,
                }
                for p in self.phase_log
            ],
        }

    def export(self, csv_path: str | Path, json_path: str | Path) -> None:
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "action_index", "reward"])
            for t, (a, x) in enumerate(zip(self.chosen.tolist(), self.rewards.tolist()), start=1):
                w.writerow([t, a, repr(x)])
        Path(json_path).write_text(json.dumps(self.sidecar(), indent=2) + "\n")


# An estimator maps one batch (actions pulled, rewards, design matrix) to (theta_hat, phi_hat).
Estimator = Callable[[np.ndarray, np.ndarray, DesignMatrix], tuple[np.ndarray, np.ndarray]]


def least_squares_estimator(omega: float) -> Estimator:
    def _est(A: np.ndarray, X: np.ndarray, V: DesignMatrix) -> tuple[np.ndarray, np.ndarray]:
        theta_hat = estimate_theta(A, X, V)
        return theta_hat, estimate_phi(A, X, theta_hat, V, omega)

    return _est


def exact_estimator(theta_star: np.ndarray, phi_star: np.ndarray) -> Estimator:
    """Ignores the data and returns the true parameters; for testing elimination logic."""
    return lambda A, X, V: (np.asarray(theta_star), np.asarray(phi_star))


# -- budgets --------------------------------------------------------------

def ceil_root_budget(scale: int, T: int) -> int:
    """Exact ``ceil(scale * T^(2/3))``: least ``n`` with ``n^3 >= scale^3 T^2``."""
    target = scale**3 * T**2
    n = max(int(round(scale * T ** (2.0 / 3.0))), 0)
    while n**3 < target:
        n += 1
    while n > 0 and (n - 1) ** 3 >= target:
        n -= 1
    return n


def rise_exploration_length(d: int, T: int) -> int:
    return ceil_root_budget(d, T)


def expexp_per_arm(T: int) -> int:
    """Exact ``ceil((T/14)^(2/3))``: least ``m`` with ``196 m^3 >= T^2``."""
    m = max(int(round((T / 14.0) ** (2.0 / 3.0))), 0)
    while 196 * m**3 < T**2:
        m += 1
    while m > 0 and 196 * (m - 1) ** 3 >= T**2:
        m -= 1
    return m


def allocate_total(n: int, weights: dict[int, float]) -> dict[int, int]:
    """Round ``n * Q(a)`` up, then trim from the largest budgets so the total is ``n``."""
    support = sorted(weights)
    budgets = {a: math.ceil(n * weights[a]) for a in support}
    excess = sum(budgets.values()) - n
    while excess > 0:
        a = min(support, key=lambda i: (-budgets[i], i))
        budgets[a] -= 1
        excess -= 1
    return budgets


def risepp_budget(
    q: float, epsilon: float, d: int, K: int, T: int, g: float, cfg: PolicyConfig
) -> int:
    """Pulls of one support action in a phase of tolerance ``epsilon``."""
    if cfg.mode == "practical":
        raw = cfg.practical_coeff * d**3 * math.log(d) * q / epsilon**2 * math.log(K * T**2) ** 2
    else:
        delta = cfg.delta if cfg.delta is not None else 1.0 / T
        raw = cfg.c_hat**2 * d**2 * g * math.log(d) * q / epsilon**2 * math.log(K * T / delta) ** 2
    # at least one pull, or d = 1 (log d = 0) would never make progress
    return max(math.ceil(raw), 1)


def rise_budgets(design, d: int, T: int, cfg: PolicyConfig) -> dict[int, int]:
    if cfg.mode == "practical":
        return allocate_total(rise_exploration_length(d, T), design.weights)
    delta = cfg.delta if cfg.delta is not None else 1.0 / T
    eps = cfg.epsilon if cfg.epsilon is not None else d * T ** (-1.0 / 3.0)
    scale = cfg.c_tilde**2 * d**2 * math.log(d) * math.log(1.0 / delta) ** 2 * design.g_value / eps**2
    return {a: max(math.ceil(scale * q), 1) for a, q in sorted(design.weights.items())}


# -- empirical MV for the MAB baselines -----------------------------------

def empirical_mv(chosen: np.ndarray, rewards: np.ndarray, K: int, rho: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-arm ``sigma_hat^2 - rho * mu_hat`` with the biased 1/s variance, and pull counts.

    Arms never pulled get ``+inf``.
    """
    s = np.bincount(chosen, minlength=K).astype(float)
    sums = np.bincount(chosen, weights=rewards, minlength=K)
    with np.errstate(invalid="ignore", divide="ignore"):
        mu = sums / s
        dev = rewards - mu[chosen]
        var = np.bincount(chosen, weights=dev * dev, minlength=K) / s
        mv = var - rho * mu
    mv[s == 0] = np.inf
    return mv, s


def eliminate(
    vectors: np.ndarray, active: np.ndarray, theta_hat: np.ndarray, phi_hat: np.ndarray, rho: float, epsilon: float
) -> np.ndarray:
    """Keep ``a`` iff ``max_b <rho*theta_hat - phi_hat, b - a> <= 2*epsilon`` over the active set."""
    scores = vectors[active] @ (phi_hat - rho * theta_hat)
    keep = active[scores - scores.min() <= 2.0 * epsilon]
    if keep.size == 0:
        raise RuntimeError("elimination emptied the active set")
    return keep


# -- policies ---------------------------------------------------------------

def _block_schedule(budgets: dict[int, int], limit: int) -> np.ndarray:
    support = sorted(budgets)
    sched = np.repeat(np.asarray(support, dtype=np.int64), [budgets[a] for a in support])
    return sched[:limit]


def run_rise(env: Environment, cfg: PolicyConfig, *, estimator: Estimator | None = None) -> Trajectory:
    inst = env.instance
    K, d, T = inst.K, inst.d, cfg.horizon
    X = inst.actions.vectors
    estimator = estimator or least_squares_estimator(inst.omega)

    design = solve_g_optimal(inst.actions, cfg.design_tol)
    explore = _block_schedule(rise_budgets(design, d, T, cfg), T)
    n = len(explore)
    explore_rewards = env.pull_many(explore)
    if n == T:
        return Trajectory(K, explore, explore_rewards, explore_length=n)

    commit = 0
    if n >= d:
        try:
            theta_hat, phi_hat = estimator(X[explore], explore_rewards, DesignMatrix.from_pulls(X[explore]))
            commit = int(np.argmin(X @ (phi_hat - cfg.rho * theta_hat)))
        except Singular:
            commit = 0
    exploit = np.full(T - n, commit, dtype=np.int64)
    chosen = np.concatenate([explore, exploit])
    rewards = np.concatenate([explore_rewards, env.pull_many(exploit)])
    return Trajectory(K, chosen, rewards, explore_length=n, committed=commit)


def run_risepp(env: Environment, cfg: PolicyConfig, *, estimator: Estimator | None = None) -> Trajectory:
    inst = env.instance
    K, d, T = inst.K, inst.d, cfg.horizon
    X = inst.actions.vectors
    estimator = estimator or least_squares_estimator(inst.omega)

    active = np.arange(K)
    chosen: list[np.ndarray] = []
    rewards: list[np.ndarray] = []
    log: list[PhaseRecord] = []
    t, phase = 0, 1
    while t < T:
        if active.size == 1:
            rest = np.full(T - t, active[0], dtype=np.int64)
            chosen.append(rest)
            rewards.append(env.pull_many(rest))
            break
        eps = 2.0**-phase
        design = solve_g_optimal(X[active], cfg.design_tol, subspace=True)
        budgets = {
            int(active[i]): risepp_budget(q, eps, d, K, T, design.g_value, cfg)
            for i, q in design.weights.items()
        }
        sched = _block_schedule(budgets, T - t)
        x = env.pull_many(sched)
        chosen.append(sched)
        rewards.append(x)
        log.append(PhaseRecord(phase, tuple(int(a) for a in active), eps, budgets, t, len(sched)))
        t += len(sched)
        if t >= T:
            break
        V = DesignMatrix.from_pulls(X[sched], ridge=True)
        theta_hat, phi_hat = estimator(X[sched], x, V)
        active = eliminate(X, active, theta_hat, phi_hat, cfg.rho, eps)
        phase += 1

    return Trajectory(K, np.concatenate(chosen), np.concatenate(rewards), phase_log=log)


def run_mv_ucb(env: Environment, cfg: PolicyConfig) -> Trajectory:
    inst = env.instance
    K, T, rho = inst.K, cfg.horizon, cfg.rho
    coeff = cfg.ucb_coeff if cfg.ucb_coeff is not None else 5.0 + rho
    delta = cfg.delta if cfg.delta is not None else float(T) ** -2
    log_term = math.log(1.0 / delta) if delta < 1.0 else 0.0

    chosen = np.empty(T, dtype=np.int64)
    rewards = np.empty(T)
    n_init = min(K, T)
    chosen[:n_init] = np.arange(n_init)
    rewards[:n_init] = env.pull_many(chosen[:n_init])
    if n_init == T:
        return Trajectory(K, chosen, rewards)

    # Welford running moments per arm; one pull each so far
    count = np.ones(K)
    mean = rewards[:K].copy()
    m2 = np.zeros(K)
    index = -rho * mean - coeff * np.sqrt(log_term / 2.0)
    for t in range(K, T):
        j = int(index.argmin())
        x = env.pull(j)
        chosen[t] = j
        rewards[t] = x
        s = count[j] + 1.0
        delta_mean = x - mean[j]
        mu = mean[j] + delta_mean / s
        m2[j] += delta_mean * (x - mu)
        count[j] = s
        mean[j] = mu
        index[j] = m2[j] / s - rho * mu - coeff * math.sqrt(log_term / (2.0 * s))
    return Trajectory(K, chosen, rewards)


def run_mv_expexp(env: Environment, cfg: PolicyConfig) -> Trajectory:
    K, T = env.instance.K, cfg.horizon
    per_arm = expexp_per_arm(T)
    n = min(K * per_arm, T)
    explore = np.tile(np.arange(K, dtype=np.int64), per_arm)[:n]
    explore_rewards = env.pull_many(explore)
    if n == T:
        return Trajectory(K, explore, explore_rewards, explore_length=n)
    mv, _ = empirical_mv(explore, explore_rewards, K, cfg.rho)
    commit = int(np.argmin(mv)) if np.isfinite(mv).any() else 0
    exploit = np.full(T - n, commit, dtype=np.int64)
    return Trajectory(
        K,
        np.concatenate([explore, exploit]),
        np.concatenate([explore_rewards, env.pull_many(exploit)]),
        explore_length=n,
        committed=commit,
    )


def run_random(env: Environment, cfg: PolicyConfig) -> Trajectory:
    K = env.instance.K
    chosen = env.policy_rng().integers(K, size=cfg.horizon).astype(np.int64)
    return Trajectory(K, chosen, env.pull_many(chosen))


_RUNNERS = {
    Variant.RISE: run_rise,
    Variant.RISEPP: run_risepp,
    Variant.MV_UCB: run_mv_ucb,
    Variant.MV_EXPEXP: run_mv_expexp,
    Variant.RANDOM: run_random,
}


def run_policy(env: Environment, cfg: PolicyConfig) -> Trajectory:
    return _RUNNERS[cfg.variant](env, cfg)
