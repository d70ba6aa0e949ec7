"""Linear mean-variance bandit instances and the Gaussian reward environment.

An action ``a`` has expected reward ``<a, theta_star>`` and reward variance
``<a, phi_star> + omega``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

NORM_TOL = 1e-12

#: Identity of the generator behind every reward draw. Part of the
#: reproducibility contract and echoed in experiment metadata.
PRNG_ID = f"numpy.random.Philox(4x64-10)+ziggurat-normal/numpy-{np.__version__}"


def _frozen(x: np.ndarray) -> np.ndarray:
    x = np.array(x, dtype=float)
    x.setflags(write=False)
    return x


@dataclass(frozen=True, eq=False)
class ActionSet:
    """Finite, ordered set of action vectors with ``||a||_2 <= 1``."""

    vectors: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.vectors, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"actions must be a non-empty K x d array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("actions must be finite")
        norms = np.linalg.norm(v, axis=1)
        bad = np.flatnonzero(norms > 1.0 + NORM_TOL)
        if bad.size:
            raise ValueError(f"action {int(bad[0])} has norm {norms[bad[0]]!r} > 1")
        object.__setattr__(self, "vectors", _frozen(v))

    @property
    def K(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.K

    def __getitem__(self, index: int) -> np.ndarray:
        if not 0 <= index < self.K:
            raise IndexError(f"action index {index} out of range [0, {self.K})")
        return self.vectors[index]

    def subset(self, indices: Sequence[int]) -> np.ndarray:
        return self.vectors[np.asarray(indices, dtype=int)]


@dataclass(frozen=True, eq=False)
class MVInstance:
    """Ground truth of a linear mean-variance bandit problem."""

    actions: ActionSet
    theta_star: np.ndarray
    phi_star: np.ndarray
    omega: float = 1.0
    rho: float = 0.0
    label: str = ""
    means: np.ndarray = field(init=False, repr=False)
    variances: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        d = self.actions.d
        theta = _frozen(np.ravel(self.theta_star))
        phi = _frozen(np.ravel(self.phi_star))
        if theta.shape != (d,) or phi.shape != (d,):
            raise ValueError(f"theta_star and phi_star must have length d={d}")
        if self.omega < 0 or self.rho < 0:
            raise ValueError("omega and rho must be non-negative")
        if np.linalg.norm(theta) > 1.0 + NORM_TOL:
            raise ValueError(f"||theta_star|| = {np.linalg.norm(theta)!r} exceeds 1")
        if np.linalg.norm(phi) > self.omega + NORM_TOL:
            raise ValueError(f"||phi_star|| = {np.linalg.norm(phi)!r} exceeds omega = {self.omega!r}")
        variances = self.actions.vectors @ phi + self.omega
        if np.any(variances <= 0):
            raise ValueError(f"action {int(np.argmin(variances))} has non-positive variance")
        object.__setattr__(self, "theta_star", theta)
        object.__setattr__(self, "phi_star", phi)
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "means", _frozen(self.actions.vectors @ theta))
        object.__setattr__(self, "variances", _frozen(variances))

    @property
    def K(self) -> int:
        return self.actions.K

    @property
    def d(self) -> int:
        return self.actions.d

    @property
    def sigma2_min(self) -> float:
        return float(self.variances.min())

    @property
    def sigma2_max(self) -> float:
        return float(self.variances.max())

    @property
    def mv_values(self) -> np.ndarray:
        """Per-action mean-variance ``sigma_a^2 - rho * mu_a`` (lower is better)."""
        return self.variances - self.rho * self.means

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "K": self.K,
            "actions": self.actions.vectors.tolist(),
            "theta_star": self.theta_star.tolist(),
            "phi_star": self.phi_star.tolist(),
            "omega": self.omega,
            "rho": self.rho,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MVInstance":
        actions = ActionSet(np.asarray(doc["actions"], dtype=float))
        if "d" in doc and int(doc["d"]) != actions.d:
            raise ValueError(f"declared d={doc['d']} but actions have dimension {actions.d}")
        if "K" in doc and int(doc["K"]) != actions.K:
            raise ValueError(f"declared K={doc['K']} but {actions.K} actions given")
        return cls(
            actions=actions,
            theta_star=np.asarray(doc["theta_star"], dtype=float),
            phi_star=np.asarray(doc["phi_star"], dtype=float),
            omega=float(doc["omega"]),
            rho=float(doc.get("rho", 0.0)),
            label=str(doc.get("label", "")),
        )

    def to_json(self) -> str:
        # json uses repr() for floats: shortest round-trippable form
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MVInstance":
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "MVInstance":
        return cls.from_json(Path(path).read_text())


def _check_index(instance: MVInstance, action_index: int) -> int:
    i = int(action_index)
    if not 0 <= i < instance.K:
        raise IndexError(f"action index {action_index} out of range [0, {instance.K})")
    return i


def mean_of(instance: MVInstance, action_index: int) -> float:
    a = instance.actions.vectors[_check_index(instance, action_index)]
    return float(a @ instance.theta_star)


def variance_of(instance: MVInstance, action_index: int) -> float:
    a = instance.actions.vectors[_check_index(instance, action_index)]
    return float(a @ instance.phi_star + instance.omega)


class Environment:
    """Stochastic reward oracle over an instance.

    One standard normal is drawn per pull, so a batch of pulls consumes the
    stream exactly as the same pulls made one at a time.
    """

    def __init__(self, instance: MVInstance, seed: int) -> None:
        self.instance = instance
        self.seed = int(seed)
        self._rng = np.random.Generator(np.random.Philox(key=self.seed))
        self._scale = np.sqrt(instance.variances)
        self.n_draws = 0

    def pull(self, action_index: int) -> float:
        i = _check_index(self.instance, action_index)
        z = self._rng.standard_normal()
        self.n_draws += 1
        return float(self.instance.means[i] + self._scale[i] * z)

    def pull_many(self, action_indices: Sequence[int] | np.ndarray) -> np.ndarray:
        idx = np.asarray(action_indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.instance.K):
            raise IndexError(f"action index out of range [0, {self.instance.K})")
        z = self._rng.standard_normal(idx.size)
        self.n_draws += idx.size
        return self.instance.means[idx] + self._scale[idx] * z

    def policy_rng(self) -> np.random.Generator:
        """Independent stream for randomized policies, disjoint from rewards."""
        return np.random.Generator(np.random.Philox(key=self.seed).jumped())


def sample_reward(env: Environment, action_index: int) -> float:
    return env.pull(action_index)
