"""Synthetic smart order routing instances.

An action splits ``S`` shares across ``d`` venues, stored as the integer
allocation divided by ``S``. Venues are kept in ascending order of price
(market first, then dark pools, then lit pools); variances follow the same
ordering.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import CapExceeded, InvalidSpec
from .model import NORM_TOL, ActionSet, MVInstance

logger = logging.getLogger(__name__)

DEFAULT_CAP = 10**6


@dataclass(frozen=True, eq=False)
class SorSpec:
    d: int
    price_coeffs: np.ndarray
    var_coeffs: np.ndarray
    omega: float = 1.0
    rho: float = 2.0
    label: str = ""
    n_lit: int | None = None
    n_dark: int | None = None

    def __post_init__(self) -> None:
        p = np.asarray(self.price_coeffs, dtype=float).reshape(-1)
        s = np.asarray(self.var_coeffs, dtype=float).reshape(-1)
        if p.shape != (self.d,) or s.shape != (self.d,):
            raise ValueError(f"coefficient vectors must have length d={self.d}")
        object.__setattr__(self, "price_coeffs", p)
        object.__setattr__(self, "var_coeffs", s)

    def violations(self) -> list[str]:
        """Ordering constraints that fail, as readable inequalities."""
        out = []
        p, s = self.price_coeffs, self.var_coeffs
        for name, v in (("p", p), ("sigma2", s)):
            if self.d > 1 and not v[0] < v[1:].min():
                out.append(f"{name}[0] < min({name}[1:]) fails: {v[0]!r} >= {v[1:].min()!r}")
            for i in range(1, self.d - 1):
                if v[i] > v[i + 1]:
                    out.append(f"{name}[{i}] <= {name}[{i + 1}] fails: {v[i]!r} > {v[i + 1]!r}")
        if self.d and not s[0] > 0:
            out.append(f"sigma2[0] > 0 fails: {s[0]!r}")
        if self.n_lit is not None and self.n_dark is not None:
            j, n = self.n_lit, self.n_dark
            if j + n + 1 != self.d:
                out.append(f"J + N + 1 = d fails: {j} + {n} + 1 != {self.d}")
            elif j and n:
                # strict gap between the dark block and the lit block
                for name, v in (("p", p), ("sigma2", s)):
                    if not v[n] < v[n + 1]:
                        out.append(f"max dark {name} < min lit {name} fails: {v[n]!r} >= {v[n + 1]!r}")
        return out

    def validate(self) -> "SorSpec":
        bad = self.violations()
        if bad:
            raise InvalidSpec(bad)
        return self


SCENARIOS: dict[str, tuple[tuple[float, ...], tuple[float, ...]]] = {
    "I": ((0.1316, 0.3218, 0.5800, 0.7367), (0.2506, 0.2902, 0.5090, 0.7706)),
    "II": ((0.1121, 0.2742, 0.4942, 0.5232, 0.6278), (0.2318, 0.2685, 0.3798, 0.4709, 0.7129)),
    "III": ((0.1081, 0.2641, 0.2645, 0.4767, 0.5047, 0.6055), (0.1631, 0.1889, 0.2672, 0.3313, 0.5015, 0.7106)),
}


def load_scenario(name: str, *, omega: float = 1.0, rho: float = 2.0) -> SorSpec:
    key = str(name).upper()
    if key not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; expected one of {sorted(SCENARIOS)}")
    p, s = SCENARIOS[key]
    return SorSpec(len(p), np.array(p), np.array(s), omega=omega, rho=rho, label=f"Scenario {key}")


def count_allocations(d: int, S: int) -> int:
    return math.comb(S + d - 1, d - 1)


def _compositions(d: int, S: int) -> Iterator[tuple[int, ...]]:
    if d == 1:
        yield (S,)
        return
    for first in range(S + 1):
        for rest in _compositions(d - 1, S - first):
            yield (first, *rest)


def enumerate_allocations(d: int, S: int, cap: int = DEFAULT_CAP) -> ActionSet:
    """All ``v`` in ``Z>=0^d`` with ``sum(v) = S``, lexicographic, scaled by ``1/S``."""
    if d < 1 or S < 1:
        raise ValueError("d and S must be at least 1")
    K = count_allocations(d, S)
    if K > cap:
        raise CapExceeded(f"{K} allocations of {S} shares over {d} venues exceeds cap {cap}")
    v = np.fromiter((x for c in _compositions(d, S) for x in c), dtype=float, count=K * d).reshape(K, d)
    return ActionSet(v / S)


def to_instance(spec: SorSpec, S: int, *, strict: bool = True, cap: int = DEFAULT_CAP) -> tuple[MVInstance, float]:
    """Instance over the ``S``-share allocations, plus the common rescale factor applied.

    The coefficient vectors act directly on the ``1/S``-scaled allocations. If
    either violates its norm bound (``||p|| <= 1``, ``||sigma2|| <= omega``)
    both are shrunk by the same factor.
    """
    if strict:
        spec.validate()
    p, s = spec.price_coeffs, spec.var_coeffs
    factor = 1.0
    np_, ns = float(np.linalg.norm(p)), float(np.linalg.norm(s))
    if np_ > 1.0 + NORM_TOL or ns > spec.omega + NORM_TOL:
        factor = min(1.0 / np_ if np_ > 0 else np.inf, spec.omega / ns if ns > 0 else np.inf)
        logger.info("rescaling %s coefficients by %.12g to satisfy norm bounds", spec.label or "spec", factor)
    actions = enumerate_allocations(spec.d, S, cap)
    label = f"{spec.label} S={S}".strip()
    instance = MVInstance(actions, p * factor, s * factor, omega=spec.omega, rho=spec.rho, label=label)
    return instance, factor


def sample_random_spec(
    d: int,
    J: int,
    N: int,
    rng_seed: int,
    *,
    price_range: tuple[float, float] = (0.05, 0.8),
    var_range: tuple[float, float] = (0.1, 0.8),
    omega: float = 1.0,
    rho: float = 2.0,
) -> SorSpec:
    """Random coefficients obeying both venue ordering chains.

    Layout is ``(market, dark_1..dark_N, lit_1..lit_J)``; each vector is drawn
    uniformly then sorted, with redraws until the strict inequalities hold.
    """
    if J + N + 1 != d:
        raise ValueError(f"J + N + 1 must equal d ({J} + {N} + 1 != {d})")
    rng = np.random.Generator(np.random.Philox(key=int(rng_seed)))
    while True:
        p = np.sort(rng.uniform(*price_range, size=d))
        s = np.sort(rng.uniform(*var_range, size=d))
        spec = SorSpec(d, p, s, omega=omega, rho=rho, label=f"random d={d} seed={rng_seed}", n_lit=J, n_dark=N)
        if not spec.violations():
            return spec
