"""Experiment grids: policy x seed runs on one instance, checkpointed regret, CSV reports."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .design import solve_g_optimal
from .metrics import gap_table, log_checkpoints, regret_curve
from .model import PRNG_ID, Environment, MVInstance
from .policies import PolicyConfig, Variant, run_policy
from .sor import SCENARIOS, load_scenario, to_instance

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "RISKBANDIT_OUTPUT_DIR"
SEED_INDEX_BITS = 32

PER_SEED_COLUMNS = ["policy", "scenario", "seed", "t", "intermediate_regret"]
AGGREGATE_COLUMNS = ["policy", "scenario", "t", "mean_regret", "stderr", "n_seeds"]


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str) -> None:
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def derive_seed(master_seed: int, index: int) -> int:
    """Replication seed ``master * 2^32 + index``; injective for ``0 <= index < 2^32``."""
    if not 0 <= index < 2**SEED_INDEX_BITS:
        raise ValueError(f"replication index {index} outside [0, 2^32)")
    if master_seed < 0:
        raise ValueError("master seed must be non-negative")
    return (int(master_seed) << SEED_INDEX_BITS) | int(index)


FIGURE_POLICIES = ("RISE", "RISEPP", "MV_UCB", "MV_EXPEXP")

PRESETS: dict[str, dict] = {
    "fig1": {"scenario": "I", "S": 4},
    "fig2": {"scenario": "II", "S": 4},
    "fig3": {"scenario": "III", "S": 4},
    "fig4": {"scenario": "III", "S": 8},
}
for _name, _doc in PRESETS.items():
    _doc.update(T=100_000, rho=2.0, policies=list(FIGURE_POLICIES), seeds=20, master_seed=0, checkpoints=100)


@dataclass
class RunConfig:
    scenario: str
    S: int
    T: int
    policies: list[PolicyConfig]
    seeds: list[int]
    output_dir: Path | None = None
    checkpoints: int = 100
    rho: float | None = None
    master_seed: int | None = None
    source: dict = field(default_factory=dict)

    def canonical(self) -> dict:
        return {
            "scenario": self.scenario,
            "S": self.S,
            "T": self.T,
            "rho": self.rho,
            "policies": [p.to_dict() for p in self.policies],
            "seeds": self.seeds,
            "checkpoints": self.checkpoints,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _int_field(doc: dict, name: str, minimum: int, default=None) -> int:
    if name not in doc:
        if default is None:
            raise ConfigError(name, "missing")
        return default
    v = doc[name]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(name, f"expected an integer, got {v!r}")
    if v < minimum:
        raise ConfigError(name, f"must be >= {minimum}, got {v}")
    return v


def parse_config(doc: dict, *, base_dir: Path | None = None) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    unknown = set(doc) - {"scenario", "S", "T", "rho", "policies", "seeds", "master_seed", "checkpoints", "output_dir"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")

    scenario = doc.get("scenario")
    if not isinstance(scenario, str) or not scenario:
        raise ConfigError("scenario", "expected 'I', 'II', 'III' or a path to an instance JSON file")
    if scenario.upper() not in SCENARIOS:
        path = Path(scenario)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            raise ConfigError("scenario", f"not a known scenario and no such file: {scenario}")
        scenario = str(path)

    S = _int_field(doc, "S", 1, default=4)
    T = _int_field(doc, "T", 10)
    checkpoints = _int_field(doc, "checkpoints", 1, default=100)
    rho = doc.get("rho")
    if rho is not None and (isinstance(rho, bool) or not isinstance(rho, (int, float)) or rho < 0):
        raise ConfigError("rho", f"expected a non-negative number, got {rho!r}")

    raw_policies = doc.get("policies")
    if not isinstance(raw_policies, list) or not raw_policies:
        raise ConfigError("policies", "expected a non-empty list")
    policies = []
    for k, entry in enumerate(raw_policies):
        spec = {"variant": entry} if isinstance(entry, str) else dict(entry) if isinstance(entry, dict) else None
        if spec is None or "variant" not in spec:
            raise ConfigError(f"policies[{k}]", "expected a variant name or an object with 'variant'")
        spec.pop("horizon", None)
        try:
            spec["variant"] = Variant(str(spec["variant"]).upper())
            # rho is filled in per instance when the config leaves it out
            policies.append(PolicyConfig(horizon=T, rho=float(rho) if rho is not None else 0.0, **spec))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"policies[{k}]", str(exc)) from exc

    master = _int_field(doc, "master_seed", 0, default=0)
    seeds_doc = doc.get("seeds", 20)
    if isinstance(seeds_doc, bool):
        raise ConfigError("seeds", "expected a count or a list of integers")
    if isinstance(seeds_doc, int):
        if seeds_doc < 1:
            raise ConfigError("seeds", "need at least one seed")
        seeds = [derive_seed(master, i) for i in range(seeds_doc)]
    elif isinstance(seeds_doc, list) and seeds_doc and all(isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in seeds_doc):
        seeds = list(seeds_doc)
    else:
        raise ConfigError("seeds", "expected a positive count or a non-empty list of non-negative integers")

    out = doc.get("output_dir")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output_dir", "expected a path string")
    return RunConfig(
        scenario=scenario,
        S=S,
        T=T,
        policies=policies,
        seeds=seeds,
        output_dir=Path(out) if out else None,
        checkpoints=checkpoints,
        rho=None if rho is None else float(rho),
        master_seed=master,
        source=dict(doc),
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from exc
    return parse_config(doc, base_dir=path.parent)


def preset_config(name: str, **overrides) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    doc = dict(PRESETS[name])
    doc.update({k: v for k, v in overrides.items() if v is not None})
    return parse_config(doc)


def build_instance(cfg: RunConfig) -> tuple[MVInstance, dict]:
    """Instance for the config plus metadata describing how it was built."""
    if cfg.scenario.upper() in SCENARIOS:
        spec = load_scenario(cfg.scenario, rho=cfg.rho if cfg.rho is not None else 2.0)
        instance, factor = to_instance(spec, cfg.S)
        info = {"scenario": spec.label, "S": cfg.S, "rescale_factor": factor}
    else:
        instance = MVInstance.load(cfg.scenario)
        if cfg.rho is not None:
            instance = MVInstance(instance.actions, instance.theta_star, instance.phi_star,
                                  instance.omega, cfg.rho, instance.label)
        info = {"scenario": instance.label or Path(cfg.scenario).stem, "instance_path": cfg.scenario}
    info.update(K=instance.K, d=instance.d, rho=instance.rho, omega=instance.omega)
    return instance, info


@dataclass
class RegretReport:
    scenario: str
    checkpoints: np.ndarray
    curves: dict[tuple[str, int], np.ndarray]
    metadata: dict

    @property
    def policies(self) -> list[str]:
        return sorted({p for p, _ in self.curves})

    def seeds_for(self, policy: str) -> list[int]:
        return sorted(s for p, s in self.curves if p == policy)

    def matrix(self, policy: str) -> np.ndarray:
        """Seeds x checkpoints regret for one policy, rows in ascending seed order."""
        return np.stack([self.curves[(policy, s)] for s in self.seeds_for(policy)])

    def aggregate(self) -> dict[str, tuple[np.ndarray, np.ndarray, int]]:
        out = {}
        for policy in self.policies:
            m = self.matrix(policy)
            n = m.shape[0]
            mean = m.mean(axis=0)
            se = m.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(mean)
            out[policy] = (mean, se, n)
        return out

    def final_mean(self, policy: str) -> float:
        return float(self.matrix(policy)[:, -1].mean())

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"per_seed": out / "per_seed.csv", "aggregate": out / "aggregate.csv", "metadata": out / "metadata.json"}
        ts = self.checkpoints.tolist()
        with open(paths["per_seed"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(PER_SEED_COLUMNS)
            for policy, seed in sorted(self.curves):
                for t, r in zip(ts, self.curves[(policy, seed)].tolist()):
                    w.writerow([policy, self.scenario, seed, t, repr(r)])
        with open(paths["aggregate"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(AGGREGATE_COLUMNS)
            for policy, (mean, se, n) in self.aggregate().items():
                for t, m, s in zip(ts, mean.tolist(), se.tolist()):
                    w.writerow([policy, self.scenario, t, repr(m), repr(s), n])
        paths["metadata"].write_text(json.dumps(self.metadata, indent=2, sort_keys=True) + "\n")
        return paths


def _run_one(instance: MVInstance, policy: PolicyConfig, seed: int, checkpoints: np.ndarray, traj_dir: str | None):
    traj = run_policy(Environment(instance, seed), policy)
    if traj_dir is not None:
        stem = Path(traj_dir) / f"{policy.name}_seed{seed}"
        traj.export(f"{stem}.csv", f"{stem}.json")
    return policy.name, seed, regret_curve(traj.chosen, gap_table(instance), checkpoints)


def run_experiment(cfg: RunConfig, *, jobs: int = 1, trajectories_dir: str | Path | None = None) -> RegretReport:
    instance, info = build_instance(cfg)
    policies = [p if cfg.rho is not None else replace(p, rho=instance.rho) for p in cfg.policies]
    names = [p.name for p in policies]
    if len(set(names)) != len(names):
        raise ConfigError("policies", "each variant may appear once per experiment")
    checkpoints = log_checkpoints(cfg.T, cfg.checkpoints)
    tasks = [(p, s) for p in policies for s in cfg.seeds]
    traj_dir = None
    if trajectories_dir is not None:
        Path(trajectories_dir).mkdir(parents=True, exist_ok=True)
        traj_dir = str(trajectories_dir)

    if jobs <= 1:
        results = [_run_one(instance, p, s, checkpoints, traj_dir) for p, s in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_one, instance, p, s, checkpoints, traj_dir) for p, s in tasks]
            results = [f.result() for f in futures]

    curves = {(name, seed): curve for name, seed, curve in results}
    metadata = {
        "config": cfg.canonical(),
        "config_hash": cfg.config_hash(),
        "policies": [p.to_dict() for p in policies],
        "instance": info,
        "best_action": gap_table(instance).best_index,
        "prng": PRNG_ID,
        "seed_derivation": "seed_i = master_seed * 2**32 + i",
        "logarithm": "natural",
        "version": f"riskbandit {__version__}",
    }
    return RegretReport(info["scenario"], checkpoints, curves, metadata)


def design_dump(cfg: RunConfig) -> str:
    instance, _ = build_instance(cfg)
    return solve_g_optimal(instance.actions, cfg.policies[0].design_tol).to_json()


def default_output_dir(name: str) -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "results")) / name
