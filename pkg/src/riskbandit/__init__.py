"""Risk-aware linear bandits under the mean-variance criterion.

Explore-then-commit (RISE) and successive-elimination (RISE++) policies
driven by G-optimal designs, MAB baselines, and a synthetic smart order
routing environment with an intermediate-regret evaluation harness.
"""

__version__ = "0.1.0"

from .errors import CapExceeded, InvalidSpec, RankDeficient, Singular
from .model import ActionSet, Environment, MVInstance, mean_of, sample_reward, variance_of
from .design import DesignWeights, g_of, solve_g_optimal
from .policies import PolicyConfig, Trajectory, Variant, run_policy

__all__ = [
    "ActionSet",
    "CapExceeded",
    "DesignWeights",
    "Environment",
    "InvalidSpec",
    "MVInstance",
    "PolicyConfig",
    "RankDeficient",
    "Singular",
    "Trajectory",
    "Variant",
    "g_of",
    "mean_of",
    "run_policy",
    "sample_reward",
    "solve_g_optimal",
    "variance_of",
]
