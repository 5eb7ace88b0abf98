"""Simulation and analysis toolkit for non-stationary multi-armed bandits."""

__version__ = "0.1.0"

from .core import Policy, RunTrace, run_batch, run_episode  # noqa: E402
from .environments import (  # noqa: E402
    AbruptEnv,
    GapEnv,
    RewardFamily,
    SmoothEnv,
    abrupt_generate,
    gap_generate,
)
from .policies import (  # noqa: E402
    MUCB,
    POLICIES,
    DiscountedTS,
    DiscountedUCB,
    Exp3S,
    GaussianTS,
    Oracle,
    SlidingWindowTS,
    UniformRandom,
    make_policy,
)
from .rng import RngStream  # noqa: E402

__all__ = [
    "__version__",
    "Policy",
    "RunTrace",
    "run_batch",
    "run_episode",
    "AbruptEnv",
    "GapEnv",
    "SmoothEnv",
    "RewardFamily",
    "abrupt_generate",
    "gap_generate",
    "DiscountedTS",
    "GaussianTS",
    "SlidingWindowTS",
    "DiscountedUCB",
    "Exp3S",
    "MUCB",
    "UniformRandom",
    "Oracle",
    "POLICIES",
    "make_policy",
    "RngStream",
]
