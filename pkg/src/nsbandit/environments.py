"""Reward processes: piecewise-stationary, sinusoidal drift and gap-controlled.

Arms are 0-based indices ``0..K-1``; rounds are 1-based ``1..T``.

Rewards are produced by inverse transform of a uniform draw, ``x = Q_mu(u)``,
so a single uniform per ``(t, arm)`` fixes the reward whichever policy asks
for it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaincinv

from .rng import as_generator

__all__ = [
    "RewardFamily",
    "Environment",
    "PiecewiseEnv",
    "AbruptEnv",
    "GapEnv",
    "SmoothEnv",
    "equal_breakpoints",
    "abrupt_generate",
    "gap_generate",
    "smooth_mean",
    "sample_reward",
    "optimal_mean",
    "gap",
]


@dataclass(frozen=True)
class RewardFamily:
    """Bounded reward noise around a mean ``mu``.

    ``bernoulli`` gives ``Bernoulli(mu)``; ``beta`` gives
    ``Beta(nu*mu, nu*(1-mu))`` with point masses at ``mu in {0, 1}``.
    """

    kind: str = "bernoulli"
    concentration: float = 4.0

    def __post_init__(self):
        if self.kind not in ("bernoulli", "beta"):
            raise ValueError(f"unknown reward family {self.kind!r}")
        if not self.concentration > 0:
            raise ValueError("concentration must be positive")

    def transform(self, mu, u):
        """Map uniforms ``u`` in [0, 1) to rewards with mean ``mu`` (vectorised)."""
        mu = np.asarray(mu, dtype=float)
        u = np.asarray(u, dtype=float)
        if self.kind == "bernoulli":
            return (u < mu).astype(float)
        inner = (mu > 0.0) & (mu < 1.0)
        nu = self.concentration
        a = np.where(inner, nu * mu, 1.0)
        b = np.where(inner, nu * (1.0 - mu), 1.0)
        x = betaincinv(a, b, u)
        # the quantile underflows to nan at extreme-tail u; those map to an endpoint
        x = np.where(np.isnan(x), (u >= 0.5).astype(float), x)
        return np.where(inner, x, mu)

    def sample(self, mu, rng) -> float:
        return float(self.transform(mu, as_generator(rng).random()))


class Environment:
    """Base class: a ``T x K`` array of means revealed one round at a time."""

    setting = "abrupt"

    def __init__(self, K: int, T: int, family: RewardFamily | None = None,
                 mu_max_cap: float | None = None):
        if K < 2:
            raise ValueError("need at least two arms")
        if T < 1:
            raise ValueError("horizon must be positive")
        self.K = int(K)
        self.T = int(T)
        self.family = family if family is not None else RewardFamily()
        self.mu_max_cap = mu_max_cap

    def means_at(self, t: int) -> np.ndarray:
        raise NotImplementedError

    def means_matrix(self) -> np.ndarray:
        """All means as a ``(T, K)`` array, row ``t-1`` for round ``t``."""
        return np.array([self.means_at(t) for t in range(1, self.T + 1)])

    @property
    def n_breakpoints(self) -> int:
        """Breakpoint count used for parameter tuning (1 when there are none)."""
        return 1

    def optimal_mean(self, t: int) -> float:
        return float(np.max(self.means_at(t)))

    def gap(self, t: int, i: int) -> float:
        mu = self.means_at(t)
        return float(np.max(mu) - mu[i])

    def sample_reward(self, t: int, i: int, rng) -> float:
        return self.family.sample(self.means_at(t)[i], rng)

    def describe(self) -> dict:
        return {"kind": self.kind, "K": self.K, "T": self.T, "reward": self.family.kind,
                "concentration": self.family.concentration, "mu_max_cap": self.mu_max_cap}


class PiecewiseEnv(Environment):
    """Means constant on phases ``[b_k, b_{k+1})``, with ``b_1 = 1``."""

    kind = "piecewise"

    def __init__(self, K, T, breakpoints, phase_means, family=None, mu_max_cap=None):
        super().__init__(K, T, family, mu_max_cap)
        bp = np.asarray(breakpoints, dtype=np.int64)
        pm = np.asarray(phase_means, dtype=float)
        if bp.ndim != 1 or len(bp) == 0 or bp[0] != 1:
            raise ValueError("breakpoints must start at round 1")
        if np.any(np.diff(bp) <= 0) or bp[-1] > self.T:
            raise ValueError("breakpoints must be strictly increasing and <= T")
        if pm.shape != (len(bp), self.K):
            raise ValueError(f"phase_means must have shape {(len(bp), self.K)}, got {pm.shape}")
        if np.any(pm < 0) or np.any(pm > 1):
            raise ValueError("means must lie in [0, 1]")
        self.breakpoints = bp
        self.phase_means = pm

    @property
    def n_breakpoints(self) -> int:
        return len(self.breakpoints)

    def phase_index(self, t):
        return np.searchsorted(self.breakpoints, t, side="right") - 1

    def means_at(self, t: int) -> np.ndarray:
        return self.phase_means[self.phase_index(t)]

    def means_matrix(self) -> np.ndarray:
        return self.phase_means[self.phase_index(np.arange(1, self.T + 1))]

    def describe(self) -> dict:
        d = super().describe()
        d["breakpoints"] = self.breakpoints.tolist()
        d["phase_means"] = self.phase_means.tolist()
        return d


class AbruptEnv(PiecewiseEnv):
    kind = "abrupt"


class GapEnv(PiecewiseEnv):
    """One best arm per phase at ``base + gap/2``; the rest at ``base - gap/2``."""

    kind = "gap"

    def __init__(self, K, T, breakpoints, best_arms, gap, base=0.5, family=None):
        if not 0 < gap < 1:
            raise ValueError("gap must lie in (0, 1)")
        lo, hi = base - gap / 2, base + gap / 2
        if lo < 0 or hi > 1:
            raise ValueError("base +/- gap/2 must stay inside [0, 1]")
        best_arms = np.asarray(best_arms, dtype=np.int64)
        pm = np.full((len(best_arms), K), lo)
        pm[np.arange(len(best_arms)), best_arms] = hi
        super().__init__(K, T, breakpoints, pm, family)
        self.gap_value = float(gap)
        self.base = float(base)
        self.best_arms = best_arms

    def describe(self) -> dict:
        d = super().describe()
        d.update(gap=self.gap_value, base=self.base)
        return d


class SmoothEnv(Environment):
    """Sinusoidal drift: the peak arm sweeps back and forth at angular rate ``sigma``."""

    kind = "smooth"
    setting = "smooth"

    def __init__(self, K, T, sigma, scale=1.0, family=None, mu_max_cap=None):
        super().__init__(K, T, family, mu_max_cap)
        if not sigma > 0:
            raise ValueError("sigma must be positive")
        if not 0 < scale <= 1:
            raise ValueError("scale must lie in (0, 1]")
        self.sigma = float(sigma)
        self.scale = float(scale)
        self._arms = np.arange(1, self.K + 1, dtype=float)

    @classmethod
    def scaled(cls, K, T, sigma, family=None):
        """Variant whose largest mean is 0.5, which is also declared as the known cap."""
        scale = K / (2 * (K - 1))
        return cls(K, T, sigma, scale=scale, family=family, mu_max_cap=scale * (K - 1) / K)

    def peak(self, t):
        return 1.0 + (self.K - 1) * (1.0 + np.sin(np.asarray(t, dtype=float) * self.sigma)) / 2.0

    def means_at(self, t: int) -> np.ndarray:
        w = self.peak(t)
        return self.scale * ((self.K - 1) / self.K - np.abs(w - self._arms) / self.K)

    def means_matrix(self) -> np.ndarray:
        w = self.peak(np.arange(1, self.T + 1))[:, None]
        return self.scale * ((self.K - 1) / self.K - np.abs(w - self._arms[None, :]) / self.K)

    def describe(self) -> dict:
        d = super().describe()
        d.update(sigma=self.sigma, scale=self.scale)
        return d


def equal_breakpoints(T: int, B_T: int) -> np.ndarray:
    """``B_T`` phases of length ``T // B_T``; the last phase absorbs the remainder."""
    if B_T < 1:
        raise ValueError("B_T must be at least 1")
    if B_T > T:
        raise ValueError(f"B_T={B_T} exceeds the horizon T={T}")
    return 1 + np.arange(B_T, dtype=np.int64) * (T // B_T)


def abrupt_generate(K, T, B_T, rng=None, mu_max_cap=1.0, family=None) -> AbruptEnv:
    """Piecewise-stationary instance with phase means drawn i.i.d. from U(0, mu_max_cap)."""
    if not 0 < mu_max_cap <= 1:
        raise ValueError("mu_max_cap must lie in (0, 1]")
    rng = as_generator(rng)
    bp = equal_breakpoints(T, B_T)
    pm = np.empty((B_T, K))
    for k in range(B_T):
        row = mu_max_cap * rng.random(K)
        while k > 0 and np.array_equal(row, pm[k - 1]):
            row = mu_max_cap * rng.random(K)
        pm[k] = row
    return AbruptEnv(K, T, bp, pm, family, mu_max_cap=mu_max_cap)


def gap_generate(K, T, B_T, gap, rng=None, base=0.5, family=None) -> GapEnv:
    """Gap-controlled instance; the best arm moves to a different arm at every breakpoint."""
    rng = as_generator(rng)
    bp = equal_breakpoints(T, B_T)
    best = np.empty(B_T, dtype=np.int64)
    best[0] = rng.integers(K)
    for k in range(1, B_T):
        shift = rng.integers(1, K)
        best[k] = (best[k - 1] + shift) % K
    return GapEnv(K, T, bp, best, gap, base=base, family=family)


def smooth_mean(env: SmoothEnv, t, i) -> float:
    """Mean of arm ``i`` (0-based) at round ``t`` in the sinusoidal environment."""
    w = 1.0 + (env.K - 1) * (1.0 + math.sin(t * env.sigma)) / 2.0
    return env.scale * ((env.K - 1) / env.K - abs(w - (i + 1)) / env.K)


def sample_reward(env: Environment, t: int, i: int, family: RewardFamily | None = None, rng=None) -> float:
    family = family if family is not None else env.family
    return family.sample(env.means_at(t)[i], rng)


def optimal_mean(env: Environment, t: int) -> float:
    return env.optimal_mean(t)


def gap(env: Environment, t: int, i: int) -> float:
    return env.gap(t, i)
