"""Policy contract, run traces and the loop that connects policies to environments.

A policy object holds the state of ``n_envs`` independent replicas of one
algorithm.  ``select(t)`` returns one arm per replica and ``update(t, arms,
rewards)`` feeds back one reward per replica.  ``run_episode`` is the
single-replica case; the harness batches replicas to amortise the per-round
interpreter cost.  Replicas never interact: each has its own random stream and
all arithmetic is elementwise.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .environments import Environment, PiecewiseEnv, SmoothEnv
from .rng import BlockDraws, as_generators

__all__ = ["Policy", "RunTrace", "BatchMeans", "run_batch", "run_episode"]


class Policy:
    """Base class for batched bandit policies.

    Subclasses set ``name`` and implement ``reset``, ``select`` and ``update``.
    ``rngs`` is one stream per replica (a generator, an ``RngStream`` or a
    seed); deterministic policies ignore it.
    """

    name = "policy"

    def __init__(self, n_arms: int, rngs=None, n_envs: int | None = None):
        if n_arms < 1:
            raise ValueError("n_arms must be positive")
        self.K = int(n_arms)
        self._gens = as_generators(rngs, n_envs)
        self.n_envs = len(self._gens)
        self._rows = np.arange(self.n_envs)
        self.reset()

    def reset(self) -> None:
        raise NotImplementedError

    def select(self, t: int) -> np.ndarray:
        raise NotImplementedError

    def update(self, t: int, arms: np.ndarray, rewards: np.ndarray) -> None:
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def _draws(self, width: int, kind: str) -> BlockDraws:
        return BlockDraws(self._gens, width, kind)


@dataclass
class RunTrace:
    """One episode: 0-based chosen arms and the per-round / cumulative expected regret."""

    chosen: np.ndarray
    inst_regret: np.ndarray
    cum_regret: np.ndarray

    @classmethod
    def from_arrays(cls, chosen, inst_regret) -> RunTrace:
        inst = np.asarray(inst_regret, dtype=float)
        return cls(np.asarray(chosen), inst, np.cumsum(inst))

    def __eq__(self, other):
        if not isinstance(other, RunTrace):
            return NotImplemented
        return (np.array_equal(self.chosen, other.chosen)
                and np.array_equal(self.inst_regret, other.inst_regret)
                and np.array_equal(self.cum_regret, other.cum_regret))


class BatchMeans:
    """``(n_envs, K)`` true means at round ``t`` for a list of environments."""

    def __init__(self, envs: Sequence[Environment]):
        self.envs = list(envs)
        first = self.envs[0]
        self.K = first.K
        self.T = first.T
        if any(e.K != self.K or e.T != self.T for e in self.envs):
            raise ValueError("all environments in a batch must share K and T")
        self._table = None
        self._matrix = None
        if all(isinstance(e, PiecewiseEnv) for e in self.envs) and all(
                np.array_equal(e.breakpoints, first.breakpoints) for e in self.envs):
            self._table = np.stack([e.phase_means for e in self.envs])
            self._phase = first.phase_index(np.arange(1, self.T + 1))
        elif all(isinstance(e, SmoothEnv) for e in self.envs) and all(
                e.describe() == first.describe() for e in self.envs):
            self._matrix = first.means_matrix()

    def at(self, t: int) -> np.ndarray:
        if self._table is not None:
            return self._table[:, self._phase[t - 1]]
        if self._matrix is not None:
            return np.broadcast_to(self._matrix[t - 1], (len(self.envs), self.K))
        return np.stack([e.means_at(t) for e in self.envs])


def run_batch(policies: Sequence[Policy], envs: Sequence[Environment], T: int, reward_rngs,
              record_arms: bool = False):
    """Run every policy against the same replicas of the environment, in lockstep.

    All policies see the same reward for a given ``(replica, t, arm)``.
    Returns ``(inst_regret, chosen)``: lists aligned with ``policies`` holding
    ``(n_envs, T)`` arrays (``chosen`` entries are ``None`` unless requested).
    """
    envs = list(envs)
    n = len(envs)
    if T < 1 or T > envs[0].T:
        raise ValueError(f"T must lie in [1, {envs[0].T}]")
    for p in policies:
        if p.n_envs != n or p.K != envs[0].K:
            raise ValueError(f"policy {p.name!r} was built for {p.n_envs} replicas of {p.K} arms")
    means = BatchMeans(envs)
    family = envs[0].family
    noise = BlockDraws(as_generators(reward_rngs, n), envs[0].K, "uniform")
    rows = np.arange(n)
    inst = [np.empty((n, T)) for _ in policies]
    chosen = [np.empty((n, T), dtype=np.int64) if record_arms else None for _ in policies]
    for t in range(1, T + 1):
        mu = means.at(t)
        best = mu.max(axis=1)
        x = family.transform(mu, noise.next())
        for k, p in enumerate(policies):
            arms = p.select(t)
            p.update(t, arms, x[rows, arms])
            inst[k][:, t - 1] = best - mu[rows, arms]
            if record_arms:
                chosen[k][:, t - 1] = arms
    return inst, chosen


def run_episode(policy: Policy, env: Environment, T: int | None = None, rng=None) -> RunTrace:
    """Play one episode of ``policy`` (built for a single replica) on ``env``.

    ``rng`` drives the reward noise only; the policy owns its own stream.
    """
    T = env.T if T is None else int(T)
    if policy.n_envs != 1:
        raise ValueError("run_episode needs a single-replica policy")
    inst, chosen = run_batch([policy], [env], T, [rng], record_arms=True)
    return RunTrace.from_arrays(chosen[0][0], inst[0][0])
