"""Discounted Thompson sampling and the baselines it is compared against.

Every policy follows the batched contract of :class:`nsbandit.core.Policy`:
state arrays have shape ``(n_envs, K)`` and ``select`` returns one 0-based arm
per replica.  Ties in every argmax go to the lowest arm index.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import betaincinv

from .core import BatchMeans, Policy

__all__ = [
    "DiscountedPosterior",
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
]


class DiscountedPosterior:
    """Discounted counts and rewards per arm.

    ``N`` is the discounted pull count, ``mu_tilde`` the discounted reward sum
    and ``mu_hat`` their ratio (0 for arms never pulled).  Only the pulled
    arm's ``mu_hat`` is recomputed on update: for the others the ratio is
    unchanged by the common factor ``gamma``, and keeping the stored value
    makes that exact.
    """

    def __init__(self, n_envs: int, n_arms: int, gamma: float, tau_max: float = 1.0):
        self.gamma = float(gamma)
        self.tau_max = float(tau_max)
        self.N = np.zeros((n_envs, n_arms))
        self.mu_tilde = np.zeros((n_envs, n_arms))
        self.mu_hat = np.zeros((n_envs, n_arms))
        self._rows = np.arange(n_envs)

    @property
    def tau(self) -> np.ndarray:
        """Sampling std-dev ``min(1/sqrt(N), tau_max)``; ``tau_max`` where ``N = 0``."""
        with np.errstate(divide="ignore"):
            return np.minimum(1.0 / np.sqrt(self.N), self.tau_max)

    def update(self, arms, rewards) -> None:
        r = self._rows
        g = self.gamma
        if g != 1.0:
            self.N *= g
            self.mu_tilde *= g
        self.N[r, arms] += 1.0
        self.mu_tilde[r, arms] += rewards
        self.mu_hat[r, arms] = self.mu_tilde[r, arms] / self.N[r, arms]


class DiscountedTS(Policy):
    """Discounted Thompson sampling with Gaussian sampling distributions.

    Each round arm ``i`` draws ``theta_i ~ N(mu_hat_i, tau_i^2)`` with the
    discounted statistics of :class:`DiscountedPosterior`; the largest draw is
    played.  With ``gamma = 1`` the statistics are plain counts and means.
    """

    name = "ds-ts"

    def __init__(self, n_arms, gamma, tau_max=0.2, rngs=None, n_envs=None):
        if not 0 < gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if not tau_max > 0:
            raise ValueError("tau_max must be positive")
        self.gamma = float(gamma)
        self.tau_max = float(tau_max)
        super().__init__(n_arms, rngs, n_envs)

    def reset(self):
        self.posterior = DiscountedPosterior(self.n_envs, self.K, self.gamma, self.tau_max)
        self._z = self._draws(self.K, "normal")

    def sample(self) -> np.ndarray:
        post = self.posterior
        return post.mu_hat + post.tau * self._z.next()

    def select(self, t):
        return self.sample().argmax(axis=1)

    def update(self, t, arms, rewards):
        self.posterior.update(arms, rewards)

    def params(self):
        return {"gamma": self.gamma, "tau_max": self.tau_max}


class GaussianTS(Policy):
    """Stationary Gaussian Thompson sampling: ``N(sample mean, 1/(k+1))``."""

    name = "ts"

    def reset(self):
        self.counts = np.zeros((self.n_envs, self.K))
        self.sums = np.zeros((self.n_envs, self.K))
        self._z = self._draws(self.K, "normal")

    def posterior(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.where(self.counts > 0, self.sums / self.counts, 0.0)
        return mean, 1.0 / (self.counts + 1.0)

    def select(self, t):
        mean, var = self.posterior()
        return (mean + np.sqrt(var) * self._z.next()).argmax(axis=1)

    def update(self, t, arms, rewards):
        self.counts[self._rows, arms] += 1.0
        self.sums[self._rows, arms] += rewards


class SlidingWindowTS(Policy):
    """Beta-Bernoulli Thompson sampling on the last ``window`` rounds.

    Rewards in [0, 1] are binarised by a Bernoulli(x) coin before entering the
    pseudo-counts.  Beta draws use the inverse CDF of a uniform so every round
    consumes a fixed ``K + 1`` uniforms per replica.
    """

    name = "sw-ts"

    def __init__(self, n_arms, window, rngs=None, n_envs=None):
        if int(window) != window or window < 1:
            raise ValueError("window must be a positive integer")
        self.window = int(window)
        super().__init__(n_arms, rngs, n_envs)

    def reset(self):
        n = self.n_envs
        self.successes = np.zeros((n, self.K))
        self.failures = np.zeros((n, self.K))
        self._hist_arm = np.zeros((n, self.window), dtype=np.int64)
        self._hist_y = np.zeros((n, self.window))
        self._seen = 0
        self._u = self._draws(self.K + 1, "uniform")
        self._coin = None

    def select(self, t):
        u = self._u.next()
        self._coin = u[:, self.K]
        theta = betaincinv(self.successes + 1.0, self.failures + 1.0, u[:, : self.K])
        return theta.argmax(axis=1)

    def update(self, t, arms, rewards):
        r = self._rows
        y = (self._coin < rewards).astype(float)
        pos = self._seen % self.window
        if self._seen >= self.window:
            old_a = self._hist_arm[:, pos]
            old_y = self._hist_y[:, pos]
            self.successes[r, old_a] -= old_y
            self.failures[r, old_a] -= 1.0 - old_y
        self._hist_arm[:, pos] = arms
        self._hist_y[:, pos] = y
        self.successes[r, arms] += y
        self.failures[r, arms] += 1.0 - y
        self._seen += 1

    def params(self):
        return {"window": self.window}


class DiscountedUCB(Policy):
    """Discounted UCB: ``mu_hat + 2B sqrt(xi log n_t / N_i)`` with ``n_t = sum_i N_i``."""

    name = "ds-ucb"

    def __init__(self, n_arms, gamma, B=1.0, xi=2 / 3, rngs=None, n_envs=None):
        if not 0 < gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not (B > 0 and xi > 0):
            raise ValueError("B and xi must be positive")
        self.gamma = float(gamma)
        self.B = float(B)
        self.xi = float(xi)
        super().__init__(n_arms, rngs, n_envs)

    def reset(self):
        self.posterior = DiscountedPosterior(self.n_envs, self.K, self.gamma)

    def indices(self) -> np.ndarray:
        N = self.posterior.N
        n_t = N.sum(axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            pad = 2.0 * self.B * np.sqrt(self.xi * np.log(n_t) / N)
        return np.where(N > 0, self.posterior.mu_hat + pad, np.inf)

    def select(self, t):
        return self.indices().argmax(axis=1)

    def update(self, t, arms, rewards):
        self.posterior.update(arms, rewards)

    def params(self):
        return {"gamma": self.gamma, "B": self.B, "xi": self.xi}


class Exp3S(Policy):
    """Exponential weights with a fixed share ``alpha`` and uniform mixing ``gamma_mix``."""

    name = "exp3s"

    def __init__(self, n_arms, alpha, gamma_mix, rngs=None, n_envs=None):
        if alpha < 0:
            raise ValueError("alpha must be non-negative")
        if not 0 < gamma_mix <= 1:
            raise ValueError("gamma_mix must lie in (0, 1]")
        self.alpha = float(alpha)
        self.gamma_mix = float(gamma_mix)
        super().__init__(n_arms, rngs, n_envs)

    def reset(self):
        self.weights = np.ones((self.n_envs, self.K))
        self._u = self._draws(1, "uniform")
        self._p = None

    def probabilities(self) -> np.ndarray:
        w = self.weights
        return (1.0 - self.gamma_mix) * w / w.sum(axis=1, keepdims=True) + self.gamma_mix / self.K

    def select(self, t):
        p = self.probabilities()
        self._p = p
        cdf = np.cumsum(p, axis=1)
        u = self._u.next() * cdf[:, -1:]
        return np.minimum((cdf <= u).sum(axis=1), self.K - 1)

    def update(self, t, arms, rewards):
        r = self._rows
        w = self.weights
        share = (math.e * self.alpha / self.K) * w.sum(axis=1)
        gain = rewards / self._p[r, arms]
        w[r, arms] *= np.exp(self.gamma_mix * gain / self.K)
        w += share[:, None]
        w /= w.max(axis=1, keepdims=True)

    def params(self):
        return {"alpha": self.alpha, "gamma_mix": self.gamma_mix}


class MUCB(Policy):
    """UCB1 restarted by a two-halves change detector, with scheduled forced exploration.

    Over each arm's last ``window`` observations since the last restart, a
    restart of all arms fires when ``|sum(newer half) - sum(older half)| >
    threshold``.  A forced round-robin pull happens whenever
    ``ceil(s * explore_frac)`` increments, ``s`` counting rounds since restart.
    """

    name = "m-ucb"

    def __init__(self, n_arms, window, threshold, explore_frac, rngs=None, n_envs=None):
        if int(window) != window or window < 2 or window % 2:
            raise ValueError("window must be an even integer >= 2")
        if not threshold > 0:
            raise ValueError("threshold must be positive")
        if not 0 < explore_frac < 1:
            raise ValueError("explore_frac must lie in (0, 1)")
        self.window = int(window)
        self.threshold = float(threshold)
        self.explore_frac = float(explore_frac)
        super().__init__(n_arms, rngs, n_envs)

    def reset(self):
        n, K, w = self.n_envs, self.K, self.window
        self.since = np.zeros(n, dtype=np.int64)
        self.counts = np.zeros((n, K), dtype=np.int64)
        self.sums = np.zeros((n, K))
        self._buf = np.zeros((n, K, w))
        self._new = np.zeros((n, K))
        self._old = np.zeros((n, K))
        self._forced = np.zeros(n, dtype=np.int64)
        self.restarts = np.zeros(n, dtype=np.int64)

    def select(self, t):
        s = self.since + 1
        g = self.explore_frac
        forced = np.ceil(s * g) > np.ceil((s - 1) * g)
        total = np.maximum(self.counts.sum(axis=1, keepdims=True), 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ucb = self.sums / self.counts + np.sqrt(2.0 * np.log(total) / self.counts)
        ucb = np.where(self.counts > 0, ucb, np.inf)
        arms = np.where(forced, self._forced % self.K, ucb.argmax(axis=1))
        self._forced += forced
        return arms

    def statistic(self) -> np.ndarray:
        """Current two-halves statistic per (replica, arm); meaningful once ``counts >= window``."""
        return np.abs(self._new - self._old)

    def update(self, t, arms, rewards):
        r = self._rows
        w, half = self.window, self.window // 2
        self.since += 1
        self.counts[r, arms] += 1
        self.sums[r, arms] += rewards
        c = self.counts[r, arms]
        pos = (c - 1) % w
        mover = np.where(c > half, self._buf[r, arms, (c - 1 - half) % w], 0.0)
        leaver = np.where(c > w, self._buf[r, arms, pos], 0.0)
        self._buf[r, arms, pos] = rewards
        self._new[r, arms] += rewards - mover
        self._old[r, arms] += mover - leaver
        fire = (c >= w) & (np.abs(self._new[r, arms] - self._old[r, arms]) > self.threshold)
        if fire.any():
            idx = np.flatnonzero(fire)
            self.since[idx] = 0
            self.counts[idx] = 0
            self.sums[idx] = 0.0
            self._new[idx] = 0.0
            self._old[idx] = 0.0
            self._forced[idx] = 0
            self.restarts[idx] += 1

    def params(self):
        return {"window": self.window, "threshold": self.threshold, "explore_frac": self.explore_frac}


class UniformRandom(Policy):
    name = "random"

    def reset(self):
        self._u = self._draws(1, "uniform")

    def select(self, t):
        return np.minimum((self._u.next()[:, 0] * self.K).astype(np.int64), self.K - 1)

    def update(self, t, arms, rewards):
        pass


class Oracle(Policy):
    """Plays an arm with the highest true mean; needs the replicas' environments."""

    name = "oracle"

    def __init__(self, n_arms, envs, rngs=None, n_envs=None):
        self._means = BatchMeans(envs)
        super().__init__(n_arms, rngs, len(self._means.envs) if n_envs is None else n_envs)

    def reset(self):
        pass

    def select(self, t):
        return self._means.at(t).argmax(axis=1)

    def update(self, t, arms, rewards):
        pass


POLICIES = {cls.name: cls for cls in
            (DiscountedTS, GaussianTS, SlidingWindowTS, DiscountedUCB, Exp3S, MUCB, UniformRandom, Oracle)}


def make_policy(name: str, n_arms: int, params: dict | None = None, rngs=None, envs=None,
                n_envs: int | None = None) -> Policy:
    """Build a policy by registry name with concrete parameters."""
    try:
        cls = POLICIES[name]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}") from None
    params = dict(params or {})
    if cls is Oracle:
        if envs is None:
            raise ValueError("the oracle policy needs the environments")
        return Oracle(n_arms, envs, rngs, n_envs)
    return cls(n_arms, **params, rngs=rngs, n_envs=n_envs)
