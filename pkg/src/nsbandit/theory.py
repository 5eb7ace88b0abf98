"""Closed-form regret-bound quantities and deterministic checkers.

The bound evaluators are numerically vacuous at practical scales (the
constant ``C`` alone exceeds ``e**25 ~ 7.2e10``); they exist to make the
structure of the bounds checkable: finiteness, monotonicity and the
feasibility conditions on ``gamma``.  Large factors are combined in log space.

The checkers verify inequalities that hold for *every* pull sequence, so a
single violation is a bug, not bad luck.  Discounted counts follow
``N_t = sum_{j<=t} gamma**(t-j) 1{i_j = i}``, i.e. they include round ``t``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DomainError",
    "InfeasibleParameters",
    "GammaDomainWarning",
    "TheoryParams",
    "BoundReport",
    "d_gamma",
    "u_t",
    "gaussian_tail_F",
    "log_gaussian_tail_F",
    "gaussian_upper_tail",
    "a_gamma",
    "theorem1_bound",
    "theorem2_bound",
    "check_theorem2_conditions",
    "tau_max_condition",
    "gamma_for_abrupt",
    "gamma_for_smooth",
    "PseudoStationarySet",
    "pseudo_stationary_set",
    "change_points",
    "h_delta_set",
    "Assumption2Report",
    "check_assumption2",
    "lipschitz_scan",
    "sign_change_count",
    "LemmaReport",
    "discounted_history",
    "check_lemma_mean_drift",
    "check_counting_lemma",
    "beta_feasible_range",
]

GAMMA_MIN = 1.0 - 1.0 / math.e
TAU_MIN = 1.0 / (12.0 * math.sqrt(2.0))
_LOG_E25 = 25.0


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class InfeasibleParameters(ValueError):
    """The conditions of the smooth-setting bound do not hold.

    ``condition`` names the inequality that failed.
    """

    def __init__(self, condition: str, detail: str = ""):
        self.condition = condition
        self.detail = detail
        super().__init__(f"infeasible parameters: {condition}" + (f" ({detail})" if detail else ""))


class GammaDomainWarning(UserWarning):
    pass


def _check_gamma(gamma):
    if not GAMMA_MIN < gamma < 1:
        raise DomainError(f"gamma={gamma} outside (1 - 1/e, 1)")


def _log1_over(gamma):
    """log(1 / (1 - gamma))."""
    return -math.log1p(-gamma)


def _log_gamma_pow(gamma):
    """log of gamma**(-1/(1-gamma)), always positive."""
    return -math.log(gamma) / (1.0 - gamma)


def _logaddexp(*xs):
    m = max(xs)
    return m + math.log(sum(math.exp(x - m) for x in xs))


def d_gamma(gamma: float) -> float:
    """Length of the window after a change during which estimates are unreliable."""
    _check_gamma(gamma)
    inner = math.log((1.0 - gamma) ** 2 * _log1_over(gamma))
    return inner / math.log(gamma)


def u_t(gamma, n):
    """Deviation radius sqrt((1-gamma) log(1/(1-gamma)) / N); vectorised over ``n``."""
    if not 0 < gamma < 1:
        raise DomainError("gamma must lie in (0, 1)")
    n = np.asarray(n, dtype=float)
    if np.any(n <= 0):
        raise DomainError("N must be positive")
    out = np.sqrt((1.0 - gamma) * _log1_over(gamma) / n)
    return float(out) if out.ndim == 0 else out


def log_gaussian_tail_F(x: float) -> float:
    if not x > 0:
        raise DomainError("x must be positive")
    return -0.5 * math.log(2 * math.pi) + math.log(x) - math.log1p(x * x) - 0.5 * x * x


def gaussian_tail_F(x: float) -> float:
    """Lower Gaussian tail bound ``x / (1 + x^2) * phi(x)`` for ``x > 0``."""
    return math.exp(log_gaussian_tail_F(x))


def gaussian_upper_tail(x: float) -> float:
    """Matching upper bound ``exp(-x^2/2) / (x + sqrt(x^2 + 4))``."""
    return math.exp(-0.5 * x * x) / (x + math.sqrt(x * x + 4.0))


@dataclass
class TheoryParams:
    gamma: float
    T: int
    B_T: int = 1
    Delta_T: float | None = None
    Delta: float | None = None
    sigma: float = 0.0
    beta: float = 1.0
    F_a2: float | None = None
    Delta_0: float = 1.0 / 3.0
    mu_max: float = 1.0
    tau_max: float = 0.2


@dataclass
class BoundReport:
    """Bound on expected suboptimal plays of one arm, with its components.

    ``value`` is the per-arm bound; multiply by ``K`` for a regret bound.
    ``log_growth`` is the log of the second (growth) term.
    """

    setting: str
    value: float
    components: dict = field(default_factory=dict)
    log_growth: float = 0.0

    def regret_bound(self, K: int) -> float:
        return K * self.value


def a_gamma(gamma, delta_T=None, *, setting="abrupt", delta=None, sigma=0.0):
    """Threshold on the discounted count beyond which an arm is well estimated."""
    _check_gamma(gamma)
    n = 12.0 * math.sqrt(2.0) + 3.0 * math.sqrt(1.0 - gamma)
    if setting == "abrupt":
        if delta_T is None or not 0 < delta_T < 1:
            raise DomainError("abrupt setting needs Delta_T in (0, 1)")
        margin = delta_T
    elif setting == "smooth":
        if delta is None or not 0 < delta < 1:
            raise DomainError("smooth setting needs Delta in (0, 1)")
        margin = delta / 3.0 - 2.0 * sigma * d_gamma(gamma)
        if margin <= 0:
            raise InfeasibleParameters("2*sigma*D(gamma) >= Delta/3",
                                       f"2*sigma*D(gamma) = {2 * sigma * d_gamma(gamma):.6g}, Delta/3 = {delta / 3:.6g}")
    else:
        raise ValueError(f"unknown setting {setting!r}")
    return n * n * _log1_over(gamma) / (margin * margin)


def _log_C(mu_max, tau_max, extra):
    """log(e^25 + extra + 1/F(mu_max/tau_max))."""
    return _logaddexp(_LOG_E25, math.log(extra), -log_gaussian_tail_F(mu_max / tau_max))


def _check_common(p: TheoryParams):
    _check_gamma(p.gamma)
    if p.tau_max < TAU_MIN:
        raise DomainError(f"tau_max={p.tau_max} below 1/(12 sqrt 2) = {TAU_MIN:.6g}")
    if not 0 < p.mu_max <= 1:
        raise DomainError("mu_max must lie in (0, 1]")
    if p.T < 1:
        raise DomainError("T must be positive")


def theorem1_bound(p: TheoryParams, *, lemma_l: bool = False) -> BoundReport:
    """Abruptly changing setting: ``B_T D + (C+2) L gamma^(-1/(1-gamma)) T (1-gamma) log(1/(1-gamma))``.

    ``lemma_l=True`` uses the variant of ``L`` without the
    ``gamma**(1/(1-gamma))`` factor in its denominator.
    """
    _check_common(p)
    if p.Delta_T is None or not 0 < p.Delta_T < 1:
        raise DomainError("Delta_T must lie in (0, 1)")
    g = p.gamma
    lg = _log1_over(g)
    D = d_gamma(g)
    log_gpow = _log_gamma_pow(g)
    log_L = (math.log(144.0) + 2 * math.log1p(math.sqrt(2.0))
             + math.log(_logaddexp(lg, _LOG_E25)) - 2 * math.log(p.Delta_T))
    if not lemma_l:
        log_L += log_gpow
    log_C = _log_C(p.mu_max, p.tau_max, 12.0)
    log_C2 = _logaddexp(log_C, math.log(2.0))
    log_growth = log_C2 + log_L + log_gpow + math.log(p.T) + math.log1p(-g) + math.log(lg)
    first = p.B_T * D
    growth = math.exp(log_growth)
    comps = {
        "D(gamma)": D,
        "B_T*D(gamma)": first,
        "L(gamma)": math.exp(log_L),
        "C": math.exp(log_C),
        "gamma^(-1/(1-gamma))": math.exp(log_gpow),
        "growth term": growth,
    }
    return BoundReport("abrupt", first + growth, comps, log_growth)


def check_theorem2_conditions(gamma, sigma, delta, delta0):
    """Raise :class:`InfeasibleParameters` unless ``2 sigma D(gamma) < Delta/3 <= Delta_0``."""
    _check_gamma(gamma)
    lhs = 2.0 * sigma * d_gamma(gamma)
    if not lhs < delta / 3.0:
        raise InfeasibleParameters("2*sigma*D(gamma) >= Delta/3",
                                   f"2*sigma*D(gamma) = {lhs:.6g}, Delta/3 = {delta / 3:.6g}")
    if not delta / 3.0 <= delta0:
        raise InfeasibleParameters("Delta/3 > Delta_0", f"Delta/3 = {delta / 3:.6g}, Delta_0 = {delta0:.6g}")


def theorem2_bound(p: TheoryParams) -> BoundReport:
    """Smoothly changing setting: ``F Delta T^beta + M(gamma) T (1-gamma) log(1/(1-gamma))``."""
    _check_common(p)
    if p.Delta is None or not 0 < p.Delta < 1:
        raise DomainError("Delta must lie in (0, 1)")
    if p.F_a2 is None or not p.F_a2 > 0:
        raise DomainError("the Assumption-2 constant F must be positive")
    if not 0 <= p.beta <= 1:
        raise DomainError("beta must lie in [0, 1]")
    check_theorem2_conditions(p.gamma, p.sigma, p.Delta, p.Delta_0)
    g = p.gamma
    lg = _log1_over(g)
    D = d_gamma(g)
    log_gpow = _log_gamma_pow(g)
    margin = p.Delta / 3.0 - 2.0 * p.sigma * D
    log_m1 = (math.log(144.0) + 2 * math.log1p(math.sqrt(2.0)) + math.log(_logaddexp(lg, _LOG_E25))
              + log_gpow - 2 * math.log(p.Delta) + _log_C(p.mu_max, p.tau_max, 13.0))
    log_m2 = math.log(594.0) + log_gpow - 2 * math.log(margin)
    log_M = _logaddexp(log_m1, log_m2)
    log_growth = log_M + math.log(p.T) + math.log1p(-g) + math.log(lg)
    first = p.F_a2 * p.Delta * p.T ** p.beta
    growth = math.exp(log_growth)
    comps = {
        "D(gamma)": D,
        "2*sigma*D(gamma)": 2.0 * p.sigma * D,
        "Delta/3": p.Delta / 3.0,
        "F*Delta*T^beta": first,
        "M(gamma)": math.exp(log_M),
        "M second part": math.exp(log_m2),
        "growth term": growth,
    }
    return BoundReport("smooth", first + growth, comps, log_growth)


def tau_max_condition(gamma, delta_T) -> float:
    """Smallest ``tau_max`` the abrupt analysis actually needs."""
    _check_gamma(gamma)
    n = 12.0 * math.sqrt(2.0) + 3.0 * math.sqrt(1.0 - gamma)
    return delta_T / n / math.sqrt(_log1_over(gamma))


def _warn_domain(gamma):
    if not gamma > GAMMA_MIN:
        warnings.warn(f"gamma={gamma:.6g} is not above 1 - 1/e; the bounds do not apply",
                      GammaDomainWarning, stacklevel=3)


def gamma_for_abrupt(T: int, B_T: int) -> float:
    """``1 - sqrt(B_T / T)``; warns when the result leaves (1 - 1/e, 1)."""
    if not 1 <= B_T <= T:
        raise DomainError("need 1 <= B_T <= T")
    g = 1.0 - math.sqrt(B_T / T)
    _warn_domain(g)
    return g


def gamma_for_smooth(T: int, beta: float) -> float:
    """``1 - 1 / T^(1 - beta)``; warns when the result leaves (1 - 1/e, 1)."""
    if not 0 <= beta < 1:
        raise DomainError("beta must lie in [0, 1)")
    g = 1.0 - 1.0 / T ** (1.0 - beta)
    _warn_domain(g)
    return g


@dataclass
class PseudoStationarySet:
    """Boolean mask over rounds ``1..T``: ``in_T[t-1]`` iff ``t`` is pseudo-stationary."""

    in_T: np.ndarray
    D: float

    @property
    def S(self) -> np.ndarray:
        """1-based rounds outside the pseudo-stationary phase."""
        return np.flatnonzero(~self.in_T) + 1

    def __len__(self):
        return len(self.in_T)


def pseudo_stationary_set(breakpoints, T: int, gamma: float | None = None, *, D: float | None = None
                          ) -> PseudoStationarySet:
    """Rounds whose trailing window ``(t - D, t]`` (clipped at 1) holds no change.

    A breakpoint ``b > 1`` changes the means between rounds ``b-1`` and ``b``,
    so it spoils exactly the rounds ``b <= t < b + D - 1``.
    """
    if D is None:
        D = d_gamma(gamma)
    mask = np.ones(T, dtype=bool)
    for b in np.asarray(breakpoints, dtype=np.int64):
        if b <= 1 or b > T:
            continue
        stop = min(T + 1, math.ceil(b + D - 1))
        mask[b - 1: stop - 1] = False
    return PseudoStationarySet(mask, float(D))


def change_points(means) -> np.ndarray:
    """Round 1 followed by every round whose mean vector differs from the previous one."""
    means = np.asarray(means)
    moved = np.any(means[1:] != means[:-1], axis=1)
    return np.concatenate([[1], np.flatnonzero(moved) + 2])


def _means_of(env_or_means):
    if hasattr(env_or_means, "means_matrix"):
        return env_or_means.means_matrix()
    return np.asarray(env_or_means, dtype=float)


def h_delta_set(env_or_means, delta: float) -> np.ndarray:
    """1-based rounds at which some pair of arms is closer than ``delta``."""
    m = np.sort(_means_of(env_or_means), axis=1)
    close = np.any(np.diff(m, axis=1) < delta, axis=1)
    return np.flatnonzero(close) + 1


@dataclass
class Assumption2Report:
    F: float
    beta: float
    delta0: float
    rows: list  # (delta, |H|, F * delta * T^beta, ok)

    @property
    def ok(self) -> bool:
        return all(r[3] for r in self.rows)

    @property
    def violations(self) -> list:
        return [r for r in self.rows if not r[3]]


def check_assumption2(env_or_means, deltas, F: float, beta: float, delta0: float = 1.0 / 3.0
                      ) -> Assumption2Report:
    """Compare ``|H(delta, T)|`` with ``F * delta * T^beta`` for each ``delta < delta0``."""
    means = _means_of(env_or_means)
    T = means.shape[0]
    rows = []
    for d in deltas:
        if not d < delta0:
            raise DomainError(f"delta={d} is not below Delta_0={delta0}")
        size = len(h_delta_set(means, d))
        cap = F * d * T ** beta
        rows.append((float(d), size, cap, size <= cap))
    return Assumption2Report(F, beta, delta0, rows)


def lipschitz_scan(env_or_means) -> float:
    """Largest one-round change of any arm's mean."""
    m = _means_of(env_or_means)
    if len(m) < 2:
        return 0.0
    return float(np.max(np.abs(np.diff(m, axis=0))))


def sign_change_count(env_or_means) -> int:
    """Rounds ``t < T`` at which the order of some pair of arms flips strictly."""
    m = _means_of(env_or_means)
    diff = m[:, :, None] - m[:, None, :]
    flips = np.any(diff[:-1] * diff[1:] < 0, axis=(1, 2))
    return int(flips.sum())


@dataclass
class LemmaReport:
    name: str
    checked: int
    violations: list  # (t, arm, lhs, rhs) with 1-based t, 0-based arm

    @property
    def ok(self) -> bool:
        return not self.violations

    def first(self):
        return self.violations[0] if self.violations else None


def discounted_history(pulls, K: int, gamma: float, means=None):
    """Per-round discounted counts ``N_t`` and mean-weighted sums ``M_t``, shape ``(T, K)``.

    Row ``t-1`` includes round ``t``.  ``M_t / N_t`` is the discounted average
    of the true means over the rounds the arm was played.
    """
    pulls = np.asarray(pulls, dtype=np.int64)
    T = len(pulls)
    N = np.empty((T, K))
    M = np.empty((T, K)) if means is not None else None
    n = np.zeros(K)
    m = np.zeros(K)
    for t in range(T):
        n *= gamma
        n[pulls[t]] += 1.0
        N[t] = n
        if means is not None:
            m *= gamma
            m[pulls[t]] += means[t, pulls[t]]
            M[t] = m
    return N, M


def check_lemma_mean_drift(pulls, env_or_means, gamma: float, *, setting: str = "abrupt",
                           sigma: float | None = None, rtol: float = 1e-12) -> LemmaReport:
    """Check ``|mu_t(i) - mu_dd_t(i)| <= U_t(i)`` (+ ``sigma D(gamma)`` when smooth).

    ``mu_dd_t(i)`` is the discounted average of arm ``i``'s true means over the
    rounds it was played.  In the abrupt setting only pseudo-stationary rounds
    are checked; in the smooth setting every round with ``N_t > 0``.
    """
    means = _means_of(env_or_means)
    T, K = means.shape
    pulls = np.asarray(pulls, dtype=np.int64)[:T]
    D = d_gamma(gamma)
    N, M = discounted_history(pulls, K, gamma, means[: len(pulls)])
    T = len(pulls)
    means = means[:T]
    if setting == "abrupt":
        rounds = pseudo_stationary_set(change_points(means), T, D=D).in_T
        slack = 0.0
    elif setting == "smooth":
        if sigma is None:
            sigma = getattr(env_or_means, "sigma", None)
        if sigma is None:
            raise ValueError("smooth setting needs sigma")
        rounds = np.ones(T, dtype=bool)
        slack = sigma * D
    else:
        raise ValueError(f"unknown setting {setting!r}")
    ok = (N > 0) & rounds[:, None]
    safe_N = np.where(ok, N, 1.0)
    lhs = np.abs(means - M / safe_N)
    rhs = np.sqrt((1.0 - gamma) * _log1_over(gamma) / safe_N) + slack
    bad = ok & (lhs > rhs * (1.0 + rtol))
    viol = [(int(t) + 1, int(i), float(lhs[t, i]), float(rhs[t, i])) for t, i in zip(*np.nonzero(bad))]
    return LemmaReport(f"mean-drift ({setting})", int(ok.sum()), viol)


def check_counting_lemma(pulls, K: int, gamma: float, A: float) -> LemmaReport:
    """Check ``#{t : i_t = i, N_t(i) < A} <= ceil(T (1-gamma)) A gamma^(-1/(1-gamma))`` for each arm."""
    if not 0 < gamma < 1:
        raise DomainError("gamma must lie in (0, 1)")
    pulls = np.asarray(pulls, dtype=np.int64)
    T = len(pulls)
    N, _ = discounted_history(pulls, K, gamma)
    own = N[np.arange(T), pulls]
    rhs = math.ceil(T * (1.0 - gamma)) * A * math.exp(_log_gamma_pow(gamma))
    viol = []
    for i in range(K):
        count = int(np.sum((pulls == i) & (own < A)))
        if count > rhs:
            viol.append((T, i, float(count), rhs))
    return LemmaReport("counting", K, viol)


def beta_feasible_range(delta, sigma, T, F, P):
    """Interval of ``beta`` admissible for the smooth bound; ``(lo, 1.0)``, empty when ``lo > 1``."""
    if min(delta, sigma, F, P) <= 0 or T < 3:
        raise DomainError("arguments must be positive and T >= 3")
    lT = math.log(T)
    first = 1.0 - math.log(delta / (12.0 * sigma * lT)) / lT
    second = 0.5 - math.log(math.sqrt(F * delta / (24.0 * P * lT))) / lT
    return max(first, second), 1.0
