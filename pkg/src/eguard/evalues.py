"""Constructors for every e-value family used by the guards, plus the
transforms applied to them: admissible rescaling, hedging, and boosting.

All return values are log-domain floats (see :mod:`eguard.numerics`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from .numerics import (
    LOG_INF,
    LOG_ZERO,
    solve_increasing_root,
    std_normal_cdf,
    std_normal_quantile,
)

__all__ = [
    "OnlineSimpleParams",
    "OnlineAdaptiveParams",
    "FreedmanParams",
    "HedgeSchedule",
    "GammaWeights",
    "inverse_square_weights",
    "online_simple_evalue",
    "online_simple_slack",
    "online_adaptive_evalue",
    "online_adaptive_slack",
    "calibrate_lift",
    "gro_gaussian_evalue",
    "hedge",
    "tau_hat_update",
    "boosting_cutoff",
    "boost_factor_lognormal",
    "boost_factor_hedged_lognormal",
    "freedman_evalue",
    "soft_rank_evalue",
    "exe_experimental_truncation",
]


def _check_level(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


@dataclass(frozen=True)
class OnlineSimpleParams:
    """Parameters of the two-valued indicator e-value for a p-value stream.

    ``c`` and ``theta_c`` are derived so that a product of these e-values
    crosses 1/alpha exactly when the centered rejection count reaches c*a.
    """

    alpha: float
    a: float = 1.0
    c: float = field(init=False)
    theta_c: float = field(init=False)

    def __post_init__(self) -> None:
        _check_level(self.alpha)
        if self.a <= 0.0:
            raise ValueError(f"a must be positive, got {self.a}")
        log_inv = math.log(1.0 / self.alpha)
        theta = math.log1p(log_inv / self.a)
        object.__setattr__(self, "c", log_inv / (self.a * theta))
        object.__setattr__(self, "theta_c", theta)


def online_simple_evalue(p: float, alpha_i: float, params: OnlineSimpleParams) -> float:
    """log e-value theta_c * (1{p <= alpha_i} - c*alpha_i)."""
    hit = 1.0 if p <= alpha_i else 0.0
    return params.theta_c * (hit - params.c * alpha_i)


def online_simple_slack(alpha_i: float, params: OnlineSimpleParams) -> float:
    """Expected value u_i of the indicator e-value under an exactly uniform p.

    Dividing the e-value by u_i yields its admissible version.
    """
    th, c = params.theta_c, params.c
    return alpha_i * math.exp(th * (1.0 - c * alpha_i)) + (1.0 - alpha_i) * math.exp(
        -th * c * alpha_i
    )


@dataclass(frozen=True)
class OnlineAdaptiveParams:
    """Parameters of the three-valued e-value that discounts only clear nulls.

    ``B`` bounds alpha_i/(1-lambda_i) over the whole stream.
    """

    alpha: float
    a: float = 1.0
    B: float = 1.0
    c: float = field(init=False)
    theta_c: float = field(init=False)

    def __post_init__(self) -> None:
        _check_level(self.alpha)
        if self.a <= 0.0:
            raise ValueError(f"a must be positive, got {self.a}")
        if not 0.0 < self.B < math.inf:
            raise ValueError(f"B must be positive and finite, got {self.B}")
        log_inv = math.log(1.0 / self.alpha)
        c = log_inv / (self.a * math.log1p((1.0 - self.alpha ** (self.B / self.a)) / self.B))
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "theta_c", log_inv / (c * self.a))


def _check_adaptive_step(alpha_i: float, lambda_i: float, params: OnlineAdaptiveParams) -> None:
    if not alpha_i <= lambda_i < 1.0:
        raise ValueError(f"need alpha_i <= lambda_i < 1, got {alpha_i}, {lambda_i}")
    if alpha_i / (1.0 - lambda_i) > params.B * (1.0 + 1e-12):
        raise ValueError(
            f"alpha_i/(1-lambda_i) = {alpha_i / (1.0 - lambda_i)} exceeds B = {params.B}"
        )


def online_adaptive_evalue(
    p: float, alpha_i: float, lambda_i: float, params: OnlineAdaptiveParams
) -> float:
    """log e-value theta_c * (1{p <= alpha_i} - c*(alpha_i/(1-lambda_i))*1{p > lambda_i})."""
    _check_adaptive_step(alpha_i, lambda_i, params)
    hit = 1.0 if p <= alpha_i else 0.0
    miss = 1.0 if p > lambda_i else 0.0
    return params.theta_c * (hit - params.c * (alpha_i / (1.0 - lambda_i)) * miss)


def online_adaptive_slack(
    alpha_i: float, lambda_i: float, params: OnlineAdaptiveParams
) -> float:
    """Expected value of the three-valued e-value under an exactly uniform p."""
    _check_adaptive_step(alpha_i, lambda_i, params)
    th, c = params.theta_c, params.c
    low = math.exp(-th * c * alpha_i / (1.0 - lambda_i))
    return (math.exp(th) - 1.0) * alpha_i + lambda_i * (1.0 - low) + low


def calibrate_lift(p: float, x: float) -> float:
    """log of the calibrator e-value exp(x * Phi^{-1}(1-p) - x^2/2).

    p = 0 maps to an infinite e-value and p = 1 to a zero e-value.
    """
    if x <= 0.0:
        raise ValueError(f"x must be positive, got {x}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p == 0.0:
        return LOG_INF
    if p == 1.0:
        return LOG_ZERO
    # Phi^{-1}(1-p) = -Phi^{-1}(p); the negated form keeps tail accuracy.
    return -x * std_normal_quantile(p) - 0.5 * x * x


def gro_gaussian_evalue(x_obs: float, mu0: float, mu1: float) -> float:
    """log likelihood ratio of N(mu1, 1) against N(mu0, 1) at ``x_obs``."""
    delta = mu1 - mu0
    if delta == 0.0:
        raise ValueError("mu1 must differ from mu0")
    return delta * (x_obs - mu0) - 0.5 * delta * delta


def hedge(log_e: float, lam: float) -> float:
    """log(1 - lam + lam * exp(log_e)): mix the e-value with the constant 1."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if lam == 0.0:
        return 0.0
    if lam == 1.0:
        return log_e
    if log_e == LOG_INF:
        return LOG_INF
    if log_e <= 0.0:
        return math.log1p(lam * math.expm1(log_e))
    return log_e + math.log(lam + (1.0 - lam) * math.exp(-log_e))


@dataclass(frozen=True)
class HedgeSchedule:
    """Predictable hedging weights: fixed, or the running alternative-fraction
    estimate (1/2 + #{past raw e-values > 1}) / i.
    """

    mode: str = "adaptive"  # "adaptive" | "fixed"
    fixed_lambda: float = 0.5
    count_above_one: int = 0
    steps: int = 0

    def next_lambda(self) -> float:
        """Weight for the upcoming step; uses strictly past evidence only."""
        if self.mode == "fixed":
            return self.fixed_lambda
        return (0.5 + self.count_above_one) / (self.steps + 1)


def tau_hat_update(state: HedgeSchedule, raw_log_e: float) -> HedgeSchedule:
    """Fold one raw (pre-hedge, pre-boost) e-value into the schedule."""
    return replace(
        state,
        count_above_one=state.count_above_one + (1 if raw_log_e > 0.0 else 0),
        steps=state.steps + 1,
    )


def boosting_cutoff(
    active_logs: Sequence[float], log_product_active_and_discards: float, alpha: float
) -> float:
    """log of the truncation cutoff m_t = max{max_A E_i, 1/(alpha * prod E_i)}.

    Both arguments describe the state *before* the upcoming e-value; the
    cutoff is therefore predictable.
    """
    _check_level(alpha)
    best = -math.log(alpha) - log_product_active_and_discards
    for v in active_logs:
        if v > best:
            best = v
    return best


def _truncated_lognormal_mean(b: float, delta: float, m: float) -> float:
    """E[min(b*E, m)] for E log-normal with parameters (-delta^2/2, delta)."""
    log_ratio = math.log(m / b)
    return b * (1.0 - std_normal_cdf(0.5 * delta - log_ratio / delta)) + m * (
        1.0 - std_normal_cdf((log_ratio + 0.5 * delta * delta) / delta)
    )


def boost_factor_lognormal(delta: float, m: float, tol: float = 1e-8) -> float:
    """Largest b with E[min(b*E, m)] <= 1 for a log-normal null e-value."""
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    if m < 1.0:
        raise ValueError(f"cutoff m must be at least 1, got {m}")
    if m == LOG_INF or _truncated_lognormal_mean(1.0, delta, m) >= 1.0:
        return 1.0
    hi = 2.0
    while _truncated_lognormal_mean(hi, delta, m) < 1.0:
        hi *= 2.0
        if hi > 1e12:
            return hi
    return solve_increasing_root(
        lambda b: _truncated_lognormal_mean(b, delta, m) - 1.0, 1.0, hi, tol
    )


def _truncated_hedged_mean(b: float, delta: float, lam: float, m: float) -> float:
    """E[min(b*(1-lam+lam*E), m)] for a log-normal E, valid for b < 1/(1-lam)."""
    s = (lam - 1.0 + m / b) / lam
    log_s = math.log(s)
    return (
        m
        + std_normal_cdf((log_s + 0.5 * delta * delta) / delta) * (b * (1.0 - lam) - m)
        + b * lam * (1.0 - std_normal_cdf(0.5 * delta - log_s / delta))
    )


def boost_factor_hedged_lognormal(
    delta: float, lam: float, m: float, tol: float = 1e-8
) -> float:
    """Largest b in [1, 1/(1-lam)) with E[min(b*(1-lam+lam*E), m)] <= 1."""
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if m < 1.0:
        raise ValueError(f"cutoff m must be at least 1, got {m}")
    if lam == 1.0:
        return boost_factor_lognormal(delta, m, tol)
    if lam == 0.0 or m == LOG_INF:
        return 1.0
    hi = (1.0 / (1.0 - lam)) * (1.0 - 1e-12)
    if _truncated_hedged_mean(1.0, delta, lam, m) >= 1.0:
        return 1.0
    if _truncated_hedged_mean(hi, delta, lam, m) <= 1.0:
        return hi
    return solve_increasing_root(
        lambda b: _truncated_hedged_mean(b, delta, lam, m) - 1.0, 1.0, hi, tol
    )


_PI2 = math.pi * math.pi


@dataclass(frozen=True)
class FreedmanParams:
    """Parameters of the Freedman-style indicator e-value at variance budget a.

    The per-budget level alpha(a) spends the global level over the half-power
    budget grid; kappa/lambda/psi follow from it.
    """

    alpha: float
    a: float
    level_a: float = field(init=False)
    kappa_a: float = field(init=False)
    lambda_a: float = field(init=False)
    psi_lambda: float = field(init=False)

    def __post_init__(self) -> None:
        _check_level(self.alpha)
        if self.a <= 0.0:
            raise ValueError(f"a must be positive, got {self.a}")
        level = self.alpha * 6.0 / (max(2.0 * math.log2(self.a), 1.0) ** 2 * (_PI2 + 6.0))
        log_inv = math.log(1.0 / level)
        kappa = math.sqrt(2.0 * self.a * log_inv) + 0.5 * log_inv
        lam = math.log1p(kappa / self.a)
        object.__setattr__(self, "level_a", level)
        object.__setattr__(self, "kappa_a", kappa)
        object.__setattr__(self, "lambda_a", lam)
        object.__setattr__(self, "psi_lambda", math.exp(lam) - lam - 1.0)


def freedman_evalue(p: float, alpha_i: float, params: FreedmanParams) -> float:
    """log e-value lambda_a*(1{p <= alpha_i} - alpha_i) - psi(lambda_a)*alpha_i*(1-alpha_i)."""
    hit = 1.0 if p <= alpha_i else 0.0
    return params.lambda_a * (hit - alpha_i) - params.psi_lambda * alpha_i * (1.0 - alpha_i)


def soft_rank_evalue(score: float, calib_scores: Sequence[float]) -> float:
    """log of (n+1)*s / (s + sum of calibration scores); all-zero total gives 0."""
    if not calib_scores:
        raise ValueError("at least one calibration score required")
    if score < 0.0 or any(s < 0.0 for s in calib_scores):
        raise ValueError("scores must be nonnegative")
    total = score + sum(calib_scores)
    if score == 0.0 or total == 0.0:
        return LOG_ZERO
    n = len(calib_scores)
    return math.log((n + 1) * score / total)


@dataclass(frozen=True)
class GammaWeights:
    """Nonincreasing, summable weights for the weighted-average statistic."""

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        w = self.weights
        if any(x < 0.0 for x in w):
            raise ValueError("weights must be nonnegative")
        if any(w[i] < w[i + 1] for i in range(len(w) - 1)):
            raise ValueError("weights must be nonincreasing")
        if sum(w) > 1.0 + 1e-12:
            raise ValueError("weights must sum to at most 1")

    def __getitem__(self, rank: int) -> float:
        """Weight for 1-based rank; ranks beyond the stored prefix get 0."""
        if rank < 1:
            raise IndexError(f"rank must be >= 1, got {rank}")
        if rank > len(self.weights):
            return 0.0
        return self.weights[rank - 1]


def inverse_square_weights(n: int) -> GammaWeights:
    """The weights 6/(pi^2 i^2) for i = 1..n (total mass < 1 for finite n)."""
    return GammaWeights(tuple(6.0 / (_PI2 * i * i) for i in range(1, n + 1)))


def exe_experimental_truncation(t: int, alpha: float) -> float:
    """Experimental truncation cutoff t/alpha for exchangeable streams.

    The documented cutoff is ambiguous between t/alpha and 1/(alpha*t); the
    crossing level t/alpha is exposed here, and no default pipeline uses it.
    """
    _check_level(alpha)
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    return t / alpha
