"""Ready-made procedures for p-value streams.

Each improved method routes through a guard from :mod:`eguard.guards`; each
published baseline it must dominate is implemented verbatim from its
ceil/floor formula so that dominance tests compare against the published
object rather than a reimplementation.

The query path for every method here is S_t = {i <= t : p_i <= alpha_i}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .evalues import (
    FreedmanParams,
    OnlineAdaptiveParams,
    OnlineSimpleParams,
    freedman_evalue,
    online_adaptive_evalue,
    online_adaptive_slack,
    online_simple_evalue,
    online_simple_slack,
)
from .guards import MixtureGuard, SeqEGuard
from .trace import BoundTrace

__all__ = [
    "PStreamConfig",
    "online_simple_baseline",
    "closed_online_simple",
    "closed_online_simple_sum_form",
    "admissible_online_simple",
    "online_adaptive_baseline",
    "online_adaptive_improved",
    "u_online_simple",
    "m_online_simple",
    "u_online_freedman",
    "m_online_freedman",
]

_PI2 = math.pi * math.pi

DEFAULT_A_MAX = 100
DEFAULT_J_MAX = 40


@dataclass(frozen=True)
class PStreamConfig:
    """Configuration shared by the p-value stream procedures."""

    alpha: float
    a: float = 1.0
    a_max: int = DEFAULT_A_MAX
    j_max: int = DEFAULT_J_MAX
    B: float = 1.0


def _check_stream(ps: Sequence[float], alphas: Sequence[float]) -> None:
    if len(ps) != len(alphas):
        raise ValueError("p-value and threshold sequences must align")


def online_simple_baseline(
    ps: Sequence[float], alphas: Sequence[float], alpha: float, a: float = 1.0
) -> list[int]:
    """Published running bound: ceil(-c*a + sum(1{p_i<=alpha_i} - c*alpha_i))."""
    _check_stream(ps, alphas)
    params = OnlineSimpleParams(alpha=alpha, a=a)
    bounds = []
    running = -params.c * a
    for p, alpha_i in zip(ps, alphas):
        running += (1.0 if p <= alpha_i else 0.0) - params.c * alpha_i
        bounds.append(math.ceil(running))
    return bounds


def closed_online_simple(
    ps: Sequence[float],
    alphas: Sequence[float],
    alpha: float,
    a: float = 1.0,
    admissible: bool = False,
    method: str | None = None,
) -> BoundTrace:
    """Guard run on the indicator e-values, optionally rescaled to admissibility."""
    _check_stream(ps, alphas)
    params = OnlineSimpleParams(alpha=alpha, a=a)
    guard = SeqEGuard(alpha)
    for p, alpha_i in zip(ps, alphas):
        log_e = online_simple_evalue(p, alpha_i, params)
        if admissible:
            log_e -= math.log(online_simple_slack(alpha_i, params))
        guard.step(log_e, include=p <= alpha_i)
    if method is None:
        method = "admissible-os" if admissible else "closed-os"
    return guard.trace(method=method)


def admissible_online_simple(
    ps: Sequence[float], alphas: Sequence[float], alpha: float, a: float = 1.0
) -> BoundTrace:
    return closed_online_simple(ps, alphas, alpha, a, admissible=True)


def closed_online_simple_sum_form(
    ps: Sequence[float], alphas: Sequence[float], alpha: float, a: float = 1.0
) -> list[int]:
    """The same procedure written as a running centered-count sum.

    Kept as an independent route for equivalence checks against the guard.
    """
    _check_stream(ps, alphas)
    params = OnlineSimpleParams(alpha=alpha, a=a)
    d = 0
    bounds = []
    removed: set[int] = set()
    query: list[int] = []
    terms: list[float] = []
    levels: list[float] = []
    running = 0.0
    for t, (p, alpha_i) in enumerate(zip(ps, alphas), start=1):
        hit = p <= alpha_i
        term = (1.0 if hit else 0.0) - params.c * alpha_i
        terms.append(term)
        levels.append(alpha_i)
        running += term
        if hit:
            query.append(t)
        if running >= params.c * a:
            d += 1
            candidates = [i for i in query if i not in removed]
            drop = min(candidates, key=lambda i: (levels[i - 1], i))
            removed.add(drop)
            running -= terms[drop - 1]
        bounds.append(d)
    return bounds


def online_adaptive_baseline(
    ps: Sequence[float],
    alphas: Sequence[float],
    lambdas: Sequence[float],
    alpha: float,
    a: float = 1.0,
    B: float = 1.0,
) -> list[int]:
    """Published adaptive bound with the 1{p > lambda_i} discount, verbatim."""
    _check_stream(ps, alphas)
    params = OnlineAdaptiveParams(alpha=alpha, a=a, B=B)
    bounds = []
    running = -params.c * a
    for p, alpha_i, lam_i in zip(ps, alphas, lambdas):
        hit = 1.0 if p <= alpha_i else 0.0
        miss = 1.0 if p > lam_i else 0.0
        running += hit - params.c * (alpha_i / (1.0 - lam_i)) * miss
        bounds.append(math.ceil(running))
    return bounds


def online_adaptive_improved(
    ps: Sequence[float],
    alphas: Sequence[float],
    lambdas: Sequence[float],
    alpha: float,
    a: float = 1.0,
    B: float = 1.0,
    admissible: bool = False,
) -> BoundTrace:
    """Guard run on the three-valued adaptive e-values."""
    _check_stream(ps, alphas)
    params = OnlineAdaptiveParams(alpha=alpha, a=a, B=B)
    guard = SeqEGuard(alpha)
    for p, alpha_i, lam_i in zip(ps, alphas, lambdas):
        log_e = online_adaptive_evalue(p, alpha_i, lam_i, params)
        if admissible:
            log_e -= math.log(online_adaptive_slack(alpha_i, lam_i, params))
        guard.step(log_e, include=p <= alpha_i)
    return guard.trace(method="adaptive-improved")


def _union_grid_levels(alpha: float, a_max: int) -> list[tuple[int, float]]:
    """(a, alpha(a)) over the integer grid with weights 6/(a^2 pi^2)."""
    return [(a, alpha * 6.0 / (a * a * _PI2)) for a in range(1, a_max + 1)]


def u_online_simple(
    ps: Sequence[float], alphas: Sequence[float], alpha: float, a_max: int = DEFAULT_A_MAX
) -> list[int]:
    """Published union baseline: max over the budget grid of the per-a bound."""
    _check_stream(ps, alphas)
    grid = [
        (a, OnlineSimpleParams(alpha=level, a=float(a)))
        for a, level in _union_grid_levels(alpha, a_max)
    ]
    runnings = [-params.c * a for a, params in grid]
    bounds = []
    for p, alpha_i in zip(ps, alphas):
        for k, (a, params) in enumerate(grid):
            runnings[k] += (1.0 if p <= alpha_i else 0.0) - params.c * alpha_i
        bounds.append(max(math.ceil(r) for r in runnings))
    return bounds


def m_online_simple(
    ps: Sequence[float], alphas: Sequence[float], alpha: float, a_max: int = DEFAULT_A_MAX
) -> BoundTrace:
    """Mixture-of-products guard over the per-budget indicator e-values."""
    _check_stream(ps, alphas)
    grid = [
        OnlineSimpleParams(alpha=level, a=float(a))
        for a, level in _union_grid_levels(alpha, a_max)
    ]
    weights = [6.0 / (a * a * _PI2) for a in range(1, a_max + 1)]
    guard = MixtureGuard(alpha, weights)
    # The component vector only depends on the threshold and whether p <= it,
    # so cache the two possible vectors per distinct threshold.
    cache: dict[tuple[float, bool], list[float]] = {}
    for p, alpha_i in zip(ps, alphas):
        hit = p <= alpha_i
        key = (alpha_i, hit)
        vec = cache.get(key)
        if vec is None:
            probe = alpha_i if hit else 1.0
            vec = [online_simple_evalue(probe, alpha_i, params) for params in grid]
            cache[key] = vec
        guard.step(vec, include=hit, removal_key=alpha_i)
    return guard.trace(method="m-os")


def _freedman_grid(alpha: float, j_max: int) -> tuple[list[FreedmanParams], list[float]]:
    params = [FreedmanParams(alpha=alpha, a=2.0 ** (j / 2.0)) for j in range(j_max + 1)]
    weights = [6.0 / (max(j, 1) ** 2 * (_PI2 + 6.0)) for j in range(j_max + 1)]
    return params, weights


def u_online_freedman(
    ps: Sequence[float], alphas: Sequence[float], alpha: float, j_max: int = DEFAULT_J_MAX
) -> list[int]:
    """Published Freedman union baseline, gated on the variance budget.

    The per-budget bound 1 + floor(-kappa_a + sum(1{p<=alpha_i} - alpha_i))
    only carries its guarantee while B_t = sum alpha_i(1-alpha_i) <= a.
    """
    _check_stream(ps, alphas)
    params, _ = _freedman_grid(alpha, j_max)
    running = 0.0
    budget = 0.0
    bounds = []
    for p, alpha_i in zip(ps, alphas):
        running += (1.0 if p <= alpha_i else 0.0) - alpha_i
        budget += alpha_i * (1.0 - alpha_i)
        eligible = [
            1 + math.floor(-pr.kappa_a + running) for pr in params if budget <= pr.a
        ]
        bounds.append(max(eligible) if eligible else 0)
    return bounds


def m_online_freedman(
    ps: Sequence[float], alphas: Sequence[float], alpha: float, j_max: int = DEFAULT_J_MAX
) -> BoundTrace:
    """Mixture-of-products guard over the per-budget Freedman e-values."""
    _check_stream(ps, alphas)
    params, weights = _freedman_grid(alpha, j_max)
    guard = MixtureGuard(alpha, weights)
    cache: dict[tuple[float, bool], list[float]] = {}
    for p, alpha_i in zip(ps, alphas):
        hit = p <= alpha_i
        key = (alpha_i, hit)
        vec = cache.get(key)
        if vec is None:
            probe = alpha_i if hit else 1.0
            vec = [freedman_evalue(probe, alpha_i, pr) for pr in params]
            cache[key] = vec
        guard.step(vec, include=hit, removal_key=alpha_i)
    return guard.trace(method="m-freedman")
