"""Monte-Carlo harness for the Gaussian testing experiments.

Each trial draws n hypotheses: with probability pi_A the observation comes
from N(mu_A, 1) (a false null), otherwise from N(0, 1).  One-sided p-values
are Phi(-X) and the query path is S_t = {i <= t : p_i <= alpha} for every
method, so the per-trial truth |S_t ∩ {false nulls}| is shared.  Methods
produce per-step lower bounds d_t; the harness aggregates mean TDP-bound
curves and the frequency of any-time violations d_t > |S_t ∩ {false nulls}|.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .evalues import (
    HedgeSchedule,
    boost_factor_hedged_lognormal,
    boost_factor_lognormal,
    boosting_cutoff,
    calibrate_lift,
    gro_gaussian_evalue,
    hedge,
    tau_hat_update,
)
from .guards import SeqEGuard
from .numerics import std_normal_cdf
from .shortcuts import (
    DEFAULT_A_MAX,
    DEFAULT_J_MAX,
    closed_online_simple,
    m_online_freedman,
    m_online_simple,
    online_adaptive_baseline,
    online_adaptive_improved,
    online_simple_baseline,
    u_online_freedman,
    u_online_simple,
)

__all__ = ["SimConfig", "TrialResult", "METHODS", "run_trial", "run_grid", "tau_hat_trace"]

METHODS = (
    "online-simple",
    "closed-os",
    "admissible-os",
    "online-adaptive",
    "adaptive-improved",
    "u-os",
    "m-os",
    "u-freedman",
    "m-freedman",
    "raw-gro",
    "hedged-gro",
    "boosted-gro",
    "calibrated",
)

# Methods whose bounds carry the simultaneous guarantee (baselines too, but
# per-a rather than globally for the union baselines; all are checked).
CALIBRATOR_X = 0.1


@dataclass(frozen=True)
class SimConfig:
    """One experiment grid: hypotheses per trial, effect sizes, proportions."""

    n: int = 200
    trials: int = 500
    alpha: float = 0.1
    mu_a: tuple[float, ...] = (3.0,)
    pi_a: tuple[float, ...] = (0.3,)
    methods: tuple[str, ...] = ("admissible-os", "boosted-gro", "calibrated")
    seed: int = 1
    a: float = 3.0
    lambda_adaptive: float = 0.5
    a_max: int = DEFAULT_A_MAX
    j_max: int = DEFAULT_J_MAX
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.n < 1 or self.trials < 1:
            raise ValueError("n and trials must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        for pi in self.pi_a:
            if not 0.0 < pi < 1.0:
                raise ValueError(f"pi_A must lie in (0, 1), got {pi}")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")


@dataclass(frozen=True)
class TrialResult:
    """Per-method bound curves plus the shared query-set truth for one trial."""

    s_size: np.ndarray
    true_in_s: np.ndarray
    bounds: dict[str, np.ndarray]
    violations: dict[str, bool] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "violations",
            {
                name: bool(np.any(d > self.true_in_s))
                for name, d in self.bounds.items()
            },
        )


def _trial_rng(seed: int, cell: int, trial: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(cell, trial))
    return np.random.Generator(np.random.PCG64(ss))


def _run_gro_family(
    x: np.ndarray,
    hits: np.ndarray,
    mu_a: float,
    alpha: float,
    variant: str,
) -> np.ndarray:
    """SeqE-Guard on (possibly hedged and boosted) likelihood-ratio e-values."""
    guard = SeqEGuard(alpha)
    schedule = HedgeSchedule(mode="adaptive")
    bounds = np.empty(len(x), dtype=np.int64)
    for i in range(len(x)):
        raw = gro_gaussian_evalue(float(x[i]), 0.0, mu_a)
        if variant == "raw":
            log_e = raw
        else:
            lam = schedule.next_lambda()
            log_e = hedge(raw, lam)
            if variant == "boosted":
                log_m = boosting_cutoff(guard.active_logs, guard.log_statistic, alpha)
                if log_m < 700.0:
                    m = math.exp(log_m)
                    b = boost_factor_hedged_lognormal(mu_a, lam, m)
                    log_e = min(math.log(b) + log_e, log_m)
            schedule = tau_hat_update(schedule, raw)
        outcome = guard.step(log_e, include=bool(hits[i]))
        bounds[i] = outcome.d
    return bounds


def _run_calibrated(
    p: np.ndarray, hits: np.ndarray, alpha: float, x_cal: float = CALIBRATOR_X
) -> np.ndarray:
    """SeqE-Guard on boosted calibrator e-values (log-normal under the null)."""
    guard = SeqEGuard(alpha)
    bounds = np.empty(len(p), dtype=np.int64)
    for i in range(len(p)):
        log_e = calibrate_lift(float(p[i]), x_cal)
        log_m = boosting_cutoff(guard.active_logs, guard.log_statistic, alpha)
        if log_m < 700.0:
            m = math.exp(log_m)
            b = boost_factor_lognormal(x_cal, m)
            log_e = min(math.log(b) + log_e, log_m)
        outcome = guard.step(log_e, include=bool(hits[i]))
        bounds[i] = outcome.d
    return bounds


def run_trial(cfg: SimConfig, mu_a: float, pi_a: float, cell: int, trial: int) -> TrialResult:
    rng = _trial_rng(cfg.seed, cell, trial)
    is_alt = rng.random(cfg.n) < pi_a
    x = rng.standard_normal(cfg.n) + mu_a * is_alt
    p = np.array([std_normal_cdf(-v) for v in x])
    hits = p <= cfg.alpha
    s_size = np.cumsum(hits)
    true_in_s = np.cumsum(hits & is_alt)

    ps = [float(v) for v in p]
    alphas = [cfg.alpha] * cfg.n
    lambdas = [cfg.lambda_adaptive] * cfg.n
    adaptive_b = cfg.alpha / (1.0 - cfg.lambda_adaptive)

    bounds: dict[str, np.ndarray] = {}
    for name in cfg.methods:
        if name == "online-simple":
            d = online_simple_baseline(ps, alphas, cfg.alpha, cfg.a)
        elif name == "closed-os":
            d = closed_online_simple(ps, alphas, cfg.alpha, cfg.a).bounds
        elif name == "admissible-os":
            d = closed_online_simple(ps, alphas, cfg.alpha, cfg.a, admissible=True).bounds
        elif name == "online-adaptive":
            d = online_adaptive_baseline(ps, alphas, lambdas, cfg.alpha, cfg.a, adaptive_b)
        elif name == "adaptive-improved":
            d = online_adaptive_improved(
                ps, alphas, lambdas, cfg.alpha, cfg.a, adaptive_b
            ).bounds
        elif name == "u-os":
            d = u_online_simple(ps, alphas, cfg.alpha, cfg.a_max)
        elif name == "m-os":
            d = m_online_simple(ps, alphas, cfg.alpha, cfg.a_max).bounds
        elif name == "u-freedman":
            d = u_online_freedman(ps, alphas, cfg.alpha, cfg.j_max)
        elif name == "m-freedman":
            d = m_online_freedman(ps, alphas, cfg.alpha, cfg.j_max).bounds
        elif name in ("raw-gro", "hedged-gro", "boosted-gro"):
            d = _run_gro_family(x, hits, mu_a, cfg.alpha, name.split("-")[0])
        elif name == "calibrated":
            d = _run_calibrated(p, hits, cfg.alpha)
        else:  # pragma: no cover - rejected in SimConfig
            raise ValueError(f"unknown method {name}")
        bounds[name] = np.asarray(d, dtype=np.int64)
    return TrialResult(s_size=s_size, true_in_s=true_in_s, bounds=bounds)


@dataclass(frozen=True)
class GridResult:
    """Aggregated curves: rows of (method, mu_A, pi_A, t, mean bound, truth)."""

    rows: tuple[tuple[str, float, float, int, float, float, float], ...]
    coverage: dict[tuple[str, float, float], float]

    def to_csv(self) -> str:
        lines = ["method,mu_A,pi_A,t,mean_tdp_bound,true_tdp,coverage"]
        for method, mu, pi, t, bound, truth, cov in self.rows:
            lines.append(
                f"{method},{mu!r},{pi!r},{t},{bound!r},{truth!r},{cov!r}"
            )
        return "\n".join(lines) + "\n"

    def final_mean_tdp(self, method: str, mu: float, pi: float) -> float:
        matches = [r for r in self.rows if r[0] == method and r[1] == mu and r[2] == pi]
        return matches[-1][4]


def _cell_trials(args: tuple[SimConfig, float, float, int, int, int]) -> list[TrialResult]:
    cfg, mu, pi, cell, lo, hi = args
    return [run_trial(cfg, mu, pi, cell, trial) for trial in range(lo, hi)]


def run_grid(cfg: SimConfig) -> GridResult:
    """Run every (mu_A, pi_A) cell and aggregate deterministic curves."""
    rows: list[tuple[str, float, float, int, float, float, float]] = []
    coverage: dict[tuple[str, float, float], float] = {}
    cell = 0
    for mu in cfg.mu_a:
        for pi in cfg.pi_a:
            results = _run_cell(cfg, mu, pi, cell)
            tdp = {
                name: np.zeros(cfg.n) for name in cfg.methods
            }
            truth_curve = np.zeros(cfg.n)
            ok_count = {name: 0 for name in cfg.methods}
            for res in results:
                safe = np.where(res.s_size > 0, res.s_size, 1)
                truth_curve += np.where(
                    res.s_size > 0, res.true_in_s / safe, 0.0
                )
                for name in cfg.methods:
                    d = np.maximum(res.bounds[name], 0)
                    tdp[name] += np.where(res.s_size > 0, d / safe, 0.0)
                    ok_count[name] += 0 if res.violations[name] else 1
            truth_curve /= len(results)
            for name in cfg.methods:
                curve = tdp[name] / len(results)
                cov = ok_count[name] / len(results)
                coverage[(name, mu, pi)] = cov
                for t in range(cfg.n):
                    rows.append(
                        (name, mu, pi, t + 1, float(curve[t]), float(truth_curve[t]), cov)
                    )
            cell += 1
    return GridResult(rows=tuple(rows), coverage=coverage)


def _run_cell(cfg: SimConfig, mu: float, pi: float, cell: int) -> list[TrialResult]:
    if cfg.jobs <= 1:
        return [run_trial(cfg, mu, pi, cell, trial) for trial in range(cfg.trials)]
    chunk = max(1, math.ceil(cfg.trials / cfg.jobs))
    tasks = [
        (cfg, mu, pi, cell, lo, min(lo + chunk, cfg.trials))
        for lo in range(0, cfg.trials, chunk)
    ]
    with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        parts = list(pool.map(_cell_trials, tasks))
    return [res for part in parts for res in part]


def tau_hat_trace(cfg: SimConfig, mu_a: float, pi_a: float) -> np.ndarray:
    """Mean hedging weight used at each step, over all trials."""
    total = np.zeros(cfg.n)
    for trial in range(cfg.trials):
        rng = _trial_rng(cfg.seed, 0, trial)
        is_alt = rng.random(cfg.n) < pi_a
        x = rng.standard_normal(cfg.n) + mu_a * is_alt
        schedule = HedgeSchedule(mode="adaptive")
        for i in range(cfg.n):
            total[i] += schedule.next_lambda()
            raw = gro_gaussian_evalue(float(x[i]), 0.0, mu_a)
            schedule = tau_hat_update(schedule, raw)
    return total / cfg.trials
