"""Acceptance gate: one test per release criterion, each reporting a verdict."""

from __future__ import annotations

import math
import random
import time

import pytest
from scipy.integrate import quad

from eguard.evalues import (
    OnlineAdaptiveParams,
    OnlineSimpleParams,
    boost_factor_hedged_lognormal,
    boost_factor_lognormal,
    calibrate_lift,
    inverse_square_weights,
    online_adaptive_slack,
    online_simple_slack,
)
from eguard.guards import ArbEGuard, ExEGuard, SeqEGuard
from eguard.oracle import IntersectionFamily, closure_bound
from eguard.service import ProcedureSpec, SessionStore
from eguard.shortcuts import (
    admissible_online_simple,
    closed_online_simple,
    m_online_freedman,
    m_online_simple,
    online_adaptive_baseline,
    online_adaptive_improved,
    online_simple_baseline,
    u_online_freedman,
    u_online_simple,
)
from eguard.sim import SimConfig, run_grid

from conftest import random_instance, record_verdict


def _p_stream(rng: random.Random, n: int):
    ps = [
        rng.uniform(0.0, 0.05) if rng.random() < 0.3 else rng.random()
        for _ in range(n)
    ]
    alphas = [rng.choice([0.05, 0.1, 0.2]) for _ in range(n)]
    return ps, alphas


def test_01_product_guard_exactness():
    rng = random.Random(101)
    alpha = 0.1
    family = IntersectionFamily("product", alpha)
    start = time.monotonic()
    exact = True
    for _ in range(1000):
        logs, include = random_instance(rng, max_t=12)
        guard = SeqEGuard(alpha)
        for k, (le, inc) in enumerate(zip(logs, include), start=1):
            out = guard.step(le, inc)
            if out.d != closure_bound(family, logs[:k], guard.query_set):
                exact = False
    elapsed = time.monotonic() - start
    record_verdict(
        1,
        "product guard equals exhaustive bound on 1000 random instances "
        f"(t <= 12) at every step, {elapsed:.1f}s",
        exact and elapsed <= 60.0,
    )


def test_02_average_guard_exactness():
    rng = random.Random(102)
    alpha = 0.1
    family = IntersectionFamily("average", alpha)
    exact = True
    for _ in range(1000):
        logs, include = random_instance(rng, max_t=12)
        guard = ExEGuard(alpha)
        for k, (le, inc) in enumerate(zip(logs, include), start=1):
            out = guard.step(le, inc)
            if out.d != closure_bound(family, logs[:k], guard.query_set):
                exact = False
    record_verdict(
        2,
        "average guard equals exhaustive bound on 1000 random instances at every step",
        exact,
    )


def test_03_weighted_guard_conservative_and_full_path_exact():
    rng = random.Random(103)
    alpha = 0.1
    gamma = inverse_square_weights(50)
    family = IntersectionFamily("weighted", alpha, gamma)
    conservative = True
    for _ in range(200):
        logs, include = random_instance(rng, max_t=10)
        guard = ArbEGuard(alpha, gamma)
        for k, (le, inc) in enumerate(zip(logs, include), start=1):
            out = guard.step(le, inc)
            if out.d > closure_bound(family, logs[:k], guard.query_set):
                conservative = False
    exact = True
    for _ in range(500):
        logs, _ = random_instance(rng, max_t=10)
        guard = ArbEGuard(alpha, gamma)
        for k, le in enumerate(logs, start=1):
            out = guard.step(le, include=True)
            if out.d != closure_bound(family, logs[:k], guard.query_set):
                exact = False
    record_verdict(
        3,
        "weighted guard never exceeds the exhaustive bound and matches it on "
        "500 full-path instances",
        conservative and exact,
    )


def test_04_worked_example():
    logs = [math.log(e) for e in [5.0, 4.0, 0.8, 0.5, 14.0]]
    guard = SeqEGuard(0.05)
    ds = [guard.step(le, include=True).d for le in logs]
    what_if = closure_bound(IntersectionFamily("product", 0.05), logs, [1, 2, 5])
    record_verdict(
        4,
        "stream [5,4,0.8,0.5,14] at level 0.05 gives d=[0,1,1,1,2] and "
        "subset {1,2,5} bound 2",
        ds == [0, 1, 1, 1, 2] and what_if == 2,
    )


def test_05_golden_constants():
    checks = [
        (boost_factor_lognormal(3.0, 20.0), 3.494, 1e-3),
        (boost_factor_lognormal(3.0, 5.0), 11.826, 1e-3),
        (boost_factor_lognormal(3.0, 100.0), 1.774, 1e-3),
        (boost_factor_hedged_lognormal(3.0, 0.5, 20.0), 1.354, 1e-3),
        (online_simple_slack(0.1, OnlineSimpleParams(0.1, 1.0)), 0.977, 5e-4),
        (online_simple_slack(0.1, OnlineSimpleParams(0.1, 3.0)), 0.997, 5e-4),
        (
            online_adaptive_slack(0.1, 0.5, OnlineAdaptiveParams(0.1, 1.0, 0.4)),
            0.966,
            5e-4,
        ),
    ]
    ok = all(abs(got - want) <= tol for got, want, tol in checks)
    record_verdict(
        5,
        "boosting factors and slack constants match their published values "
        "within stated tolerances",
        ok,
    )


def test_06_dominance_chains():
    rng = random.Random(106)
    alpha, n = 0.1, 200
    violations = 0
    for _ in range(500):
        ps, alphas = _p_stream(rng, n)
        lambdas = [0.5] * n
        B = max(a / 0.5 for a in alphas)

        base = online_simple_baseline(ps, alphas, alpha, a=3.0)
        closed = closed_online_simple(ps, alphas, alpha, a=3.0).bounds
        adm = admissible_online_simple(ps, alphas, alpha, a=3.0).bounds
        ada_base = online_adaptive_baseline(ps, alphas, lambdas, alpha, 3.0, B)
        ada_imp = online_adaptive_improved(ps, alphas, lambdas, alpha, 3.0, B).bounds
        u_os = u_online_simple(ps, alphas, alpha)
        m_os = m_online_simple(ps, alphas, alpha).bounds
        u_fr = u_online_freedman(ps, alphas, alpha)
        m_fr = m_online_freedman(ps, alphas, alpha).bounds

        for hi, lo in [
            (closed, base),
            (adm, closed),
            (ada_imp, ada_base),
            (m_os, u_os),
            (m_fr, u_fr),
        ]:
            violations += sum(1 for x, y in zip(hi, lo) if x < y)
    record_verdict(
        6,
        "five improvement chains dominate their baselines pointwise on 500 "
        "streams of length 200 with zero violations",
        violations == 0,
    )


def test_07_simultaneous_coverage():
    cfg = SimConfig(
        n=200,
        trials=2000,
        alpha=0.1,
        mu_a=(2.0, 4.0),
        pi_a=(0.1, 0.5),
        methods=("admissible-os", "boosted-gro", "calibrated", "m-os"),
        seed=107,
    )
    limit = 0.1 + 3.0 * math.sqrt(0.09 / 2000)
    start = time.monotonic()
    grid = run_grid(cfg)
    elapsed = time.monotonic() - start
    worst = max(1.0 - cov for cov in grid.coverage.values())
    record_verdict(
        7,
        f"worst violation fraction {worst:.4f} <= {limit:.3f} over a 2x2 grid, "
        f"2000 trials, 4 methods, {elapsed:.0f}s",
        worst <= limit and elapsed <= 300.0,
    )


def test_08_boosting_ordering():
    cfg = SimConfig(
        n=1000,
        trials=200,
        alpha=0.1,
        mu_a=(3.0,),
        pi_a=(0.3,),
        methods=("raw-gro", "hedged-gro", "boosted-gro"),
        seed=108,
    )
    grid = run_grid(cfg)
    raw = grid.final_mean_tdp("raw-gro", 3.0, 0.3)
    hedged = grid.final_mean_tdp("hedged-gro", 3.0, 0.3)
    boosted = grid.final_mean_tdp("boosted-gro", 3.0, 0.3)
    record_verdict(
        8,
        f"mean final TDP bound boosted {boosted:.3f} >= hedged {hedged:.3f} >= "
        f"raw {raw:.3f} with boosted-raw gap > 0.05",
        boosted >= hedged >= raw and boosted - raw > 0.05,
    )


def test_09_regime_switch():
    cfg = SimConfig(
        n=200,
        trials=200,
        alpha=0.1,
        mu_a=(2.0, 4.0),
        pi_a=(0.1, 0.5),
        methods=("admissible-os", "boosted-gro"),
        seed=109,
    )
    grid = run_grid(cfg)
    sparse_strong = grid.final_mean_tdp("boosted-gro", 4.0, 0.1) > grid.final_mean_tdp(
        "admissible-os", 4.0, 0.1
    )
    dense_weak = grid.final_mean_tdp("admissible-os", 2.0, 0.5) > grid.final_mean_tdp(
        "boosted-gro", 2.0, 0.5
    )
    record_verdict(
        9,
        "likelihood-ratio pipeline wins at (mu=4, pi=0.1); threshold pipeline "
        "wins at (mu=2, pi=0.5)",
        sparse_strong and dense_weak,
    )


def test_10_calibrator_unit_integral():
    ok = True
    for x in [0.05, 0.1, 0.5, 1.0]:
        value, _ = quad(lambda p: math.exp(calibrate_lift(p, x)), 0.0, 1.0, limit=200)
        if abs(value - 1.0) > 1e-6:
            ok = False
    record_verdict(
        10,
        "calibrator integrates to 1 within 1e-6 for x in {0.05, 0.1, 0.5, 1}",
        ok,
    )


def test_11_mean_guard_dominates_weighted_guard():
    rng = random.Random(111)
    alpha, n = 0.1, 60
    gamma = inverse_square_weights(n)
    violations = 0
    for _ in range(500):
        logs = [rng.uniform(-3.0, 3.0) for _ in range(n)]
        exe = ExEGuard(alpha)
        arb = ArbEGuard(alpha, gamma)
        for le in logs:
            d_exe = exe.step(le, include=True).d
            d_arb = arb.step(le, include=True).d
            if d_exe < d_arb:
                violations += 1
    record_verdict(
        11,
        "mean guard dominates the inverse-square weighted guard pointwise on "
        "500 full-path streams with zero violations",
        violations == 0,
    )


def test_12_session_replay(tmp_path):
    rng = random.Random(112)
    ok = True
    for k in range(50):
        data_dir = tmp_path / f"s{k}"
        store = SessionStore(data_dir)
        method = rng.choice(["seq-e-guard", "exe-guard", "arbe-guard"])
        spec = ProcedureSpec(
            method=method, alpha=rng.choice([0.05, 0.1, 0.2]), gamma_n=50
        )
        session = store.create(spec)
        t = rng.randint(1, 15)
        for _ in range(t):
            session.submit_evidence({"e": math.exp(rng.uniform(-2.0, 2.0))})
            session.decide(rng.random() < 0.7)
        before = session.guard.state_hash()
        subset = [i for i in range(1, t + 1) if rng.random() < 0.5]
        session.what_if(subset)
        if session.guard.state_hash() != before:
            ok = False
        recovered = SessionStore(data_dir).get(session.id)
        if recovered.guard.state_hash() != before:
            ok = False
        if recovered.guard.d != session.guard.d:
            ok = False
    record_verdict(
        12,
        "50 randomized sessions survive restart with identical state hashes; "
        "what-if queries leave state unchanged",
        ok,
    )
