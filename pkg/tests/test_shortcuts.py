"""Tests for the p-value stream procedures and their baselines."""

from __future__ import annotations

import math
import random

import pytest

from eguard.evalues import FreedmanParams, OnlineSimpleParams, freedman_evalue
from eguard.guards import MixtureGuard
from eguard.shortcuts import (
    admissible_online_simple,
    closed_online_simple,
    closed_online_simple_sum_form,
    m_online_freedman,
    m_online_simple,
    online_adaptive_baseline,
    online_adaptive_improved,
    online_simple_baseline,
    u_online_freedman,
    u_online_simple,
)


def random_p_stream(rng: random.Random, n: int, alt_frac: float = 0.3):
    """A stream mixing uniforms with small p-values, plus varying thresholds."""
    ps = [
        rng.uniform(0.0, 0.05) if rng.random() < alt_frac else rng.random()
        for _ in range(n)
    ]
    alphas = [rng.choice([0.05, 0.1, 0.2]) for _ in range(n)]
    return ps, alphas


class TestBaselines:
    def test_online_simple_baseline_formula(self):
        params = OnlineSimpleParams(alpha=0.1, a=1.0)
        ps = [0.01, 0.5, 0.02]
        alphas = [0.1, 0.1, 0.1]
        running = -params.c
        expected = []
        for p, ai in zip(ps, alphas):
            running += (1.0 if p <= ai else 0.0) - params.c * ai
            expected.append(math.ceil(running))
        assert online_simple_baseline(ps, alphas, 0.1) == expected

    def test_baseline_can_be_negative(self):
        bounds = online_simple_baseline([0.9] * 3, [0.1] * 3, 0.1, a=3.0)
        assert all(b < 0 for b in bounds)

    def test_mismatched_lengths(self):
        with pytest.raises(ValueError, match="align"):
            online_simple_baseline([0.1], [0.1, 0.2], 0.1)

    def test_adaptive_baseline_discounts_only_clear_nulls(self):
        # p in (alpha_i, lambda_i] contributes nothing to the running sum.
        b1 = online_adaptive_baseline([0.3], [0.1], [0.5], 0.1, B=0.2)
        b2 = online_adaptive_baseline([0.9], [0.1], [0.5], 0.1, B=0.2)
        assert b1[0] >= b2[0]


class TestClosedOnlineSimple:
    def test_all_hits_bound_grows(self):
        trace = closed_online_simple([0.01] * 40, [0.1] * 40, 0.1)
        assert trace.bounds[-1] > 0
        assert trace.bounds == sorted(trace.bounds)

    def test_sum_form_matches_guard(self):
        rng = random.Random(5)
        for _ in range(40):
            ps, alphas = random_p_stream(rng, rng.randint(1, 120))
            for a in [1.0, 3.0]:
                trace = closed_online_simple(ps, alphas, 0.1, a=a)
                assert trace.bounds == closed_online_simple_sum_form(ps, alphas, 0.1, a=a)

    def test_dominates_baseline(self):
        rng = random.Random(6)
        for _ in range(40):
            ps, alphas = random_p_stream(rng, 100)
            closed = closed_online_simple(ps, alphas, 0.1, a=3.0).bounds
            base = online_simple_baseline(ps, alphas, 0.1, a=3.0)
            assert all(c >= b for c, b in zip(closed, base))

    def test_admissible_dominates_closed(self):
        rng = random.Random(7)
        for _ in range(40):
            ps, alphas = random_p_stream(rng, 100)
            adm = admissible_online_simple(ps, alphas, 0.1, a=3.0).bounds
            closed = closed_online_simple(ps, alphas, 0.1, a=3.0).bounds
            assert all(x >= y for x, y in zip(adm, closed))

    def test_method_tags(self):
        assert closed_online_simple([0.01], [0.1], 0.1).method == "closed-os"
        assert admissible_online_simple([0.01], [0.1], 0.1).method == "admissible-os"


class TestAdaptiveImproved:
    def test_dominates_baseline(self):
        rng = random.Random(8)
        for _ in range(30):
            ps, alphas = random_p_stream(rng, 100)
            lambdas = [0.5] * len(ps)
            B = max(a / 0.5 for a in alphas)
            improved = online_adaptive_improved(ps, alphas, lambdas, 0.1, a=3.0, B=B).bounds
            base = online_adaptive_baseline(ps, alphas, lambdas, 0.1, a=3.0, B=B)
            assert all(x >= y for x, y in zip(improved, base))


class TestMixtureShortcuts:
    def test_m_dominates_u_online_simple(self):
        rng = random.Random(9)
        for _ in range(10):
            ps, alphas = random_p_stream(rng, 120)
            m = m_online_simple(ps, alphas, 0.1, a_max=30).bounds
            u = u_online_simple(ps, alphas, 0.1, a_max=30)
            assert all(x >= max(y, 0) for x, y in zip(m, u))

    def test_m_dominates_u_freedman(self):
        rng = random.Random(10)
        for _ in range(10):
            ps, alphas = random_p_stream(rng, 120)
            m = m_online_freedman(ps, alphas, 0.1, j_max=20).bounds
            u = u_online_freedman(ps, alphas, 0.1, j_max=20)
            assert all(x >= max(y, 0) for x, y in zip(m, u))

    def test_u_freedman_variance_gate(self):
        # With thresholds 0.5 the variance budget grows by 0.25 per step; once
        # it exceeds the largest grid budget every per-budget bound is stale
        # and the baseline reports 0.
        n = 30
        bounds = u_online_freedman([0.01] * n, [0.5] * n, 0.1, j_max=2)
        budget_cap = 2.0 ** (2 / 2.0)
        stale_from = next(i for i in range(n) if 0.25 * (i + 1) > budget_cap)
        assert all(b == 0 for b in bounds[stale_from:])

    def test_single_component_mixture_matches_per_level_guard(self):
        # One Freedman budget with unit weight run at its spent level.
        rng = random.Random(11)
        ps, alphas = random_p_stream(rng, 80)
        pr = FreedmanParams(alpha=0.1, a=4.0)
        guard = MixtureGuard(pr.level_a, [1.0])
        for p, ai in zip(ps, alphas):
            guard.step([freedman_evalue(p, ai, pr)], include=p <= ai, removal_key=ai)
        assert all(d >= 0 for d in guard.trace().bounds)

    def test_zero_threshold_steps_are_inert(self):
        # alpha_i = 0 never rejects and contributes unit e-values throughout.
        trace = m_online_simple([0.5, 0.5, 0.5], [0.0, 0.0, 0.0], 0.1, a_max=10)
        assert trace.bounds == [0, 0, 0]
        assert all(r.s_size == 0 for r in trace.rows)


class TestBoostedClosedOnlineSimpleInteraction:
    def test_indicator_evalues_never_exceed_cutoff(self):
        # The indicator e-value is bounded by e^theta_c, which never exceeds
        # the boosting cutoff 1/alpha at the start: boosting is a no-op for
        # these streams and closed-os needs no truncation bookkeeping.
        params = OnlineSimpleParams(alpha=0.1, a=1.0)
        e_hit = math.exp(params.theta_c)
        assert e_hit <= 1.0 / params.alpha
