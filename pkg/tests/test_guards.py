"""Tests for the streaming guards."""

from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eguard.evalues import inverse_square_weights
from eguard.guards import ArbEGuard, ExEGuard, MixtureGuard, SeqEGuard
from eguard.numerics import LOG_INF, LOG_ZERO
from eguard.oracle import IntersectionFamily, closure_bound

from conftest import random_instance


def run_stream(guard, logs, include):
    return [guard.step(le, inc) for le, inc in zip(logs, include)]


class TestSeqEGuardWorkedExample:
    EVALUES = [5.0, 4.0, 0.8, 0.5, 14.0]

    def test_bound_sequence(self):
        guard = SeqEGuard(0.05)
        outcomes = run_stream(guard, [math.log(e) for e in self.EVALUES], [True] * 5)
        assert [o.d for o in outcomes] == [0, 1, 1, 1, 2]

    def test_removals(self):
        guard = SeqEGuard(0.05)
        outcomes = run_stream(guard, [math.log(e) for e in self.EVALUES], [True] * 5)
        assert outcomes[1].removed_index == 1
        assert outcomes[4].removed_index == 5
        assert guard.excluded == [1, 5]

    def test_statistic_track(self):
        guard = SeqEGuard(0.05)
        outcomes = run_stream(guard, [math.log(e) for e in self.EVALUES], [True] * 5)
        # Products over the surviving indices: 5, 20, (after drop of 1) 4*0.8,
        # then *0.5, then *14 crosses again and 5 is dropped.
        assert math.exp(outcomes[0].log_statistic) == pytest.approx(5.0)
        assert math.exp(outcomes[1].log_statistic) == pytest.approx(20.0)
        assert math.exp(outcomes[2].log_statistic) == pytest.approx(3.2)
        assert math.exp(outcomes[3].log_statistic) == pytest.approx(1.6)
        assert math.exp(outcomes[4].log_statistic) == pytest.approx(22.4)


class TestSeqEGuardBehaviour:
    def test_rejects_bad_alpha(self):
        with pytest.raises(ValueError, match="alpha"):
            SeqEGuard(1.0)

    def test_small_nonincluded_retained(self):
        guard = SeqEGuard(0.1)
        guard.step(math.log(0.5), include=False)
        assert guard.discard_set == [1]
        guard.step(math.log(2.0), include=False)
        assert guard.discard_set == [1]

    def test_no_crossing_on_excluded_step(self):
        # Crossing is only acted on when the new index joins the query set.
        guard = SeqEGuard(0.1)
        guard.step(math.log(5.0), include=True)
        out = guard.step(math.log(0.9), include=False)
        # Product is 4.5 < 10: no crossing either way here, but push it over
        # with another excluded small value after a large included one.
        guard2 = SeqEGuard(0.5)
        guard2.step(math.log(1.9), include=True)
        out2 = guard2.step(math.log(0.99), include=False)
        assert out2.d == 0 and not out2.bound_incremented
        out3 = guard2.step(math.log(1.1), include=True)
        assert out3.d == 1
        assert out.d == guard.d

    def test_infinite_evalue(self):
        guard = SeqEGuard(0.1)
        out = guard.step(LOG_INF, include=True)
        assert out.d == 1 and out.removed_index == 1
        assert guard.log_statistic == 0.0

    def test_zero_evalue_pins_product(self):
        guard = SeqEGuard(0.1)
        guard.step(LOG_ZERO, include=True)
        out = guard.step(LOG_INF, include=True)
        # The dead factor keeps the product at zero even against infinity.
        assert out.d == 0
        assert guard.log_statistic == LOG_ZERO

    def test_tie_breaks_to_smallest_index(self):
        guard = SeqEGuard(0.25)
        guard.step(math.log(2.0), include=True)
        out = guard.step(math.log(2.0), include=True)
        assert out.removed_index == 1

    def test_state_hash_replay_determinism(self):
        rng = random.Random(42)
        logs, include = random_instance(rng, max_t=12)
        g1, g2 = SeqEGuard(0.1), SeqEGuard(0.1)
        run_stream(g1, logs, include)
        run_stream(g2, logs, include)
        assert g1.state_hash() == g2.state_hash()
        g3 = SeqEGuard(0.1)
        run_stream(g3, logs[:-1], include[:-1])
        if logs:
            assert g3.state_hash() != g1.state_hash() or len(logs) == 0

    def test_matches_closure_oracle_sample(self):
        rng = random.Random(7)
        family_alpha = 0.1
        for _ in range(50):
            logs, include = random_instance(rng, max_t=10)
            guard = SeqEGuard(family_alpha)
            family = IntersectionFamily(kind="product", alpha=family_alpha)
            for k, (le, inc) in enumerate(zip(logs, include), start=1):
                out = guard.step(le, inc)
                oracle_d = closure_bound(family, logs[:k], guard.query_set)
                assert out.d == oracle_d


class TestExEGuard:
    def test_mean_statistic(self):
        guard = ExEGuard(0.1)
        guard.step(math.log(4.0), include=True)
        out = guard.step(math.log(2.0), include=True)
        assert math.exp(out.log_statistic) == pytest.approx(3.0)

    def test_retains_below_inverse_alpha(self):
        guard = ExEGuard(0.1)
        guard.step(math.log(5.0), include=False)
        assert guard.discard_set == [1]
        guard.step(math.log(20.0), include=False)
        assert guard.discard_set == [1]

    def test_crossing_and_removal(self):
        guard = ExEGuard(0.5)
        out1 = guard.step(math.log(3.0), include=True)
        assert out1.d == 1 and out1.removed_index == 1
        # After removal the mean is over an empty set.
        assert guard.log_statistic == LOG_ZERO

    def test_infinite_evalue(self):
        guard = ExEGuard(0.1)
        out = guard.step(LOG_INF, include=True)
        assert out.d == 1 and out.log_statistic == LOG_INF

    def test_matches_closure_oracle_sample(self):
        rng = random.Random(13)
        for _ in range(50):
            logs, include = random_instance(rng, max_t=10)
            guard = ExEGuard(0.2)
            family = IntersectionFamily(kind="average", alpha=0.2)
            for k, (le, inc) in enumerate(zip(logs, include), start=1):
                out = guard.step(le, inc)
                assert out.d == closure_bound(family, logs[:k], guard.query_set)


class TestArbEGuard:
    def gamma(self, n=50):
        return inverse_square_weights(n)

    def test_weighted_statistic(self):
        guard = ArbEGuard(0.1, self.gamma())
        guard.step(math.log(2.0), include=True)
        out = guard.step(math.log(3.0), include=True)
        g = self.gamma()
        assert math.exp(out.log_statistic) == pytest.approx(2.0 * g[1] + 3.0 * g[2])

    def test_excluded_index_shifts_ranks(self):
        guard = ArbEGuard(0.1, self.gamma())
        guard.step(math.log(2.0), include=False)
        out = guard.step(math.log(3.0), include=True)
        g = self.gamma()
        # The non-queried first index occupies rank 1 but contributes nothing.
        assert math.exp(out.log_statistic) == pytest.approx(3.0 * g[2])

    def test_removal_minimizes_residual(self):
        g = self.gamma()
        alpha = 1.0 / (20.0 * g[1])  # first big value crosses on its own
        guard = ArbEGuard(alpha, g)
        out = guard.step(math.log(25.0), include=True)
        assert out.d == 1 and out.removed_index == 1

    def test_conservative_vs_oracle(self):
        rng = random.Random(29)
        g = self.gamma()
        family = IntersectionFamily(kind="weighted", alpha=0.1, gamma=g)
        for _ in range(50):
            logs, include = random_instance(rng, max_t=9)
            guard = ArbEGuard(0.1, g)
            for k, (le, inc) in enumerate(zip(logs, include), start=1):
                out = guard.step(le, inc)
                assert out.d <= closure_bound(family, logs[:k], guard.query_set)

    def test_exact_on_full_path(self):
        rng = random.Random(31)
        g = self.gamma()
        family = IntersectionFamily(kind="weighted", alpha=0.1, gamma=g)
        for _ in range(50):
            logs, _ = random_instance(rng, max_t=9)
            guard = ArbEGuard(0.1, g)
            for k, le in enumerate(logs, start=1):
                out = guard.step(le, include=True)
                assert out.d == closure_bound(family, logs[:k], guard.query_set)


class TestMixtureGuard:
    def test_rejects_bad_weights(self):
        with pytest.raises(ValueError, match="at most 1"):
            MixtureGuard(0.1, [0.8, 0.8])
        with pytest.raises(ValueError, match="positive"):
            MixtureGuard(0.1, [0.5, 0.0])
        with pytest.raises(ValueError, match="component"):
            MixtureGuard(0.1, [])

    def test_rejects_wrong_arity(self):
        guard = MixtureGuard(0.1, [0.5, 0.5])
        with pytest.raises(ValueError, match="component"):
            guard.step([0.0], include=True, removal_key=0.1)

    def test_single_component_matches_product_guard(self):
        # With one unit-weight component and all steps included with e >= 1,
        # the mixture statistic is the plain product and crossings coincide.
        rng = random.Random(3)
        for _ in range(30):
            t = rng.randint(1, 12)
            logs = [rng.uniform(0.0, 1.2) for _ in range(t)]
            seq = SeqEGuard(0.2)
            mix = MixtureGuard(0.2, [1.0])
            for k, le in enumerate(logs):
                o1 = seq.step(le, include=True)
                # Removal key mirrors "largest e-value first": key = -log e.
                o2 = mix.step([le], include=True, removal_key=-le)
                assert o1.d == o2.d
                assert o1.removed_index == o2.removed_index

    def test_mixture_statistic_is_weighted_sum(self):
        guard = MixtureGuard(0.1, [0.25, 0.75])
        out = guard.step([math.log(2.0), math.log(4.0)], include=True, removal_key=1.0)
        assert math.exp(out.log_statistic) == pytest.approx(0.25 * 2.0 + 0.75 * 4.0)

    def test_crossing_checked_on_excluded_steps(self):
        guard = MixtureGuard(0.5, [1.0])
        guard.step([math.log(1.8)], include=True, removal_key=0.2)
        out = guard.step([math.log(1.5)], include=False, removal_key=0.2)
        # Statistic 2.7 >= 2 crosses at a non-included step; the queried
        # index is removed and the bound increments.
        assert out.d == 1 and out.removed_index == 1

    def test_crossing_without_candidates_is_noop(self):
        guard = MixtureGuard(0.5, [1.0])
        out = guard.step([math.log(3.0)], include=False, removal_key=0.2)
        assert out.d == 0 and out.removed_index is None

    def test_removal_key_order(self):
        guard = MixtureGuard(0.5, [1.0])
        guard.step([math.log(1.4)], include=True, removal_key=0.3)
        out = guard.step([math.log(1.5)], include=True, removal_key=0.1)
        assert out.d == 1 and out.removed_index == 2

    def test_zero_component_pinned(self):
        guard = MixtureGuard(0.5, [0.5, 0.5])
        guard.step([LOG_ZERO, math.log(1.1)], include=True, removal_key=0.1)
        out = guard.step([LOG_INF, math.log(1.1)], include=False, removal_key=0.1)
        # First component is dead; statistic is carried by the second alone.
        assert math.exp(out.log_statistic) == pytest.approx(0.5 * 1.21)

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_coherence_bound_monotone(self, seed):
        rng = random.Random(seed)
        logs, include = random_instance(rng, max_t=15)
        guard = MixtureGuard(0.2, [0.6, 0.4])
        prev_d = 0
        for le, inc in zip(logs, include):
            out = guard.step([le, le * 0.5], include=inc, removal_key=rng.random())
            assert out.d >= prev_d
            assert out.d <= len(guard.query_set)
            prev_d = out.d


class TestTraceOutput:
    def test_trace_rows(self):
        guard = SeqEGuard(0.05)
        for e, inc in [(5.0, True), (4.0, True), (0.8, False)]:
            guard.step(math.log(e), inc)
        trace = guard.trace(method="demo")
        assert trace.bounds == [0, 1, 1]
        assert trace.method == "demo"
        csv = trace.to_csv()
        assert csv.splitlines()[0].startswith("t,included,d,|S|,tdp_bound")
        assert len(csv.splitlines()) == 4

    def test_tdp_bound(self):
        guard = SeqEGuard(0.05)
        guard.step(math.log(5.0), include=True)
        guard.step(math.log(5.0), include=True)
        trace = guard.trace()
        assert trace.rows[-1].tdp_bound == pytest.approx(0.5)
        assert trace.final_tdp_bound == pytest.approx(0.5)
