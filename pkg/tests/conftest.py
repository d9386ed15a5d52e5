"""Shared test helpers: independent oracles and acceptance verdict reporting."""

from __future__ import annotations

import itertools
import math
import random

from eguard.oracle import IntersectionFamily, phi

# ---------------------------------------------------------------------------
# Independent second enumerator for the closed-testing bound.  Deliberately
# coded differently from the package implementation: pure Python, iterates
# subsets grouped by size via itertools.combinations (largest intersections
# first), and reuses only the scalar reference test `phi`.


def closure_bound_reference(
    family: IntersectionFamily, log_evalues, S, phi_fn=None
) -> int:
    test = phi_fn or phi
    t = len(log_evalues)
    s_set = set(S)
    universe = list(range(1, t + 1))
    best = 0
    for size in range(t, -1, -1):
        if best >= len(s_set):
            break
        for I in itertools.combinations(universe, size):
            overlap = len(s_set.intersection(I))
            if overlap <= best:
                continue
            if test(family, log_evalues, I) == 0:
                best = overlap
    return len(s_set) - best


def random_instance(rng: random.Random, max_t: int = 12, include_prob: float = 0.6):
    """A random stream of log e-values with random inclusion decisions."""
    t = rng.randint(1, max_t)
    logs = [rng.uniform(-3.0, 3.0) for _ in range(t)]
    include = [rng.random() < include_prob for _ in range(t)]
    return logs, include


# ---------------------------------------------------------------------------
# Acceptance verdicts: collected by tests/test_acceptance.py, printed in the
# terminal summary so `pytest -v` output carries one line per criterion.

VERDICTS: list[str] = []


def record_verdict(num: int, description: str, passed: bool) -> None:
    status = "PASS" if passed else "FAIL"
    VERDICTS.append(f"[acceptance {num}] {status}: {description}")
    assert passed, f"acceptance criterion {num} failed: {description}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
