"""Exhaustive evaluation of the closed testing bound d(S).

For a prefix of observed e-values, the bound for a query set S is the
minimum of ``|S \\ I|`` over all index subsets I whose intersection test
accepts.  Three test families are supported:

* ``product``  — some prefix product of the e-values in I reaches 1/alpha;
* ``average``  — some prefix arithmetic mean reaches 1/alpha;
* ``weighted`` — the rank-weighted sum over I reaches 1/alpha.

Restricting I to the observed prefix is exact because the families are
increasing: extending I beyond its maximum can only raise the test.
Enumeration is a vectorized sweep over all 2^t subsets, capped at t = 20.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .evalues import GammaWeights
from .numerics import LOG_INF, LOG_ZERO

__all__ = ["IntersectionFamily", "OracleCapError", "phi", "closure_bound", "ORACLE_CAP"]

ORACLE_CAP = 20

# Finite stand-ins for log-domain zero/infinity inside the vectorized sweep;
# large enough to dominate any sum of at most ORACLE_CAP ordinary terms.
_LOG_CLAMP = 1e12


class OracleCapError(ValueError):
    """Raised when the enumeration would exceed the 2^t hard cap."""

    def __init__(self, t: int) -> None:
        super().__init__(f"oracle cap exceeded: t={t} > {ORACLE_CAP}")
        self.cap = ORACLE_CAP


@dataclass(frozen=True)
class IntersectionFamily:
    """One family of intersection tests at level alpha."""

    kind: str  # "product" | "average" | "weighted"
    alpha: float
    gamma: GammaWeights | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("product", "average", "weighted"):
            raise ValueError(f"unknown family kind: {self.kind!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.kind == "weighted" and self.gamma is None:
            raise ValueError("weighted family requires gamma weights")


def _linear(log_e: float) -> float:
    try:
        return math.exp(log_e)
    except OverflowError:
        return math.inf


def phi(family: IntersectionFamily, log_evalues: Sequence[float], I: Iterable[int]) -> int:
    """Reference (scalar) intersection test: 1 rejects, 0 accepts.

    ``I`` holds 1-based indices into the observed prefix.
    """
    idx = sorted(set(I))
    if any(i < 1 or i > len(log_evalues) for i in idx):
        raise ValueError("subset indices out of range")
    threshold = 1.0 / family.alpha
    log_threshold = -math.log(family.alpha)
    if family.kind == "product":
        zero_count = 0
        log_prod = 0.0
        for i in idx:
            v = log_evalues[i - 1]
            if v == LOG_ZERO:
                zero_count += 1
            elif v == LOG_INF:
                return 1 if zero_count == 0 else 0
            else:
                log_prod += v
            if zero_count == 0 and log_prod >= log_threshold:
                return 1
        return 0
    if family.kind == "average":
        total = 0.0
        for rank, i in enumerate(idx, start=1):
            total += _linear(log_evalues[i - 1])
            if total >= threshold * rank:
                return 1
        return 0
    assert family.gamma is not None
    total = 0.0
    for rank, i in enumerate(idx, start=1):
        total += _linear(log_evalues[i - 1]) * family.gamma[rank]
    return 1 if total >= threshold else 0


def _clamped_logs(log_evalues: Sequence[float]) -> np.ndarray:
    arr = np.asarray(log_evalues, dtype=float)
    return np.clip(arr, -_LOG_CLAMP, _LOG_CLAMP)


def _phi_all_subsets(family: IntersectionFamily, log_evalues: Sequence[float]) -> np.ndarray:
    """Vector of phi over every subset of the prefix (bitmask order)."""
    t = len(log_evalues)
    n_sub = 1 << t
    member = [((np.arange(n_sub) >> j) & 1).astype(bool) for j in range(t)]
    rejected = np.zeros(n_sub, dtype=bool)
    threshold = 1.0 / family.alpha
    log_threshold = -math.log(family.alpha)
    if family.kind == "product":
        logs = _clamped_logs(log_evalues)
        cur = np.zeros(n_sub)
        for j in range(t):
            cur = cur + np.where(member[j], logs[j], 0.0)
            rejected |= member[j] & (cur >= log_threshold)
        return rejected
    linear = np.array([min(_linear(v), 1e300) for v in log_evalues])
    if family.kind == "average":
        cur = np.zeros(n_sub)
        count = np.zeros(n_sub, dtype=np.int64)
        for j in range(t):
            cur = cur + np.where(member[j], linear[j], 0.0)
            count = count + member[j]
            rejected |= member[j] & (cur >= threshold * count)
        return rejected
    assert family.gamma is not None
    gamma = np.array([family.gamma[r] for r in range(1, t + 1)])
    cur = np.zeros(n_sub)
    rank = np.zeros(n_sub, dtype=np.int64)
    for j in range(t):
        rank = rank + member[j]
        weight = np.where(member[j], gamma[np.maximum(rank, 1) - 1], 0.0)
        cur = cur + weight * linear[j]
    return cur >= threshold


def closure_bound(
    family: IntersectionFamily,
    log_evalues: Sequence[float],
    S: Iterable[int],
    return_witness: bool = False,
) -> int | tuple[int, list[int]]:
    """min over accepting subsets I of |S \\ I|, by full enumeration.

    With ``return_witness`` the minimizing I (smallest bitmask among
    optima) is returned alongside the bound.
    """
    t = len(log_evalues)
    if t > ORACLE_CAP:
        raise OracleCapError(t)
    s_idx = sorted(set(S))
    if any(i < 1 or i > t for i in s_idx):
        raise ValueError("query subset indices out of range")
    if t == 0:
        return (0, []) if return_witness else 0
    rejected = _phi_all_subsets(family, log_evalues)
    n_sub = 1 << t
    overlap = np.zeros(n_sub, dtype=np.int64)
    for i in s_idx:
        overlap += (np.arange(n_sub) >> (i - 1)) & 1
    overlap[rejected] = -1
    best = int(overlap.max())
    d = len(s_idx) - best
    if not return_witness:
        return d
    witness_mask = int(np.flatnonzero(overlap == best)[0])
    witness = [i + 1 for i in range(t) if (witness_mask >> i) & 1]
    return d, witness
