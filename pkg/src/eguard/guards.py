"""Streaming true-discovery guards.

Three state machines share a common protocol: the caller feeds one e-value
per step together with the decision whether the new index joins the query
set, and receives the updated lower bound on the number of true discoveries
in the query set.

* :class:`SeqEGuard`   — product statistic for sequential e-values.
* :class:`ExEGuard`    — arithmetic-mean statistic for exchangeable nulls.
* :class:`ArbEGuard`   — weighted-average statistic, valid under arbitrary
  dependence (conservative off the full path).
* :class:`MixtureGuard` — weighted mixture of per-component products, the
  engine behind the mean-mixture p-value shortcuts.

All e-values are log-domain floats.  Ties in removal rules break toward the
smallest index so that replays are deterministic.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .evalues import GammaWeights
from .numerics import LOG_INF, LOG_ZERO
from .trace import BoundTrace, TraceRow

__all__ = ["StepOutcome", "SeqEGuard", "ExEGuard", "ArbEGuard", "MixtureGuard"]


@dataclass(frozen=True)
class StepOutcome:
    """What one guard step did: bound, crossing, and the evaluated statistic."""

    t: int
    d: int
    included: bool
    bound_incremented: bool
    removed_index: int | None
    log_statistic: float


def _check_level(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


class _LogProductAccumulator:
    """Running log-product with exact handling of zero/infinite factors.

    A zero factor pins the product at zero regardless of infinite factors,
    matching the guard convention that a dead index keeps its set dead.
    """

    __slots__ = ("finite_sum", "zero_count", "inf_count")

    def __init__(self) -> None:
        self.finite_sum = 0.0
        self.zero_count = 0
        self.inf_count = 0

    def add(self, log_e: float) -> None:
        if log_e == LOG_ZERO:
            self.zero_count += 1
        elif log_e == LOG_INF:
            self.inf_count += 1
        else:
            self.finite_sum += log_e

    def remove(self, log_e: float) -> None:
        if log_e == LOG_ZERO:
            self.zero_count -= 1
        elif log_e == LOG_INF:
            self.inf_count -= 1
        else:
            self.finite_sum -= log_e

    @property
    def log_value(self) -> float:
        if self.zero_count:
            return LOG_ZERO
        if self.inf_count:
            return LOG_INF
        return self.finite_sum


class _GuardBase:
    """State shared by the product and mean guards."""

    def __init__(self, alpha: float) -> None:
        _check_level(alpha)
        self.alpha = alpha
        self.log_threshold = -math.log(alpha)
        self.t = 0
        self.d = 0
        self.query_set: list[int] = []
        self.discard_set: list[int] = []
        self.excluded: list[int] = []
        # Max-heap over active (queried, not yet removed) indices.
        self._active_heap: list[tuple[float, int]] = []
        self._rows: list[TraceRow] = []

    @property
    def active_indices(self) -> list[int]:
        return sorted(idx for _, idx in self._active_heap)

    @property
    def active_logs(self) -> list[float]:
        return [-neg for neg, _ in self._active_heap]

    def _pop_largest_active(self) -> tuple[float, int]:
        neg_log_e, idx = heapq.heappop(self._active_heap)
        return -neg_log_e, idx

    def _push_active(self, idx: int, log_e: float) -> None:
        heapq.heappush(self._active_heap, (-log_e, idx))

    def _record(self, included: bool, log_statistic: float) -> None:
        self._rows.append(
            TraceRow(
                t=self.t,
                included=included,
                d=self.d,
                s_size=len(self.query_set),
                log_statistic=log_statistic,
            )
        )

    def trace(self, method: str | None = None) -> BoundTrace:
        return BoundTrace(rows=tuple(self._rows), method=method)

    def state_hash(self) -> str:
        """Digest of the replay-relevant state, for audit comparisons."""
        parts = [
            f"t={self.t}",
            f"d={self.d}",
            f"S={self.query_set}",
            f"U={self.discard_set}",
            f"excluded={self.excluded}",
            f"heap={sorted(self._active_heap)}",
        ]
        return hashlib.sha256("|".join(parts).encode()).hexdigest()


class SeqEGuard(_GuardBase):
    """Product-statistic guard for sequential e-values.

    Maintains the active queried indices A and the retained non-queried
    indices U (e-values below 1).  When the product over A and U reaches
    1/alpha at an included step, the bound increments and the largest
    active e-value is dropped from future products.
    """

    def __init__(self, alpha: float) -> None:
        super().__init__(alpha)
        self._product = _LogProductAccumulator()

    @property
    def log_statistic(self) -> float:
        """Current log-product over the active and retained indices."""
        return self._product.log_value

    def step(self, log_e: float, include: bool) -> StepOutcome:
        self.t += 1
        incremented = False
        removed: int | None = None
        if include:
            self.query_set.append(self.t)
            self._push_active(self.t, log_e)
            self._product.add(log_e)
            stat = self._product.log_value
            if stat >= self.log_threshold:
                self.d += 1
                incremented = True
                removed_log_e, removed = self._pop_largest_active()
                self._product.remove(removed_log_e)
                self.excluded.append(removed)
        else:
            if log_e < 0.0:
                self.discard_set.append(self.t)
                self._product.add(log_e)
            stat = self._product.log_value
        self._record(include, stat)
        return StepOutcome(
            t=self.t,
            d=self.d,
            included=include,
            bound_incremented=incremented,
            removed_index=removed,
            log_statistic=stat,
        )


class ExEGuard(_GuardBase):
    """Arithmetic-mean guard for streams whose null e-values are exchangeable.

    Identical bookkeeping to :class:`SeqEGuard` except that the statistic is
    the mean over the active and retained indices and that non-queried
    e-values below 1/alpha (not merely below 1) are retained.
    """

    def __init__(self, alpha: float) -> None:
        super().__init__(alpha)
        self._finite_linear_sum = 0.0
        self._inf_count = 0
        self._count = 0

    def _linear(self, log_e: float) -> float:
        try:
            return math.exp(log_e)
        except OverflowError:
            return math.inf

    def _add(self, log_e: float) -> None:
        v = self._linear(log_e)
        if math.isinf(v):
            self._inf_count += 1
        else:
            self._finite_linear_sum += v
        self._count += 1

    def _remove(self, log_e: float) -> None:
        v = self._linear(log_e)
        if math.isinf(v):
            self._inf_count -= 1
        else:
            self._finite_linear_sum -= v
        self._count -= 1

    @property
    def log_statistic(self) -> float:
        """log of the mean e-value over the active and retained indices."""
        if self._count == 0:
            return LOG_ZERO
        if self._inf_count:
            return LOG_INF
        mean = self._finite_linear_sum / self._count
        return math.log(mean) if mean > 0.0 else LOG_ZERO

    def step(self, log_e: float, include: bool) -> StepOutcome:
        self.t += 1
        incremented = False
        removed: int | None = None
        if include:
            self.query_set.append(self.t)
            self._push_active(self.t, log_e)
            self._add(log_e)
            stat = self.log_statistic
            if stat >= self.log_threshold:
                self.d += 1
                incremented = True
                removed_log_e, removed = self._pop_largest_active()
                self._remove(removed_log_e)
                self.excluded.append(removed)
        else:
            if log_e < self.log_threshold:
                self.discard_set.append(self.t)
                self._add(log_e)
            stat = self.log_statistic
        self._record(include, stat)
        return StepOutcome(
            t=self.t,
            d=self.d,
            included=include,
            bound_incremented=incremented,
            removed_index=removed,
            log_statistic=stat,
        )


class ArbEGuard:
    """Weighted-average guard valid under arbitrary dependence.

    The statistic weights the e-values of queried, non-removed indices by a
    nonincreasing sequence indexed by rank among all non-removed indices;
    non-queried indices shift ranks but contribute no mass.  Conservative in
    general; exact when the query set is the full prefix.
    """

    def __init__(self, alpha: float, gamma: GammaWeights) -> None:
        _check_level(alpha)
        self.alpha = alpha
        self.gamma = gamma
        self.t = 0
        self.d = 0
        self.query_set: list[int] = []
        self.excluded: list[int] = []
        self._linear_e: dict[int, float] = {}
        self._rows: list[TraceRow] = []

    def _weighted_sum(self, without: int | None = None) -> float:
        """Sum of E_i * gamma_rank over queried indices, optionally dropping one.

        The dropped index is removed from the ranking as well, as if it had
        been excluded.
        """
        excluded = set(self.excluded)
        in_query = set(self.query_set)
        total = 0.0
        rank = 0
        for i in range(1, self.t + 1):
            if i in excluded or i == without:
                continue
            rank += 1
            if i in in_query:
                total += self._linear_e[i] * self.gamma[rank]
        return total

    @property
    def log_statistic(self) -> float:
        total = self._weighted_sum()
        if total <= 0.0:
            return LOG_ZERO
        return math.log(total) if not math.isinf(total) else LOG_INF

    def step(self, log_e: float, include: bool) -> StepOutcome:
        self.t += 1
        try:
            self._linear_e[self.t] = math.exp(log_e)
        except OverflowError:
            self._linear_e[self.t] = math.inf
        incremented = False
        removed: int | None = None
        if include:
            self.query_set.append(self.t)
        stat = self.log_statistic
        if include and stat >= -math.log(self.alpha):
            self.d += 1
            incremented = True
            candidates = [i for i in self.query_set if i not in set(self.excluded)]
            removed = min(candidates, key=lambda i: (self._weighted_sum(without=i), i))
            self.excluded.append(removed)
            stat_after = self.log_statistic
        else:
            stat_after = stat
        self._rows.append(
            TraceRow(
                t=self.t,
                included=include,
                d=self.d,
                s_size=len(self.query_set),
                log_statistic=stat,
            )
        )
        return StepOutcome(
            t=self.t,
            d=self.d,
            included=include,
            bound_incremented=incremented,
            removed_index=removed,
            log_statistic=stat,
        )

    def trace(self, method: str | None = None) -> BoundTrace:
        return BoundTrace(rows=tuple(self._rows), method=method)

    def state_hash(self) -> str:
        parts = [
            f"t={self.t}",
            f"d={self.d}",
            f"S={self.query_set}",
            f"excluded={self.excluded}",
        ]
        return hashlib.sha256("|".join(parts).encode()).hexdigest()


class MixtureGuard:
    """Mixture-of-products guard behind the mean-mixture p-value shortcuts.

    Each step supplies one log e-value per mixture component; the statistic
    is the weighted sum of per-component products over all non-removed
    indices.  The crossing check runs every step; on a crossing, the queried
    non-removed index with the smallest removal key is dropped.
    """

    def __init__(self, alpha: float, weights: Sequence[float]) -> None:
        _check_level(alpha)
        if not len(weights):
            raise ValueError("at least one mixture component required")
        if any(w <= 0.0 for w in weights):
            raise ValueError("mixture weights must be positive")
        if sum(weights) > 1.0 + 1e-12:
            raise ValueError("mixture weights must sum to at most 1")
        self.alpha = alpha
        self.log_threshold = -math.log(alpha)
        self.log_weights = np.log(np.asarray(weights, dtype=float))
        self.n_components = len(weights)
        self.t = 0
        self.d = 0
        self.query_set: list[int] = []
        self.excluded: list[int] = []
        # Per-component product accumulators, vectorized: finite part of the
        # log-product plus counts of zero/infinite factors.
        self._finite_sum = np.zeros(self.n_components)
        self._zero_count = np.zeros(self.n_components, dtype=np.int64)
        self._inf_count = np.zeros(self.n_components, dtype=np.int64)
        self._vectors: dict[int, np.ndarray] = {}
        self._removal_keys: dict[int, float] = {}
        self._rows: list[TraceRow] = []

    def _accumulate(self, vec: np.ndarray, sign: int) -> None:
        zero = vec == LOG_ZERO
        inf = vec == LOG_INF
        finite = ~zero & ~inf
        self._zero_count += sign * zero
        self._inf_count += sign * inf
        self._finite_sum[finite] += sign * vec[finite]

    @property
    def log_statistic(self) -> float:
        comp = np.where(
            self._zero_count > 0,
            LOG_ZERO,
            np.where(self._inf_count > 0, LOG_INF, self._finite_sum),
        )
        vals = self.log_weights + comp
        m = vals.max()
        if m == LOG_ZERO:
            return LOG_ZERO
        if m == LOG_INF:
            return LOG_INF
        return float(m + np.log(np.exp(vals - m).sum()))

    def step(
        self,
        per_component_log_e: Sequence[float],
        include: bool,
        removal_key: float,
    ) -> StepOutcome:
        vec = np.asarray(per_component_log_e, dtype=float)
        if vec.shape != (self.n_components,):
            raise ValueError(
                f"expected {self.n_components} component e-values, got {vec.shape}"
            )
        self.t += 1
        self._accumulate(vec, +1)
        if include:
            self.query_set.append(self.t)
            self._vectors[self.t] = vec
            self._removal_keys[self.t] = removal_key
        incremented = False
        removed: int | None = None
        stat = self.log_statistic
        if stat >= self.log_threshold:
            excluded = set(self.excluded)
            candidates = [i for i in self.query_set if i not in excluded]
            if candidates:
                self.d += 1
                incremented = True
                removed = min(candidates, key=lambda i: (self._removal_keys[i], i))
                self._accumulate(self._vectors.pop(removed), -1)
                self.excluded.append(removed)
        self._rows.append(
            TraceRow(
                t=self.t,
                included=include,
                d=self.d,
                s_size=len(self.query_set),
                log_statistic=stat,
            )
        )
        return StepOutcome(
            t=self.t,
            d=self.d,
            included=include,
            bound_incremented=incremented,
            removed_index=removed,
            log_statistic=stat,
        )

    def trace(self, method: str | None = None) -> BoundTrace:
        return BoundTrace(rows=tuple(self._rows), method=method)
