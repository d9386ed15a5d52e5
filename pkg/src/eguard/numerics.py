"""Special functions and solvers shared by the whole package.

All e-value arithmetic lives in the log domain: a nonnegative quantity v is
represented by ``log(v)`` as a plain float, with ``-inf`` encoding zero and
``+inf`` encoding an infinite e-value.  This module provides the standard
normal CDF/quantile pair, a stable evaluator for weighted sums of products,
and a bisection root solver.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

LOG_ZERO = float("-inf")
LOG_INF = float("inf")

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF, accurate to well below 1e-12 absolute error."""
    return 0.5 * math.erfc(-x / _SQRT2)


def std_normal_pdf(x: float) -> float:
    """Standard normal density."""
    return math.exp(-0.5 * x * x) / _SQRT_2PI


# Rational approximation for the normal quantile (Acklam-style minimax
# coefficients, relative error below 1.2e-9), refined by Newton steps
# against std_normal_cdf to near machine precision.
_QA = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_QB = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_QC = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549732539343734e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_QD = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)
_Q_LOW = 0.02425


def _quantile_estimate(p: float) -> float:
    if p < _Q_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (
            ((((_QC[0] * q + _QC[1]) * q + _QC[2]) * q + _QC[3]) * q + _QC[4]) * q + _QC[5]
        ) / ((((_QD[0] * q + _QD[1]) * q + _QD[2]) * q + _QD[3]) * q + 1.0)
    if p > 1.0 - _Q_LOW:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -(
            ((((_QC[0] * q + _QC[1]) * q + _QC[2]) * q + _QC[3]) * q + _QC[4]) * q + _QC[5]
        ) / ((((_QD[0] * q + _QD[1]) * q + _QD[2]) * q + _QD[3]) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (
        (((((_QA[0] * r + _QA[1]) * r + _QA[2]) * r + _QA[3]) * r + _QA[4]) * r + _QA[5]) * q
    ) / (((((_QB[0] * r + _QB[1]) * r + _QB[2]) * r + _QB[3]) * r + _QB[4]) * r + 1.0)


def std_normal_quantile(p: float) -> float:
    """Inverse of :func:`std_normal_cdf` on the open unit interval."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile requires p in (0, 1), got {p}")
    x = _quantile_estimate(p)
    # Newton refinement; skipped when the density underflows (extreme tails,
    # where the rational estimate is already the best attainable).
    for _ in range(2):
        pdf = std_normal_pdf(x)
        if pdf <= 0.0:
            break
        x -= (std_normal_cdf(x) - p) / pdf
    return x


def log_sum_prod(terms: Iterable[tuple[float, float]]) -> float:
    """log(sum_k exp(log_weight_k + log_product_k)), overflow-safe.

    An empty iterable yields -inf (log of zero).  A +inf term dominates.
    """
    logs = [lw + lp for lw, lp in terms]
    if not logs:
        return LOG_ZERO
    m = max(logs)
    if m == LOG_ZERO:
        return LOG_ZERO
    if m == LOG_INF:
        return LOG_INF
    return m + math.log(sum(math.exp(v - m) for v in logs))


def log_mean(logs: Sequence[float]) -> float:
    """log of the arithmetic mean of the values encoded by ``logs``."""
    if not logs:
        raise ValueError("log_mean of empty sequence")
    return log_sum_prod((0.0, v) for v in logs) - math.log(len(logs))


class BracketError(ValueError):
    """The root bracket handed to the bisection solver has the wrong signs."""


def solve_increasing_root(
    f: Callable[[float], float], lo: float, hi: float, tol: float
) -> float:
    """Root of a nondecreasing function by bisection (at most 200 iterations).

    Requires f(lo) <= 0 <= f(hi); returns a point within ``tol`` of the root.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    f_lo = f(lo)
    f_hi = f(hi)
    if f_lo > 0.0 or f_hi < 0.0:
        raise BracketError(
            f"f({lo})={f_lo} and f({hi})={f_hi} do not bracket a root of a "
            "nondecreasing function"
        )
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
