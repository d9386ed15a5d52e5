"""Per-step bound records and their CSV serialization."""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, Sequence

TRACE_HEADER = "t,included,d,|S|,tdp_bound,log_statistic"


@dataclass(frozen=True)
class TraceRow:
    """One step of a guard run: bound, query-set size, and the statistic."""

    t: int
    included: bool
    d: int
    s_size: int
    log_statistic: float

    @property
    def tdp_bound(self) -> float:
        return self.d / self.s_size if self.s_size else 0.0

    def csv_line(self, method: str | None = None) -> str:
        cells = [
            str(self.t),
            "1" if self.included else "0",
            str(self.d),
            str(self.s_size),
            repr(self.tdp_bound),
            repr(self.log_statistic),
        ]
        if method is not None:
            cells.append(method)
        return ",".join(cells)


@dataclass(frozen=True)
class BoundTrace:
    """A full run: ordered rows, optionally tagged with a method name."""

    rows: tuple[TraceRow, ...]
    method: str | None = None

    @property
    def bounds(self) -> list[int]:
        return [r.d for r in self.rows]

    @property
    def final_tdp_bound(self) -> float:
        return self.rows[-1].tdp_bound if self.rows else 0.0

    def to_csv(self) -> str:
        header = TRACE_HEADER if self.method is None else TRACE_HEADER + ",method"
        buf = io.StringIO()
        buf.write(header + "\n")
        for row in self.rows:
            buf.write(row.csv_line(self.method) + "\n")
        return buf.getvalue()


def write_traces_csv(traces: Iterable[BoundTrace]) -> str:
    """Concatenate several method-tagged traces into one CSV document."""
    buf = io.StringIO()
    buf.write(TRACE_HEADER + ",method\n")
    for trace in traces:
        name = trace.method or ""
        for row in trace.rows:
            buf.write(row.csv_line(name) + "\n")
    return buf.getvalue()


def trace_from_bounds(
    bounds: Sequence[int],
    included: Sequence[bool],
    s_sizes: Sequence[int],
    log_statistics: Sequence[float],
    method: str | None = None,
) -> BoundTrace:
    rows = tuple(
        TraceRow(t=i + 1, included=inc, d=d, s_size=s, log_statistic=stat)
        for i, (d, inc, s, stat) in enumerate(
            zip(bounds, included, s_sizes, log_statistics)
        )
    )
    return BoundTrace(rows=rows, method=method)
