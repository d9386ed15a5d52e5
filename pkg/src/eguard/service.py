"""HTTP service hosting live guard sessions.

A session wraps one guard with a two-phase protocol: evidence is submitted
first (returning the transformed log e-value and a boosting preview), then
the include/exclude decision advances the guard.  Every mutation appends a
checksummed line to a per-session JSONL log; restarting the service over the
same directory replays the logs and reproduces the exact state.  What-if
subset queries go through the brute-force closure oracle and never mutate
guard state.

Log-domain numbers cross the JSON boundary as decimal strings so that no
precision is lost (documented fields: ``log_e``, ``log_m``, ``log_statistic``,
``boost_factor``).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from .evalues import (
    OnlineSimpleParams,
    boost_factor_lognormal,
    boosting_cutoff,
    calibrate_lift,
    inverse_square_weights,
    online_simple_evalue,
    online_simple_slack,
)
from .guards import ArbEGuard, ExEGuard, SeqEGuard
from .numerics import LOG_INF
from .oracle import IntersectionFamily, OracleCapError, closure_bound

__all__ = ["ProcedureSpec", "SessionStore", "ApiError", "create_app"]

TRACE_PAGE_SIZE = 1000


class ApiError(Exception):
    """Domain error with an HTTP status and a field-level message."""

    def __init__(self, status: int, message: str) -> None:
        super().__init__(message)
        self.status = status
        self.message = message


@dataclass(frozen=True)
class ProcedureSpec:
    """Which guard a session runs and how raw evidence becomes an e-value."""

    method: str = "seq-e-guard"  # seq-e-guard | exe-guard | arbe-guard
    alpha: float = 0.05
    transform: str = "none"  # none | online-simple | admissible-online-simple | calibrator
    a: float = 1.0
    alpha_i: float | None = None
    x: float = 0.1
    gamma_n: int = 1000
    boosting: bool = False
    boost_delta: float | None = None

    def validate(self) -> None:
        if self.method not in ("seq-e-guard", "exe-guard", "arbe-guard"):
            raise ApiError(400, f"spec.method: unknown method {self.method!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ApiError(400, f"spec.alpha: must lie in (0, 1), got {self.alpha}")
        if self.transform not in (
            "none",
            "online-simple",
            "admissible-online-simple",
            "calibrator",
        ):
            raise ApiError(400, f"spec.transform: unknown transform {self.transform!r}")
        if self.a <= 0.0:
            raise ApiError(400, "spec.a: must be positive")
        if self.x <= 0.0:
            raise ApiError(400, "spec.x: must be positive")
        if self.gamma_n < 1:
            raise ApiError(400, "spec.gamma_n: must be at least 1")
        if self.boosting and self.boost_delta is None:
            raise ApiError(400, "spec.boost_delta: required when boosting is enabled")
        if self.boosting and self.method != "seq-e-guard":
            raise ApiError(400, "spec.boosting: only supported for seq-e-guard")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ProcedureSpec":
        if not isinstance(data, dict):
            raise ApiError(400, "spec: must be an object")
        allowed = set(cls.__dataclass_fields__)
        unknown = set(data) - allowed
        if unknown:
            raise ApiError(400, f"spec: unknown fields {sorted(unknown)}")
        try:
            spec = cls(**data)
        except TypeError as exc:
            raise ApiError(400, f"spec: {exc}") from exc
        spec.validate()
        return spec

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "alpha": self.alpha,
            "transform": self.transform,
            "a": self.a,
            "alpha_i": self.alpha_i,
            "x": self.x,
            "gamma_n": self.gamma_n,
            "boosting": self.boosting,
            "boost_delta": self.boost_delta,
        }


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _checksum(body: dict[str, Any]) -> str:
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _fmt(v: float) -> str:
    """Decimal-string serialization for log-domain numbers."""
    return repr(float(v))


def _build_guard(spec: ProcedureSpec):
    if spec.method == "seq-e-guard":
        return SeqEGuard(spec.alpha)
    if spec.method == "exe-guard":
        return ExEGuard(spec.alpha)
    return ArbEGuard(spec.alpha, inverse_square_weights(spec.gamma_n))


class Session:
    """One live guard with its append-only event log."""

    def __init__(self, sid: str, spec: ProcedureSpec, events_path: Path) -> None:
        self.id = sid
        self.spec = spec
        self.events_path = events_path
        self.guard = _build_guard(spec)
        self.events: list[dict[str, Any]] = []
        self.pending: dict[str, Any] | None = None
        self.created = _now()
        self.lock = threading.RLock()

    # -- event log ---------------------------------------------------------

    def _append_event(self, kind: str, payload: dict[str, Any]) -> dict[str, Any]:
        body = {
            "seq": len(self.events) + 1,
            "ts": _now(),
            "kind": kind,
            "payload": payload,
        }
        record = dict(body)
        record["crc"] = _checksum(body)
        with open(self.events_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self.events.append(record)
        return record

    def replay_event(self, record: dict[str, Any]) -> None:
        """Apply a recovered event without re-appending it."""
        self.events.append(record)
        kind = record["kind"]
        payload = record["payload"]
        if kind == "evidence":
            self.pending = payload
        elif kind == "decision":
            self.pending = None
            self.guard.step(float(payload["effective_log_e"]), payload["include"])
        # created / bound_change / whatif need no state transition: the
        # bound change is already part of the guard step above.

    # -- operations --------------------------------------------------------

    def submit_evidence(self, payload: dict[str, Any]) -> dict[str, Any]:
        with self.lock:
            if self.pending is not None:
                raise ApiError(409, "pending evidence exists; decide first")
            log_e, detail = self._transform(payload)
            preview = self._preview()
            evidence = {
                "raw": detail,
                "log_e": _fmt(log_e),
                "preview": preview,
            }
            self._append_event("evidence", evidence)
            self.pending = evidence
            return evidence

    def _transform(self, payload: dict[str, Any]) -> tuple[float, dict[str, Any]]:
        if not isinstance(payload, dict):
            raise ApiError(400, "evidence: must be an object")
        transform = self.spec.transform
        if "e" in payload or "log_e" in payload:
            if transform != "none":
                raise ApiError(
                    400, f"evidence: session transform is {transform!r}, submit a p-value"
                )
            try:
                if "log_e" in payload:
                    log_e = float(payload["log_e"])
                else:
                    e = float(payload["e"])
                    if e < 0.0:
                        raise ApiError(400, "evidence.e: must be nonnegative")
                    log_e = math.log(e) if e > 0.0 else -math.inf
            except (TypeError, ValueError) as exc:
                raise ApiError(400, f"evidence: {exc}") from exc
            return log_e, {k: str(payload[k]) for k in ("e", "log_e") if k in payload}
        if "p" not in payload:
            raise ApiError(400, "evidence: supply 'e', 'log_e', or 'p'")
        try:
            p = float(payload["p"])
        except (TypeError, ValueError) as exc:
            raise ApiError(400, f"evidence.p: {exc}") from exc
        if not 0.0 <= p <= 1.0:
            raise ApiError(400, f"evidence.p: must lie in [0, 1], got {p}")
        if transform == "none":
            raise ApiError(400, "evidence: session expects a raw e-value")
        if transform == "calibrator":
            if p in (0.0, 1.0):
                raise ApiError(400, "evidence.p: calibrator requires p in (0, 1)")
            return calibrate_lift(p, self.spec.x), {"p": p, "x": self.spec.x}
        alpha_i = payload.get("alpha_i", self.spec.alpha_i)
        if alpha_i is None:
            alpha_i = self.spec.alpha
        alpha_i = float(alpha_i)
        if not 0.0 <= alpha_i <= 1.0:
            raise ApiError(400, f"evidence.alpha_i: must lie in [0, 1], got {alpha_i}")
        params = OnlineSimpleParams(alpha=self.spec.alpha, a=self.spec.a)
        log_e = online_simple_evalue(p, alpha_i, params)
        if transform == "admissible-online-simple":
            log_e -= math.log(online_simple_slack(alpha_i, params))
        return log_e, {"p": p, "alpha_i": alpha_i}

    def _preview(self) -> dict[str, Any]:
        if self.spec.method != "seq-e-guard":
            return {}
        guard = self.guard
        log_m = boosting_cutoff(guard.active_logs, guard.log_statistic, self.spec.alpha)
        preview: dict[str, Any] = {"log_m": _fmt(log_m)}
        if self.spec.boosting and self.spec.boost_delta is not None:
            if log_m >= 700.0:
                b = 1.0
            else:
                b = boost_factor_lognormal(self.spec.boost_delta, math.exp(log_m))
            preview["boost_factor"] = _fmt(b)
        return preview

    def decide(self, include: bool) -> dict[str, Any]:
        with self.lock:
            if self.pending is None:
                raise ApiError(409, "no pending evidence to decide on")
            log_e = float(self.pending["log_e"])
            effective = log_e
            preview = self.pending.get("preview", {})
            if self.spec.boosting and "boost_factor" in preview:
                b = float(preview["boost_factor"])
                log_m = float(preview["log_m"])
                if b > 1.0 or log_m < LOG_INF:
                    effective = min(math.log(b) + log_e, log_m)
            outcome = self.guard.step(effective, include)
            self._append_event(
                "decision",
                {
                    "include": include,
                    "effective_log_e": _fmt(effective),
                    "d": outcome.d,
                    "removed_index": outcome.removed_index,
                    "log_statistic": _fmt(outcome.log_statistic),
                },
            )
            if outcome.bound_incremented:
                self._append_event(
                    "bound_change",
                    {"d": outcome.d, "removed_index": outcome.removed_index},
                )
            self.pending = None
            return {
                "t": outcome.t,
                "d": outcome.d,
                "included": outcome.included,
                "bound_incremented": outcome.bound_incremented,
                "removed_index": outcome.removed_index,
                "log_statistic": _fmt(outcome.log_statistic),
            }

    def what_if(self, subset: list[int]) -> dict[str, Any]:
        with self.lock:
            t = self.guard.t
            if t > 20:
                raise ApiError(422, f"oracle cap exceeded: t={t} > 20")
            if not isinstance(subset, list) or not all(
                isinstance(i, int) and 1 <= i <= t for i in subset
            ):
                raise ApiError(400, f"whatif.subset: indices must lie in 1..{t}")
            logs = [
                float(ev["payload"]["effective_log_e"])
                for ev in self.events
                if ev["kind"] == "decision"
            ]
            family = self._family()
            d = closure_bound(family, logs, subset)
            self._append_event("whatif", {"subset": sorted(set(subset)), "d": d})
            return {"d": d}

    def _family(self) -> IntersectionFamily:
        if self.spec.method == "seq-e-guard":
            return IntersectionFamily("product", self.spec.alpha)
        if self.spec.method == "exe-guard":
            return IntersectionFamily("average", self.spec.alpha)
        return IntersectionFamily(
            "weighted", self.spec.alpha, inverse_square_weights(self.spec.gamma_n)
        )

    # -- views -------------------------------------------------------------

    def summary(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "created": self.created,
            "method": self.spec.method,
            "alpha": self.spec.alpha,
            "t": self.guard.t,
            "d": self.guard.d,
            "s_size": len(self.guard.query_set),
            "pending": self.pending is not None,
        }

    def trace_page(self, since: int) -> dict[str, Any]:
        with self.lock:
            page = [ev for ev in self.events if ev["seq"] > since][:TRACE_PAGE_SIZE]
            rows = [
                {
                    "t": row.t,
                    "included": row.included,
                    "d": row.d,
                    "s_size": row.s_size,
                    "tdp_bound": row.tdp_bound,
                    "log_statistic": _fmt(row.log_statistic),
                }
                for row in self.guard.trace().rows
            ]
            return {
                "events": page,
                "next_since": page[-1]["seq"] if page else since,
                "trace": rows,
                "state": {
                    "t": self.guard.t,
                    "d": self.guard.d,
                    "s_size": len(self.guard.query_set),
                    "query_set": list(self.guard.query_set),
                    "excluded": list(self.guard.excluded),
                    "pending": self.pending,
                    "state_hash": self.guard.state_hash(),
                },
            }

    def export_csv(self) -> str:
        with self.lock:
            return self.guard.trace(method=self.spec.method).to_csv()


class SessionStore:
    """All sessions under one data directory, recovered on construction."""

    def __init__(self, data_dir: str | Path) -> None:
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, Session] = {}
        self.tokens: dict[str, str] = {}
        self.lock = threading.RLock()
        self._recover()

    # -- persistence -------------------------------------------------------

    def _meta_path(self, sid: str) -> Path:
        return self.data_dir / f"{sid}.meta.json"

    def _events_path(self, sid: str) -> Path:
        return self.data_dir / f"{sid}.jsonl"

    def _recover(self) -> None:
        for meta_path in sorted(self.data_dir.glob("*.meta.json")):
            meta = json.loads(meta_path.read_text())
            sid = meta["id"]
            spec = ProcedureSpec.from_dict(meta["spec"])
            session = Session(sid, spec, self._events_path(sid))
            session.created = meta["created"]
            for record in self._read_events(session.events_path):
                session.replay_event(record)
            self.sessions[sid] = session
            token = meta.get("request_token")
            if token:
                self.tokens[token] = sid

    @staticmethod
    def _read_events(path: Path) -> list[dict[str, Any]]:
        """Parse the event log, dropping a torn or corrupt tail."""
        if not path.exists():
            return []
        records: list[dict[str, Any]] = []
        for line in path.read_text(encoding="utf-8").splitlines():
            try:
                record = json.loads(line)
                crc = record.pop("crc")
                if crc != _checksum(record):
                    break
                if record["seq"] != len(records) + 1:
                    break
                record["crc"] = crc
            except (json.JSONDecodeError, KeyError, TypeError):
                break
            records.append(record)
        return records

    # -- operations --------------------------------------------------------

    def create(self, spec: ProcedureSpec, request_token: str | None = None) -> Session:
        with self.lock:
            if request_token and request_token in self.tokens:
                return self.sessions[self.tokens[request_token]]
            sid = uuid.uuid4().hex[:12]
            session = Session(sid, spec, self._events_path(sid))
            meta = {
                "id": sid,
                "spec": spec.to_dict(),
                "created": session.created,
                "request_token": request_token,
            }
            meta_clean = {
                "id": sid,
                "spec": {k: v for k, v in spec.to_dict().items() if v is not None},
                "created": session.created,
                "request_token": request_token,
            }
            self._meta_path(sid).write_text(json.dumps(meta_clean, indent=2))
            session._append_event("created", {"spec": meta["spec"]})
            self.sessions[sid] = session
            if request_token:
                self.tokens[request_token] = sid
            return session

    def get(self, sid: str) -> Session:
        with self.lock:
            session = self.sessions.get(sid)
        if session is None:
            raise ApiError(404, f"unknown session {sid!r}")
        return session

    def list_summaries(self) -> list[dict[str, Any]]:
        with self.lock:
            return [s.summary() for _, s in sorted(self.sessions.items())]


def create_app(data_dir: str | Path, frontend_dir: str | Path | None = None):
    """FastAPI application over a :class:`SessionStore`."""
    store = SessionStore(data_dir)
    app = FastAPI(title="eguard session service", version="0.1.0")
    app.state.store = store

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"error": exc.message})

    async def _json_body(request: Request) -> dict[str, Any]:
        try:
            body = await request.json()
        except Exception as exc:
            raise ApiError(400, f"invalid JSON body: {exc}") from exc
        if not isinstance(body, dict):
            raise ApiError(400, "body must be a JSON object")
        return body

    @app.post("/sessions")
    async def create_session(request: Request):
        body = await _json_body(request)
        spec = ProcedureSpec.from_dict(body.get("spec", {}))
        token = body.get("request_token")
        if token is not None and not isinstance(token, str):
            raise ApiError(400, "request_token: must be a string")
        session = store.create(spec, token)
        return {"id": session.id, **session.summary()}

    @app.get("/sessions")
    async def list_sessions():
        return {"sessions": store.list_summaries()}

    @app.post("/sessions/{sid}/evidence")
    async def submit_evidence(sid: str, request: Request):
        body = await _json_body(request)
        return store.get(sid).submit_evidence(body)

    @app.post("/sessions/{sid}/decision")
    async def decide(sid: str, request: Request):
        body = await _json_body(request)
        include = body.get("include")
        if not isinstance(include, bool):
            raise ApiError(400, "decision.include: must be a boolean")
        return store.get(sid).decide(include)

    @app.post("/sessions/{sid}/whatif")
    async def what_if(sid: str, request: Request):
        body = await _json_body(request)
        return store.get(sid).what_if(body.get("subset", []))

    @app.get("/sessions/{sid}/trace")
    async def get_trace(sid: str, since: int = 0):
        return store.get(sid).trace_page(since)

    @app.get("/sessions/{sid}/export.csv")
    async def export_csv(sid: str):
        return PlainTextResponse(store.get(sid).export_csv(), media_type="text/csv")

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app
