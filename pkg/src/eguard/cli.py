"""Command-line entry point: simulate, replay, oracle, and serve.

Exit codes: 0 success, 2 configuration error, 3 malformed replay line,
4 oracle cap exceeded, 5 port busy.
"""

from __future__ import annotations

import argparse
import errno
import hashlib
import json
import math
import socket
import sys
from pathlib import Path

from . import __version__
from .evalues import inverse_square_weights
from .guards import ArbEGuard, ExEGuard, SeqEGuard
from .oracle import IntersectionFamily, OracleCapError, closure_bound
from .sim import METHODS, SimConfig, run_grid
from .trace import TRACE_HEADER

EXIT_CONFIG = 2
EXIT_MALFORMED = 3
EXIT_ORACLE_CAP = 4
EXIT_PORT_BUSY = 5


def _fail(code: int, message: str) -> "int":
    print(message, file=sys.stderr)
    return code


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def cmd_simulate(args: argparse.Namespace) -> int:
    settings: dict = {}
    if args.config:
        try:
            settings.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            return _fail(EXIT_CONFIG, f"config error: {exc}")
    for key, value in (
        ("n", args.n),
        ("trials", args.trials),
        ("alpha", args.alpha),
        ("seed", args.seed),
        ("jobs", args.jobs),
    ):
        if value is not None:
            settings[key] = value
    if args.mu_a is not None:
        settings["mu_a"] = list(_parse_float_list(args.mu_a))
    if args.pi_a is not None:
        settings["pi_a"] = list(_parse_float_list(args.pi_a))
    if args.methods is not None:
        settings["methods"] = args.methods.split(",")
    for key in ("mu_a", "pi_a", "methods"):
        if key in settings:
            settings[key] = tuple(settings[key])
    try:
        cfg = SimConfig(**settings)
    except (TypeError, ValueError) as exc:
        return _fail(EXIT_CONFIG, f"config error: {exc}")

    result = run_grid(cfg)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "curves.csv"
    csv_text = result.to_csv()
    csv_path.write_text(csv_text)
    manifest = {
        "tool": "eguard",
        "version": __version__,
        "config": {
            "n": cfg.n,
            "trials": cfg.trials,
            "alpha": cfg.alpha,
            "mu_a": list(cfg.mu_a),
            "pi_a": list(cfg.pi_a),
            "methods": list(cfg.methods),
            "seed": cfg.seed,
            "a": cfg.a,
            "lambda_adaptive": cfg.lambda_adaptive,
            "a_max": cfg.a_max,
            "j_max": cfg.j_max,
        },
        "outputs": {
            "curves.csv": hashlib.sha256(csv_text.encode()).hexdigest(),
        },
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {csv_path} and manifest.json")
    return 0


def _replay_guard(method: str, alpha: float, gamma_n: int):
    if method == "seq-e-guard":
        return SeqEGuard(alpha)
    if method == "exe-guard":
        return ExEGuard(alpha)
    if method == "arbe-guard":
        return ArbEGuard(alpha, inverse_square_weights(gamma_n))
    raise ValueError(f"unknown method {method!r}")


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        guard = _replay_guard(args.method, args.alpha, args.gamma_n)
    except ValueError as exc:
        return _fail(EXIT_CONFIG, f"config error: {exc}")
    stream = open(args.file, "r", encoding="utf-8") if args.file != "-" else sys.stdin
    print(TRACE_HEADER, flush=True)
    try:
        for lineno, line in enumerate(stream, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                if "e" in record:
                    e = float(record["e"])
                    if e < 0.0:
                        raise ValueError("e-value must be nonnegative")
                    log_e = math.log(e) if e > 0.0 else -math.inf
                elif "log_e" in record:
                    log_e = float(record["log_e"])
                else:
                    raise ValueError("need 'e' or 'log_e'")
                include = bool(record.get("include", True))
            except (ValueError, TypeError, json.JSONDecodeError) as exc:
                return _fail(EXIT_MALFORMED, f"malformed line {lineno}: {exc}")
            guard.step(log_e, include)
            print(guard.trace().rows[-1].csv_line(), flush=True)
    finally:
        if stream is not sys.stdin:
            stream.close()
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    try:
        lines = Path(args.file).read_text().splitlines()
    except OSError as exc:
        return _fail(EXIT_CONFIG, f"config error: {exc}")
    logs: list[float] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            if "e" in record:
                e = float(record["e"])
                logs.append(math.log(e) if e > 0.0 else -math.inf)
            elif "log_e" in record:
                logs.append(float(record["log_e"]))
            else:
                raise ValueError("need 'e' or 'log_e'")
        except (ValueError, TypeError, json.JSONDecodeError) as exc:
            return _fail(EXIT_MALFORMED, f"malformed line {lineno}: {exc}")
    try:
        subset = [int(v) for v in args.subset.split(",")] if args.subset else []
    except ValueError as exc:
        return _fail(EXIT_CONFIG, f"config error: bad subset: {exc}")
    gamma = inverse_square_weights(max(len(logs), 1))
    try:
        family = IntersectionFamily(
            args.family, args.alpha, gamma if args.family == "weighted" else None
        )
    except ValueError as exc:
        return _fail(EXIT_CONFIG, f"config error: {exc}")
    try:
        if args.verbose:
            d, witness = closure_bound(family, logs, subset, return_witness=True)
            print(d)
            print(f"accepting subset: {witness}")
        else:
            print(closure_bound(family, logs, subset))
    except OracleCapError as exc:
        return _fail(EXIT_ORACLE_CAP, str(exc))
    except ValueError as exc:
        return _fail(EXIT_CONFIG, f"config error: {exc}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    data_dir = Path(args.data_dir)
    try:
        data_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail(EXIT_CONFIG, f"config error: data dir not writable: {exc}")
    # Probe the port up front so a busy port maps to a stable exit code.
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((args.host, args.port))
    except OSError as exc:
        if exc.errno in (errno.EADDRINUSE, errno.EACCES):
            return _fail(EXIT_PORT_BUSY, f"port busy: {args.host}:{args.port}")
        return _fail(EXIT_CONFIG, f"config error: {exc}")
    finally:
        probe.close()
    app = create_app(data_dir, frontend_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eguard", description="Streaming true-discovery bounds from e-values"
    )
    parser.add_argument("--version", action="version", version=f"eguard {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the Monte-Carlo experiment grid")
    sim.add_argument("--n", type=int, default=None)
    sim.add_argument("--trials", type=int, default=None)
    sim.add_argument("--alpha", type=float, default=None)
    sim.add_argument("--mu-a", dest="mu_a", default=None, help="comma list of effect sizes")
    sim.add_argument("--pi-a", dest="pi_a", default=None, help="comma list of proportions")
    sim.add_argument(
        "--methods", default=None, help=f"comma list from: {','.join(METHODS)}"
    )
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--jobs", type=int, default=None)
    sim.add_argument("--out", default=None, help="output directory")
    sim.add_argument("--config", default=None, help="JSON config file (flags win)")
    sim.set_defaults(func=cmd_simulate)

    rep = sub.add_parser("replay", help="stream a JSONL evidence file through a guard")
    rep.add_argument("file", help="evidence JSONL path, or - for stdin")
    rep.add_argument("--method", default="seq-e-guard")
    rep.add_argument("--alpha", type=float, default=0.05)
    rep.add_argument("--gamma-n", dest="gamma_n", type=int, default=1000)
    rep.set_defaults(func=cmd_replay)

    orc = sub.add_parser("oracle", help="exact closed-testing bound for a subset")
    orc.add_argument("file", help="evidence JSONL path (at most 20 lines)")
    orc.add_argument("--family", default="product", choices=["product", "average", "weighted"])
    orc.add_argument("--alpha", type=float, default=0.05)
    orc.add_argument("--subset", default="", help="comma list of 1-based indices")
    orc.add_argument("--verbose", action="store_true")
    orc.set_defaults(func=cmd_oracle)

    srv = sub.add_parser("serve", help="run the session service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8717)
    srv.add_argument("--data-dir", dest="data_dir", default="./sessions")
    srv.add_argument("--frontend", default=None, help="static assets directory")
    srv.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
