#!/usr/bin/env python3
"""Walk the five-e-value demo stream through a persisted session.

Shows the full lifecycle: create, submit evidence, decide, what-if, export.

Usage:
    python3 scripts/demo_session.py [data_dir]
"""

from __future__ import annotations

import sys

from eguard.service import ProcedureSpec, SessionStore


def main() -> None:
    data_dir = sys.argv[1] if len(sys.argv) > 1 else "./demo-sessions"
    store = SessionStore(data_dir)
    session = store.create(ProcedureSpec(method="seq-e-guard", alpha=0.05))
    print(f"session {session.id} (alpha=0.05)")
    for e in [5.0, 4.0, 0.8, 0.5, 14.0]:
        session.submit_evidence({"e": e})
        outcome = session.decide(include=True)
        removed = outcome["removed_index"]
        note = f", removed index {removed}" if removed else ""
        print(f"  t={outcome['t']}: e={e:<4} -> d={outcome['d']}{note}")
    what_if = session.what_if([1, 2, 5])
    print(f"what-if on {{1, 2, 5}}: d = {what_if['d']}")
    print()
    print(session.export_csv())


if __name__ == "__main__":
    main()
