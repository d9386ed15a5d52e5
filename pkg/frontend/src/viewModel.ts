/** Pure derivation of everything the dashboard renders.
 *
 * The view is a function of the trace page returned by the server; the only
 * client-side arithmetic is display bookkeeping (badge assignment from the
 * server's query/excluded sets and thresholds it already applied).
 */

import type {
  DecisionPayload,
  EvidencePayload,
  SessionEvent,
  TracePage,
} from "./types.js";

export type Badge = "A" | "U" | "excluded" | "skipped";

export interface IndexView {
  t: number;
  logE: string;
  included: boolean;
  badge: Badge;
  d: number;
  tdpBound: number;
  removedIndex: number | null;
}

export interface SessionView {
  t: number;
  d: number;
  sSize: number;
  dCurve: number[];
  tdpCurve: number[];
  rows: IndexView[];
  pending: EvidencePayload | null;
  pendingPreview: string | null;
  stateHash: string;
  canSubmitEvidence: boolean;
  canDecide: boolean;
}

function decisionEvents(events: SessionEvent[]): DecisionPayload[] {
  return events
    .filter((ev) => ev.kind === "decision")
    .map((ev) => ev.payload as unknown as DecisionPayload);
}

/** Badge for one index given the server's membership sets.
 *
 * Non-included indices get a U badge when the server kept them in the
 * running statistic, signalled by a below-one e-value for the product
 * guard (the server applied the actual retention rule; this mirrors it
 * for display).
 */
function badgeFor(
  t: number,
  decision: DecisionPayload,
  querySet: Set<number>,
  excluded: Set<number>,
): Badge {
  if (excluded.has(t)) return "excluded";
  if (querySet.has(t)) return "A";
  if (parseFloat(decision.effective_log_e) < 0) return "U";
  return "skipped";
}

export function buildSessionView(page: TracePage): SessionView {
  const decisions = decisionEvents(page.events);
  const querySet = new Set(page.state.query_set);
  const excluded = new Set(page.state.excluded);
  const rows: IndexView[] = page.trace.map((row, i) => {
    const decision = decisions[i];
    return {
      t: row.t,
      logE: decision ? decision.effective_log_e : "",
      included: row.included,
      badge: decision
        ? badgeFor(row.t, decision, querySet, excluded)
        : row.included
          ? "A"
          : "skipped",
      d: row.d,
      tdpBound: row.tdp_bound,
      removedIndex: decision ? decision.removed_index : null,
    };
  });
  const pending = page.state.pending;
  let pendingPreview: string | null = null;
  if (pending) {
    const parts = [`log e = ${pending.log_e}`];
    if (pending.preview.log_m !== undefined) {
      parts.push(`cutoff log m = ${pending.preview.log_m}`);
    }
    if (pending.preview.boost_factor !== undefined) {
      parts.push(`boost factor = ${pending.preview.boost_factor}`);
    }
    pendingPreview = parts.join(", ");
  }
  return {
    t: page.state.t,
    d: page.state.d,
    sSize: page.state.s_size,
    dCurve: rows.map((r) => r.d),
    tdpCurve: rows.map((r) => r.tdpBound),
    rows,
    pending,
    pendingPreview,
    stateHash: page.state.state_hash,
    canSubmitEvidence: pending === null,
    canDecide: pending !== null,
  };
}

/** d-column of the server's CSV export, for snapshot comparison. */
export function dCurveFromCsv(csv: string): number[] {
  const lines = csv.trim().split("\n");
  const header = lines[0].split(",");
  const dCol = header.indexOf("d");
  if (dCol < 0) throw new Error("CSV export missing 'd' column");
  return lines.slice(1).map((line) => parseInt(line.split(",")[dCol], 10));
}

export function emptySessionView(): SessionView {
  return {
    t: 0,
    d: 0,
    sSize: 0,
    dCurve: [],
    tdpCurve: [],
    rows: [],
    pending: null,
    pendingPreview: null,
    stateHash: "",
    canSubmitEvidence: true,
    canDecide: false,
  };
}
