/** Wire types of the session service JSON API.
 *
 * Log-domain numbers (`log_e`, `log_m`, `log_statistic`, `boost_factor`)
 * arrive as decimal strings and are kept as strings except for display.
 */

export interface SessionSummary {
  id: string;
  created: string;
  method: string;
  alpha: number;
  t: number;
  d: number;
  s_size: number;
  pending: boolean;
}

export interface EvidencePreview {
  log_m?: string;
  boost_factor?: string;
}

export interface EvidencePayload {
  raw: Record<string, unknown>;
  log_e: string;
  preview: EvidencePreview;
}

export interface DecisionPayload {
  include: boolean;
  effective_log_e: string;
  d: number;
  removed_index: number | null;
  log_statistic: string;
}

export interface SessionEvent {
  seq: number;
  ts: string;
  kind: "created" | "evidence" | "decision" | "bound_change" | "whatif";
  payload: Record<string, unknown>;
  crc: string;
}

export interface TraceRow {
  t: number;
  included: boolean;
  d: number;
  s_size: number;
  tdp_bound: number;
  log_statistic: string;
}

export interface SessionState {
  t: number;
  d: number;
  s_size: number;
  query_set: number[];
  excluded: number[];
  pending: EvidencePayload | null;
  state_hash: string;
}

export interface TracePage {
  events: SessionEvent[];
  next_since: number;
  trace: TraceRow[];
  state: SessionState;
}

export interface ApiErrorBody {
  error: string;
}
