/** Dashboard wiring: one polling loop per open session, form handlers. */

import { ApiError, SessionApi } from "./api.js";
import { renderDCurve, renderPending, renderSummary, renderTable } from "./render.js";
import { buildSessionView, emptySessionView } from "./viewModel.js";
import type { SessionView } from "./viewModel.js";

const POLL_MS = 1000;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class Dashboard {
  private api = new SessionApi("");
  private sessionId: string | null = null;
  private view: SessionView = emptySessionView();
  private timer: number | null = null;
  private inFlight = false;

  start(): void {
    el<HTMLFormElement>("create-form").addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.createSession();
    });
    el<HTMLFormElement>("evidence-form").addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.submitEvidence();
    });
    el<HTMLButtonElement>("decide-include").addEventListener("click", () => {
      void this.decide(true);
    });
    el<HTMLButtonElement>("decide-exclude").addEventListener("click", () => {
      void this.decide(false);
    });
    el<HTMLFormElement>("whatif-form").addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.runWhatIf();
    });
    this.render();
  }

  private setError(message: string): void {
    el("error-bar").textContent = message;
  }

  private async guarded(op: () => Promise<void>): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    this.render();
    try {
      await op();
      this.setError("");
    } catch (err) {
      // Surface 409/422 and validation messages inline; typed input stays.
      this.setError(err instanceof ApiError ? err.message : String(err));
    } finally {
      this.inFlight = false;
      await this.refresh();
    }
  }

  private async createSession(): Promise<void> {
    await this.guarded(async () => {
      const method = el<HTMLSelectElement>("spec-method").value;
      const alpha = parseFloat(el<HTMLInputElement>("spec-alpha").value);
      const transform = el<HTMLSelectElement>("spec-transform").value;
      const summary = await this.api.createSession({ method, alpha, transform });
      this.sessionId = summary.id;
      el("session-id").textContent = summary.id;
      if (this.timer !== null) window.clearInterval(this.timer);
      this.timer = window.setInterval(() => void this.refresh(), POLL_MS);
    });
  }

  private evidenceBody(): Record<string, unknown> {
    const kind = el<HTMLSelectElement>("evidence-kind").value;
    const value = parseFloat(el<HTMLInputElement>("evidence-value").value);
    return kind === "p" ? { p: value } : { e: value };
  }

  private async submitEvidence(): Promise<void> {
    if (!this.sessionId) return;
    const id = this.sessionId;
    await this.guarded(async () => {
      await this.api.submitEvidence(id, this.evidenceBody());
    });
  }

  private async decide(include: boolean): Promise<void> {
    if (!this.sessionId) return;
    const id = this.sessionId;
    await this.guarded(async () => {
      await this.api.decide(id, include);
    });
  }

  private async runWhatIf(): Promise<void> {
    if (!this.sessionId) return;
    const id = this.sessionId;
    await this.guarded(async () => {
      const raw = el<HTMLInputElement>("whatif-subset").value;
      const subset = raw
        .split(",")
        .map((s) => s.trim())
        .filter((s) => s.length > 0)
        .map((s) => parseInt(s, 10));
      const result = await this.api.whatIf(id, subset);
      el("whatif-result").textContent = `d({${subset.join(", ")}}) ≥ ${result.d}`;
    });
  }

  private async refresh(): Promise<void> {
    if (!this.sessionId) {
      this.render();
      return;
    }
    try {
      const page = await this.api.trace(this.sessionId, 0);
      this.view = buildSessionView(page);
      this.setError("");
    } catch (err) {
      this.setError(err instanceof ApiError ? err.message : String(err));
    }
    this.render();
  }

  private render(): void {
    const view = this.view;
    el("summary").innerHTML = renderSummary(view);
    el("trace-table").innerHTML = renderTable(view);
    el("d-curve").innerHTML = renderDCurve(view);
    el("pending").innerHTML = renderPending(view);
    const haveSession = this.sessionId !== null;
    el<HTMLButtonElement>("evidence-submit").disabled =
      !haveSession || !view.canSubmitEvidence || this.inFlight;
    el<HTMLButtonElement>("decide-include").disabled =
      !haveSession || !view.canDecide || this.inFlight;
    el<HTMLButtonElement>("decide-exclude").disabled =
      !haveSession || !view.canDecide || this.inFlight;
    el<HTMLButtonElement>("whatif-submit").disabled = !haveSession || this.inFlight;
  }
}

new Dashboard().start();
