/** HTML fragments for the dashboard, as pure string templates. */

import type { SessionView } from "./viewModel.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderSummary(view: SessionView): string {
  const tdp = view.sSize > 0 ? (view.d / view.sSize).toFixed(3) : "0.000";
  return (
    `<span class="stat">t = ${view.t}</span>` +
    `<span class="stat">|S| = ${view.sSize}</span>` +
    `<span class="stat">d = ${view.d}</span>` +
    `<span class="stat">TDP &ge; ${tdp}</span>`
  );
}

export function renderTable(view: SessionView): string {
  if (view.rows.length === 0) {
    return '<p class="empty">No evidence yet.</p>';
  }
  const body = view.rows
    .map((row) => {
      const removed =
        row.removedIndex !== null ? `removed #${row.removedIndex}` : "";
      const cls = row.removedIndex !== null ? ' class="crossing"' : "";
      return (
        `<tr${cls}><td>${row.t}</td>` +
        `<td>${esc(row.logE)}</td>` +
        `<td>${row.included ? "yes" : "no"}</td>` +
        `<td><span class="badge badge-${row.badge}">${row.badge}</span></td>` +
        `<td>${row.d}</td>` +
        `<td>${row.tdpBound.toFixed(3)}</td>` +
        `<td>${removed}</td></tr>`
      );
    })
    .join("");
  return (
    "<table><thead><tr>" +
    "<th>t</th><th>log e</th><th>in S</th><th>set</th>" +
    "<th>d</th><th>TDP bound</th><th></th>" +
    `</tr></thead><tbody>${body}</tbody></table>`
  );
}

export function renderDCurve(view: SessionView): string {
  if (view.dCurve.length === 0) return "";
  const max = Math.max(1, ...view.dCurve);
  return view.dCurve
    .map((d, i) => {
      const h = Math.round((d / max) * 60);
      return `<div class="bar" data-t="${i + 1}" data-d="${d}" style="height:${h + 2}px" title="t=${i + 1}, d=${d}"></div>`;
    })
    .join("");
}

export function renderPending(view: SessionView): string {
  if (!view.pendingPreview) {
    return '<p class="empty">No pending evidence.</p>';
  }
  return `<p class="preview">${esc(view.pendingPreview)}</p>`;
}
