/** Render functions for the console panels. Each takes plain state and
 * returns an HTML string; event wiring happens in main.ts through
 * data-action attributes, so the renderers stay pure and testable. */

import { bandMargin, feasibilityBadge } from "./feasibility.js";
import type {
  CampaignStateDoc,
  ConstraintBands,
  ProposalDoc,
  ResultFormRow,
  RowReportDoc,
  WhatIfResponse,
} from "./types.js";

export function esc(text: unknown): string {
  return String(text)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

const fmt = (v: number | null | undefined, digits = 2): string =>
  v == null ? "–" : v.toFixed(digits);

export function sessionPanel(state: CampaignStateDoc): string {
  const session = state.session;
  const current = session
    ? `<p class="session-current">session <b>${esc(session.session_id)}</b>,
       estimated offset <b data-field="delta-b">${fmt(session.delta_b)} V</b>
       (ignition at history row, readings
       ${session.ignition_voltages.map((v) => fmt(v)).join(", ")} V).
       Candidate voltages below already include this offset.</p>`
    : `<p class="session-current">no session yet: ignite the gun at an
       already-evaluated setting and enter the measured voltage.</p>`;
  const enabled =
    state.phase === "NeedsIgnition" || state.phase === "ReadyToPropose";
  return `<section id="session-panel">
  <h2>Session</h2>
  ${current}
  <form data-action="ignite" ${enabled ? "" : "hidden"}>
    <label>history row
      <input name="settings_index" type="number" min="0"
             max="${state.history.length - 1}" value="0"></label>
    <label>measured voltage(s), V
      <input name="voltage" type="text" placeholder="64.2 or 64.2,64.5"></label>
    <button type="submit">record ignition</button>
  </form>
</section>`;
}

export function batchPanel(
  state: CampaignStateDoc,
  bands: ConstraintBands,
): string {
  const pending = state.pending;
  if (!pending) {
    const action =
      state.phase === "ReadyToPropose"
        ? `<button data-action="propose">propose next batch</button>`
        : "";
    return `<section id="batch-panel"><h2>Batch</h2>
  <p>no pending batch.</p>${action}</section>`;
  }
  const names = Object.keys(bands);
  const header =
    `<tr><th></th><th>acq</th><th>FP</th><th>I</th><th>cost</th><th>V̂</th>` +
    names.map((n) => `<th>${esc(n)} (pred ± 2σ)</th>`).join("") +
    `<th>drop</th></tr>`;
  const rows = pending.proposal.candidates
    .map((c, i) => {
      const dropped = pending.dropped.includes(i);
      const cells = names
        .map((n) => {
          const mu = c.constraint_means[n] ?? NaN;
          const sd = c.constraint_sds[n] ?? NaN;
          const band = bands[n]!;
          const inBand = mu >= band[0] && mu <= band[1];
          return `<td class="${inBand ? "pred-in" : "pred-out"}">
            ${fmt(mu, 1)} ± ${fmt(2 * sd, 1)}
            <small>[${band[0]}, ${band[1]}]</small></td>`;
        })
        .join("");
      return `<tr data-candidate="${i}" class="${dropped ? "dropped" : ""}">
        <td>${i}</td><td>${esc(c.acquisition_used)}</td>
        <td>${fmt(c.fp, 3)}</td><td>${fmt(c.improvement, 2)}</td>
        <td>${fmt(c.cost, 1)}</td><td>${fmt(c.x[7] ?? null, 2)}</td>${cells}
        <td><button data-action="drop" data-index="${i}"
             ${dropped ? "disabled" : ""}>${dropped ? "dropped" : "drop"}</button></td>
      </tr>`;
    })
    .join("");
  return `<section id="batch-panel">
  <h2>Batch ${esc(pending.batch_id)}</h2>
  <table>${header}${rows}</table>
</section>`;
}

export function resultsPanel(
  state: CampaignStateDoc,
  bands: ConstraintBands,
  form: ResultFormRow[],
  reports: RowReportDoc[],
): string {
  const pending = state.pending;
  if (!pending) return `<section id="results-panel" hidden></section>`;
  const rows = form
    .map((row, i) => {
      if (pending.dropped.includes(i)) {
        return `<tr data-row="${i}" class="dropped">
          <td>${i}</td><td colspan="6">dropped by operator</td><td></td></tr>`;
      }
      const measurements = {
        microhardness_HV: row.microhardness_HV.trim()
          ? Number(row.microhardness_HV)
          : null,
        porosity_pct: row.porosity_pct.trim()
          ? Number(row.porosity_pct)
          : null,
      };
      const badge = feasibilityBadge(measurements, bands);
      const inputs = (
        [
          "microhardness_HV",
          "porosity_pct",
          "application_rate",
          "deposition_efficiency_pct",
          "measured_voltage_V",
        ] as const
      )
        .map(
          (f) => `<td><input data-row="${i}" data-field="${f}"
            value="${esc(row[f])}" inputmode="decimal"></td>`,
        )
        .join("");
      return `<tr data-row="${i}">
        <td>${i}</td>${inputs}
        <td><span class="badge badge-${badge}" data-badge="${i}">${badge}</span></td>
      </tr>`;
    })
    .join("");
  const reportList = reports
    .map(
      (r) =>
        `<li class="report-${r.status}">line ${r.line}: ${r.status} ${esc(r.message)}</li>`,
    )
    .join("");
  return `<section id="results-panel">
  <h2>Results entry</h2>
  <table><tr><th></th><th>microhardness HV</th><th>porosity %</th>
    <th>application rate</th><th>deposition eff. %</th>
    <th>measured V</th><th>feasibility</th></tr>${rows}</table>
  <button data-action="whatif">preview what-if</button>
  <button data-action="submit-results">submit results</button>
  <ul id="row-reports">${reportList}</ul>
</section>`;
}

export function dashboard(state: CampaignStateDoc): string {
  const eps = state.config.optimizer.epsilon;
  const trajectory = state.trace
    .map((b) => b.incumbent_cost_after)
    .filter((v): v is number => v != null);
  const points = state.history.map((e) => ({
    h: e.measurements["microhardness_HV"] ?? NaN,
    p: e.measurements["porosity_pct"] ?? NaN,
    feasible: e.feasible,
  }));
  const lastBatch = state.trace[state.trace.length - 1];
  const belowEps = lastBatch
    ? lastBatch.proposal.fip_values.filter((v) => v < eps).length
    : 0;
  const needed = lastBatch
    ? Math.ceil(lastBatch.proposal.fip_values.length / 2)
    : 0;
  const terminated = state.phase === "Terminated";
  const inc = state.incumbent;
  return `<section id="dashboard">
  <h2>Campaign ${esc(state.id)}</h2>
  <p>phase <b data-field="phase">${esc(state.phase)}</b>,
     ${state.history.length} experiments,
     incumbent <b data-field="incumbent">${
       inc.present ? fmt(inc.cost, 2) : "none"
     }</b></p>
  <p data-field="termination" class="${terminated ? "terminated" : ""}">
    termination: ${belowEps}/${needed || "?"} of the last batch below
    ε = ${eps}${terminated ? " — terminated" : ""}</p>
  ${costSparkline(trajectory)}
  ${outputScatter(points, state.config.constraints)}
</section>`;
}

function costSparkline(costs: number[]): string {
  if (costs.length === 0) {
    return `<p id="cost-trajectory">no completed batches yet.</p>`;
  }
  const w = 260;
  const h = 60;
  const lo = Math.min(...costs);
  const hi = Math.max(...costs);
  const span = hi - lo || 1;
  const pts = costs
    .map((c, i) => {
      const x = costs.length === 1 ? w / 2 : (i / (costs.length - 1)) * w;
      const y = h - ((c - lo) / span) * (h - 8) - 4;
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
  return `<figure id="cost-trajectory">
   <figcaption>incumbent cost per batch
     (${costs.map((c) => c.toFixed(1)).join(" → ")})</figcaption>
   <svg viewBox="0 0 ${w} ${h}" width="${w}" height="${h}" role="img">
     <polyline fill="none" stroke="currentColor" points="${pts}"/></svg>
</figure>`;
}

function outputScatter(
  points: { h: number; p: number; feasible: boolean }[],
  bands: ConstraintBands,
): string {
  const hBand = bands["microhardness_HV"];
  const pBand = bands["porosity_pct"];
  if (!hBand || !pBand || points.length === 0) {
    return `<p id="output-scatter">no measurements to plot.</p>`;
  }
  const w = 260;
  const h = 180;
  const hs = points.map((pt) => pt.h);
  const ps = points.map((pt) => pt.p);
  const hLo = Math.min(...hs, hBand[0]);
  const hHi = Math.max(...hs, hBand[1]);
  const pLo = Math.min(...ps, pBand[0]);
  const pHi = Math.max(...ps, pBand[1]);
  const sx = (v: number): number => ((v - hLo) / (hHi - hLo || 1)) * (w - 10) + 5;
  const sy = (v: number): number =>
    h - (((v - pLo) / (pHi - pLo || 1)) * (h - 10) + 5);
  const rect = `<rect x="${sx(hBand[0]).toFixed(1)}" y="${sy(pBand[1]).toFixed(1)}"
    width="${(sx(hBand[1]) - sx(hBand[0])).toFixed(1)}"
    height="${(sy(pBand[0]) - sy(pBand[1])).toFixed(1)}"
    class="band" fill="none" stroke="currentColor" stroke-dasharray="3 2"/>`;
  const dots = points
    .map(
      (pt) => `<circle cx="${sx(pt.h).toFixed(1)}" cy="${sy(pt.p).toFixed(1)}"
        r="2.4" class="${pt.feasible ? "dot-feasible" : "dot-infeasible"}"/>`,
    )
    .join("");
  return `<figure id="output-scatter">
  <figcaption>microhardness vs porosity (dashed box: feasibility bands,
    ${points.filter((pt) => pt.feasible).length} feasible)</figcaption>
  <svg viewBox="0 0 ${w} ${h}" width="${w}" height="${h}" role="img">
    ${rect}${dots}</svg>
</figure>`;
}

export function whatIfPanel(result: WhatIfResponse | null): string {
  if (!result) return `<section id="whatif-panel" hidden></section>`;
  const preview = result.next_batch_preview;
  const previewText = result.terminated
    ? "the campaign would terminate"
    : preview
      ? `next batch would select ${preview.candidates.length} candidates, ` +
        `best FP ${Math.max(...preview.candidates.map((c) => c.fp)).toFixed(3)}`
      : "no further batch";
  return `<section id="whatif-panel">
  <h2>What-if preview</h2>
  <p>hypothetical incumbent:
    <b data-field="whatif-incumbent">${
      result.incumbent_present ? fmt(result.incumbent_cost, 2) : "none"
    }</b></p>
  <p data-field="whatif-next">${esc(previewText)}</p>
  <button data-action="close-whatif">close</button>
</section>`;
}

export function conflictBanner(conflict: boolean): string {
  if (!conflict) return "";
  return `<div id="conflict-banner" role="alert">
    this campaign changed elsewhere — <button data-action="reload">reload</button>
  </div>`;
}

export function renderConsole(
  state: CampaignStateDoc | null,
  opts: {
    conflict: boolean;
    form: ResultFormRow[];
    reports: RowReportDoc[];
    whatIf: WhatIfResponse | null;
    error: string | null;
  },
): string {
  if (!state) return `<p>loading…</p>`;
  const bands = state.config.constraints;
  return `${conflictBanner(opts.conflict)}
${opts.error ? `<div id="error-banner" role="alert">${esc(opts.error)}</div>` : ""}
${dashboard(state)}
${sessionPanel(state)}
${batchPanel(state, bands)}
${resultsPanel(state, bands, opts.form, opts.reports)}
${whatIfPanel(opts.whatIf)}`;
}

export { bandMargin };
