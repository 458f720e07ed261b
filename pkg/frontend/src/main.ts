/** Browser bootstrap: wires the store to the DOM. The page is addressed
 * as index.html?campaign=<id>&api=<base-url>. */

import { ApiClient } from "./api.js";
import { feasibilityBadge } from "./feasibility.js";
import { ConsoleStore } from "./store.js";
import type { ResultFormRow } from "./types.js";
import { emptyRow } from "./validation.js";
import { renderConsole } from "./views.js";

function formFromState(store: ConsoleStore, prev: ResultFormRow[]): ResultFormRow[] {
  const pending = store.state?.pending;
  if (!pending) return [];
  const n = pending.proposal.candidates.length;
  const rows: ResultFormRow[] = [];
  for (let i = 0; i < n; i++) {
    rows.push(prev[i] ?? emptyRow(i));
  }
  return rows;
}

export function mountConsole(root: HTMLElement, store: ConsoleStore): void {
  let form: ResultFormRow[] = [];

  const render = (): void => {
    form = formFromState(store, form);
    root.innerHTML = renderConsole(store.state, {
      conflict: store.conflict,
      form,
      reports: store.lastReports,
      whatIf: store.whatIfResult,
      error: store.lastError,
    });
  };

  store.subscribe(render);

  root.addEventListener("input", (ev) => {
    const el = ev.target as HTMLInputElement;
    const rowIdx = el.dataset["row"];
    const field = el.dataset["field"];
    if (rowIdx == null || field == null) return;
    const row = form[Number(rowIdx)];
    if (!row) return;
    (row as unknown as Record<string, string>)[field] = el.value;
    // refresh only the badge for this row; full re-render would lose focus
    const badge = root.querySelector(`[data-badge="${rowIdx}"]`);
    if (badge && store.state) {
      const bands = store.state.config.constraints;
      const h = row.microhardness_HV.trim() ? Number(row.microhardness_HV) : null;
      const p = row.porosity_pct.trim() ? Number(row.porosity_pct) : null;
      const value = feasibilityBadge(
        { microhardness_HV: h, porosity_pct: p },
        bands,
      );
      badge.textContent = value;
      badge.className = `badge badge-${value}`;
    }
  });

  root.addEventListener("click", (ev) => {
    const el = (ev.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!el) return;
    const action = el.dataset["action"];
    if (action === "propose") void store.propose();
    else if (action === "drop") {
      void store.dropCandidate(Number(el.dataset["index"]));
    } else if (action === "submit-results") void store.submitResults(form);
    else if (action === "whatif") void store.previewWhatIf(form);
    else if (action === "close-whatif") store.clearWhatIf();
    else if (action === "reload") void store.refresh();
  });

  root.addEventListener("submit", (ev) => {
    const formEl = (ev.target as HTMLElement).closest<HTMLFormElement>(
      "[data-action=ignite]",
    );
    if (!formEl) return;
    ev.preventDefault();
    const data = new FormData(formEl);
    const idx = Number(data.get("settings_index") ?? 0);
    const voltText = String(data.get("voltage") ?? "");
    const readings = voltText
      .split(",")
      .map((v) => Number(v.trim()))
      .filter((v) => Number.isFinite(v));
    if (readings.length === 0) return;
    void store.ignite(idx, readings.length === 1 ? readings[0]! : readings);
  });

  void store.refresh();
}

declare global {
  interface Window {
    sprayoptConsole?: ConsoleStore;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const params = new URLSearchParams(window.location.search);
  const api = params.get("api") ?? "";
  const campaign = params.get("campaign");
  const root = document.getElementById("app")!;
  if (!campaign) {
    root.innerHTML = "<p>missing ?campaign=&lt;id&gt; parameter</p>";
  } else {
    const store = new ConsoleStore(new ApiClient(api), campaign);
    window.sprayoptConsole = store;
    mountConsole(root as HTMLElement, store);
  }
}
