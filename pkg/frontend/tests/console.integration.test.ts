/** Scripted round-trip against the live campaign service: the console
 * store drives ignite -> review/drop -> ingest -> dashboard update, and
 * every rendered display is checked against fresh GET-state responses. */

import { Window } from "happy-dom";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { feasibilityBadge } from "../src/feasibility.js";
import { ConsoleStore } from "../src/store.js";
import type { ResultFormRow } from "../src/types.js";
import { emptyRow } from "../src/validation.js";
import { renderConsole } from "../src/views.js";
import { type Harness, loadFixtureCsv, startService } from "./service_harness.js";

let harness: Harness;
let api: ApiClient;

beforeAll(async () => {
  harness = await startService(8931);
  api = new ApiClient(harness.baseUrl);
}, 120_000);

afterAll(() => {
  harness?.stop();
});

function renderToDocument(store: ConsoleStore): Document {
  const win = new Window();
  win.document.body.innerHTML = renderConsole(store.state, {
    conflict: store.conflict,
    form: [],
    reports: store.lastReports,
    whatIf: store.whatIfResult,
    error: store.lastError,
  });
  return win.document as unknown as Document;
}

function formFor(
  store: ConsoleStore,
  values: { h: number; p: number; v: number }[],
): ResultFormRow[] {
  const n = store.state!.pending!.proposal.candidates.length;
  const rows: ResultFormRow[] = [];
  for (let i = 0; i < n; i++) {
    const row = emptyRow(i);
    if (store.state!.pending!.dropped.includes(i)) continue;
    const v = values[rows.length] ?? values[values.length - 1]!;
    row.microhardness_HV = String(v.h);
    row.porosity_pct = String(v.p);
    row.measured_voltage_V = String(v.v);
    rows.push(row);
  }
  return rows;
}

describe("console round-trip against the live service", () => {
  it("drives ignite, review/drop, ingest and the dashboard", async () => {
    const created = await api.createCampaign({
      id: "console-rt",
      seed: 11,
      initial_csv: loadFixtureCsv(),
      config: {
        candidate_count: 400,
        optimizer: { batch_size: 4 },
      },
    });
    expect(created.phase).toBe("NeedsIgnition");

    const store = new ConsoleStore(api, "console-rt");
    await store.refresh();
    let doc = renderToDocument(store);
    expect(doc.querySelector('[data-field="phase"]')!.textContent).toBe(
      "NeedsIgnition",
    );

    // ignite at an evaluated history row
    await store.ignite(0, 64.2);
    expect(store.state!.phase).toBe("ReadyToPropose");
    doc = renderToDocument(store);
    expect(
      doc.querySelector('[data-field="delta-b"]')!.textContent,
    ).toContain(store.state!.session!.delta_b.toFixed(2));

    // propose and review the batch
    await store.propose();
    expect(store.state!.phase).toBe("AwaitingResults");
    const pending = store.state!.pending!;
    expect(pending.proposal.candidates.length).toBe(4);
    doc = renderToDocument(store);
    expect(doc.querySelectorAll("#batch-panel tr[data-candidate]").length).toBe(
      4,
    );

    // operator drops a near-duplicate candidate
    await store.dropCandidate(1);
    expect(store.state!.pending!.dropped).toContain(1);

    // enter three lab results: two feasible, one not
    const rows = formFor(store, [
      { h: 660, p: 7.0, v: 64.5 },
      { h: 700, p: 7.5, v: 64.8 },
      { h: 648, p: 7.9, v: 64.1 },
    ]);
    const out = await store.submitResults(rows);
    expect(out).not.toBeNull();
    expect(out!.reports.every((r) => r.status === "accepted")).toBe(true);

    // dashboard reflects the server state exactly
    const serverState = await api.getState("console-rt");
    expect(store.state!.revision).toBe(serverState.revision);
    expect(serverState.phase).toMatch(/ReadyToPropose|Terminated/);
    expect(serverState.incumbent.present).toBe(true);
    doc = renderToDocument(store);
    expect(doc.querySelector('[data-field="phase"]')!.textContent).toBe(
      serverState.phase,
    );
    expect(
      doc.querySelector('[data-field="incumbent"]')!.textContent,
    ).toBe(serverState.incumbent.cost!.toFixed(2));
    // the two feasible results must show as feasible dots
    const feasibleDots = doc.querySelectorAll(".dot-feasible").length;
    expect(feasibleDots).toBe(
      serverState.history.filter((e) => e.feasible).length,
    );
  });

  it("what-if preview leaves the persisted campaign untouched", async () => {
    await api.createCampaign({
      id: "console-whatif",
      seed: 12,
      initial_csv: loadFixtureCsv(),
      config: { candidate_count: 400, optimizer: { batch_size: 3 } },
    });
    const store = new ConsoleStore(api, "console-whatif");
    await store.refresh();
    await store.ignite(0, 64.0);
    await store.propose();

    const hashBefore = harness.campaignFileHash("console-whatif");
    const revBefore = store.state!.revision;

    const rows = formFor(store, [
      { h: 655, p: 7.2, v: 64.2 },
      { h: 661, p: 6.8, v: 64.4 },
      { h: 645, p: 7.7, v: 63.9 },
    ]);
    const preview = await store.previewWhatIf(rows);
    expect(preview).not.toBeNull();
    expect(preview!.incumbent_present).toBe(true);

    // render, then close the panel: nothing persisted may have changed
    let doc = renderToDocument(store);
    expect(doc.getElementById("whatif-panel")!.hasAttribute("hidden")).toBe(
      false,
    );
    store.clearWhatIf();
    doc = renderToDocument(store);
    expect(doc.getElementById("whatif-panel")!.hasAttribute("hidden")).toBe(
      true,
    );

    expect(harness.campaignFileHash("console-whatif")).toBe(hashBefore);
    const serverState = await api.getState("console-whatif");
    expect(serverState.revision).toBe(revBefore);
    expect(serverState.pending).not.toBeNull();
    expect(serverState.incumbent.present).toBe(false);
  });

  it("a stale revision surfaces as a reload prompt, not a silent write",
    async () => {
      await api.createCampaign({
        id: "console-conflict",
        seed: 13,
        initial_csv: loadFixtureCsv(),
        config: { candidate_count: 400, optimizer: { batch_size: 3 } },
      });
      const store = new ConsoleStore(api, "console-conflict");
      await store.refresh();
      // another operator ignites behind this console's back
      await api.ignite("console-conflict", store.revision, {
        settings_index: 0,
        voltage: 64.0,
      });
      await store.ignite(0, 64.0); // stale revision now
      expect(store.conflict).toBe(true);
      const win = new Window();
      win.document.body.innerHTML = renderConsole(store.state, {
        conflict: store.conflict,
        form: [],
        reports: [],
        whatIf: null,
        error: null,
      });
      expect(win.document.getElementById("conflict-banner")).not.toBeNull();
      await store.refresh();
      expect(store.conflict).toBe(false);
    });
});

describe("client/server feasibility agreement", () => {
  it("50 randomized result rows get identical badges on both sides",
    async () => {
      let seed = 987654321;
      const rand = () => {
        seed = (seed * 1103515245 + 12345) % 2147483648;
        return seed / 2147483648;
      };
      let compared = 0;
      // a campaign may legitimately terminate early; keep comparing on a
      // fresh one until 50 rows went through
      for (let c = 0; compared < 50 && c < 5; c++) {
        const id = `console-agree-${c}`;
        await api.createCampaign({
          id,
          seed: 14 + c,
          initial_csv: loadFixtureCsv(),
          config: { candidate_count: 400, optimizer: { batch_size: 10 } },
        });
        const store = new ConsoleStore(api, id);
        await store.refresh();
        await store.ignite(0, 64.0);
        const bands = (await api.getConfig(id)).constraints;

        while (compared < 50 && store.state!.phase === "ReadyToPropose") {
          await store.propose();
          const pending = store.state!.pending!;
          const rows: ResultFormRow[] = [];
          const clientBadges: string[] = [];
          for (let i = 0; i < pending.proposal.candidates.length; i++) {
            const row = emptyRow(i);
            const h = 600 + rand() * 100; // straddles [635, 675]
            const p = 5 + rand() * 4; // straddles [6, 8.2]
            row.microhardness_HV = String(h);
            row.porosity_pct = String(p);
            row.measured_voltage_V = String(63 + rand() * 3);
            rows.push(row);
            clientBadges.push(
              feasibilityBadge(
                { microhardness_HV: h, porosity_pct: p },
                bands,
              ),
            );
          }
          const before = store.state!.history.length;
          const out = await store.submitResults(rows);
          expect(out).not.toBeNull();
          const after = await api.getState(id);
          const appended = after.history.slice(before);
          expect(appended.length).toBe(rows.length);
          for (let i = 0; i < appended.length; i++) {
            const serverBadge = appended[i]!.feasible
              ? "feasible"
              : "infeasible";
            expect(clientBadges[i], `row ${compared + i}`).toBe(serverBadge);
          }
          compared += appended.length;
        }
      }
      expect(compared).toBeGreaterThanOrEqual(50);
    });
});
