/** Console state: a cached snapshot of the server state plus transient UI
 * flags. Every mutation goes through the service; a revision conflict
 * flips `conflict` so the views can show a reload prompt instead of
 * silently overwriting someone else's change. */

import { ApiClient, RevisionConflictError } from "./api.js";
import type {
  CampaignStateDoc,
  ResultFormRow,
  RowReportDoc,
  WhatIfResponse,
} from "./types.js";
import { validateResultRow } from "./validation.js";

export type Listener = () => void;

export class ConsoleStore {
  state: CampaignStateDoc | null = null;
  conflict = false;
  busy = false;
  lastError: string | null = null;
  lastReports: RowReportDoc[] = [];
  whatIfResult: WhatIfResponse | null = null;

  private listeners: Listener[] = [];

  constructor(
    readonly api: ApiClient,
    readonly campaignId: string,
  ) {}

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  get revision(): number {
    return this.state?.revision ?? 0;
  }

  async refresh(): Promise<void> {
    this.state = await this.api.getState(this.campaignId);
    this.conflict = false;
    this.emit();
  }

  private async mutate<T>(op: () => Promise<T>): Promise<T | null> {
    this.busy = true;
    this.lastError = null;
    this.emit();
    try {
      const out = await op();
      await this.refresh();
      return out;
    } catch (err) {
      if (err instanceof RevisionConflictError) {
        this.conflict = true;
      } else {
        this.lastError = err instanceof Error ? err.message : String(err);
      }
      this.emit();
      return null;
    } finally {
      this.busy = false;
      this.emit();
    }
  }

  ignite(settingsIndex: number, voltage: number | number[]) {
    return this.mutate(() =>
      this.api.ignite(this.campaignId, this.revision, {
        settings_index: settingsIndex,
        voltage,
      }),
    );
  }

  propose() {
    return this.mutate(() => this.api.propose(this.campaignId, this.revision));
  }

  dropCandidate(index: number) {
    return this.mutate(() =>
      this.api.dropCandidate(this.campaignId, index, this.revision),
    );
  }

  /** Validate and submit the results form; invalid rows never leave the
   * client. Returns per-row reports from the server (or null on
   * conflict). */
  async submitResults(rows: ResultFormRow[]) {
    const pending = this.state?.pending;
    if (!pending) {
      this.lastError = "no pending batch";
      this.emit();
      return null;
    }
    const payloads: Record<string, string>[] = [];
    for (const row of rows) {
      const v = validateResultRow(
        row,
        pending.proposal.candidates.length,
        pending.batch_id,
      );
      if (!v.ok) {
        this.lastError = `row for candidate ${row.candidate_index} is invalid`;
        this.emit();
        return null;
      }
      payloads.push(v.payload);
    }
    const out = await this.mutate(() =>
      this.api.ingest(this.campaignId, this.revision, payloads),
    );
    if (out) this.lastReports = out.reports;
    this.emit();
    return out;
  }

  /** What-if preview: server-computed, never mutates the campaign. */
  async previewWhatIf(rows: ResultFormRow[]): Promise<WhatIfResponse | null> {
    const pending = this.state?.pending;
    if (!pending) return null;
    const payloads = rows.map(
      (row) =>
        validateResultRow(
          row,
          pending.proposal.candidates.length,
          pending.batch_id,
        ).payload,
    );
    this.whatIfResult = await this.api.whatIf(this.campaignId, payloads);
    this.emit();
    return this.whatIfResult;
  }

  clearWhatIf(): void {
    this.whatIfResult = null;
    this.emit();
  }

  finish() {
    return this.mutate(() => this.api.finish(this.campaignId, this.revision));
  }
}
