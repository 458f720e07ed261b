/** Typed client for the campaign service. The console holds no
 * authoritative state: every mutation echoes the revision it was computed
 * against, and a 409 surfaces as RevisionConflictError so the UI can
 * prompt for a reload. */

import type {
  CampaignConfigDoc,
  CampaignStateDoc,
  IngestResponse,
  Phase,
  ProposalDoc,
  WhatIfResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export class RevisionConflictError extends ApiError {
  constructor(message: string) {
    super(409, message);
  }
}

async function parseError(res: Response): Promise<never> {
  let detail = res.statusText;
  try {
    const body = (await res.json()) as { detail?: unknown };
    if (typeof body.detail === "string") detail = body.detail;
    else if (body.detail) detail = JSON.stringify(body.detail);
  } catch {
    /* non-JSON error body */
  }
  if (res.status === 409) throw new RevisionConflictError(detail);
  throw new ApiError(res.status, detail);
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(
    path: string,
    init?: RequestInit,
  ): Promise<T> {
    const res = await fetch(`${this.baseUrl}${path}`, init);
    if (!res.ok) await parseError(res);
    return (await res.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  createCampaign(req: {
    id?: string;
    seed?: number;
    initial_csv: string;
    config?: object;
  }): Promise<{ id: string; revision: number; phase: Phase }> {
    return this.post("/campaigns", req);
  }

  getState(id: string): Promise<CampaignStateDoc> {
    return this.request(`/campaigns/${id}`);
  }

  getConfig(id: string): Promise<CampaignConfigDoc> {
    return this.request(`/campaigns/${id}/config`);
  }

  ignite(
    id: string,
    revision: number,
    req: { settings?: number[]; settings_index?: number; voltage: number | number[] },
  ): Promise<{ delta_b: number; session_id: string; revision: number; phase: Phase }> {
    return this.post(`/campaigns/${id}/session`, { revision, ...req });
  }

  propose(
    id: string,
    revision: number,
  ): Promise<{ batch_id: string; proposal: ProposalDoc; revision: number; phase: Phase }> {
    return this.post(`/campaigns/${id}/batch`, { revision });
  }

  dropCandidate(
    id: string,
    index: number,
    revision: number,
  ): Promise<{ dropped: number[]; revision: number; phase: Phase }> {
    return this.post(`/campaigns/${id}/batch/${index}/drop`, { revision });
  }

  ingest(
    id: string,
    revision: number,
    rows: Record<string, string>[],
  ): Promise<IngestResponse> {
    return this.post(`/campaigns/${id}/results`, { revision, rows });
  }

  whatIf(id: string, rows: Record<string, string>[]): Promise<WhatIfResponse> {
    return this.post(`/campaigns/${id}/whatif`, { rows });
  }

  finish(
    id: string,
    revision: number,
  ): Promise<{
    incumbent_present: boolean;
    incumbent_cost: number | null;
    revision: number;
    phase: Phase;
  }> {
    return this.post(`/campaigns/${id}/finish`, { revision });
  }
}
