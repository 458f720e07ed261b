/** Payload shapes of the campaign service API. */

export type Phase =
  | "NeedsIgnition"
  | "ReadyToPropose"
  | "AwaitingResults"
  | "Terminated";

export type AcquisitionName = "FIP" | "HFI";

/** [lower, upper] feasibility band per constrained output, physical units. */
export type ConstraintBands = Record<string, [number, number]>;

export interface CampaignConfigDoc {
  bounds: {
    controllable: Record<string, [number, number]>;
    voltage: [number, number];
  };
  constraints: ConstraintBands;
  cost: unknown;
  optimizer: {
    batch_size: number;
    pi: number;
    epsilon: number;
    max_batches: number;
  };
  candidate_count: number;
  powder: string;
  seed: number;
}

export interface ProposedCandidateDoc {
  x: number[];
  powder: string;
  pool_index: number;
  cost: number;
  improvement: number;
  fp: number;
  alpha_fip: number;
  alpha_hfi: number;
  acquisition_used: AcquisitionName;
  constraint_means: Record<string, number>;
  constraint_sds: Record<string, number>;
}

export interface ProposalDoc {
  candidates: ProposedCandidateDoc[];
  fip_values: number[];
  incumbent_cost: number;
  any_feasible_known: boolean;
}

export interface PendingBatchDoc {
  batch_id: string;
  proposal: ProposalDoc;
  received: Record<string, ExperimentDoc>;
  dropped: number[];
}

export interface ExperimentDoc {
  x: number[];
  powder: string;
  measurements: Record<string, number>;
  feasible: boolean;
  cost: number;
  session_id: string;
}

export interface SessionDoc {
  session_id: string;
  delta_b: number;
  ignition_settings: number[];
  ignition_voltages: number[];
  history_size_at_ignition: number;
}

export interface TraceBatchDoc {
  batch_id: string;
  proposal: ProposalDoc;
  results: ExperimentDoc[];
  dropped: number[];
  incumbent_cost_after: number | null;
  terminated: boolean;
}

export interface CampaignStateDoc {
  id: string;
  config: CampaignConfigDoc;
  history: ExperimentDoc[];
  pending: PendingBatchDoc | null;
  session: SessionDoc | null;
  phase: Phase;
  trace: TraceBatchDoc[];
  batch_counter: number;
  session_counter: number;
  revision: number;
  incumbent: {
    present: boolean;
    cost: number | null;
    history_index: number | null;
  };
}

export interface RowReportDoc {
  line: number;
  status: "accepted" | "rejected" | "duplicate" | "dropped";
  message: string;
}

export interface IngestResponse {
  reports: RowReportDoc[];
  revision: number;
  phase: Phase;
}

export interface WhatIfResponse {
  reports: RowReportDoc[];
  incumbent_cost: number | null;
  incumbent_present: boolean;
  terminated: boolean;
  next_batch_preview: ProposalDoc | null;
}

/** One row of the results-entry form, as typed by the operator. */
export interface ResultFormRow {
  candidate_index: string;
  microhardness_HV: string;
  porosity_pct: string;
  application_rate: string;
  deposition_efficiency_pct: string;
  measured_voltage_V: string;
  dropped_flag: boolean;
}
