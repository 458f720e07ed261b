/** Inline validation of results-entry rows, mirroring the service's CSV
 * schema: a row needs a pending candidate index plus numeric
 * microhardness, porosity and measured voltage, unless it is an explicit
 * drop. Application rate and deposition efficiency are optional. */

import type { ResultFormRow } from "./types.js";

export interface RowValidation {
  ok: boolean;
  errors: Partial<Record<keyof ResultFormRow, string>>;
  /** CSV-shaped payload, only meaningful when ok. */
  payload: Record<string, string>;
}

const REQUIRED_NUMERIC: (keyof ResultFormRow)[] = [
  "microhardness_HV",
  "porosity_pct",
  "measured_voltage_V",
];
const OPTIONAL_NUMERIC: (keyof ResultFormRow)[] = [
  "application_rate",
  "deposition_efficiency_pct",
];

function parseNumber(text: string): number | null {
  const trimmed = text.trim();
  if (trimmed === "") return null;
  const value = Number(trimmed);
  return Number.isFinite(value) ? value : NaN;
}

export function validateResultRow(
  row: ResultFormRow,
  batchSize: number,
  batchId: string,
): RowValidation {
  const errors: RowValidation["errors"] = {};
  const payload: Record<string, string> = { batch_id: batchId };

  const idx = parseNumber(row.candidate_index);
  if (idx === null || Number.isNaN(idx) || !Number.isInteger(idx)) {
    errors.candidate_index = "candidate index must be an integer";
  } else if (idx < 0 || idx >= batchSize) {
    errors.candidate_index = `candidate index must be 0..${batchSize - 1}`;
  } else {
    payload.candidate_index = String(idx);
  }

  if (row.dropped_flag) {
    payload.dropped_flag = "true";
    return { ok: Object.keys(errors).length === 0, errors, payload };
  }
  payload.dropped_flag = "";

  for (const field of REQUIRED_NUMERIC) {
    const value = parseNumber(row[field] as string);
    if (value === null) {
      errors[field] = "required";
    } else if (Number.isNaN(value)) {
      errors[field] = "not a number";
    } else {
      payload[field] = String(value);
    }
  }
  for (const field of OPTIONAL_NUMERIC) {
    const value = parseNumber(row[field] as string);
    if (value === null) {
      payload[field] = "";
    } else if (Number.isNaN(value)) {
      errors[field] = "not a number";
    } else {
      payload[field] = String(value);
    }
  }

  const porosity = parseNumber(row.porosity_pct);
  if (
    porosity !== null &&
    !Number.isNaN(porosity) &&
    (porosity < 0 || porosity > 100)
  ) {
    errors.porosity_pct = "porosity must be a percentage";
  }

  return { ok: Object.keys(errors).length === 0, errors, payload };
}

export function emptyRow(index: number): ResultFormRow {
  return {
    candidate_index: String(index),
    microhardness_HV: "",
    porosity_pct: "",
    application_rate: "",
    deposition_efficiency_pct: "",
    measured_voltage_V: "",
    dropped_flag: false,
  };
}
