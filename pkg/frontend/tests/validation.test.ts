import { describe, expect, it } from "vitest";

import { emptyRow, validateResultRow } from "../src/validation.js";

const filled = (over: Partial<ReturnType<typeof emptyRow>> = {}) => ({
  ...emptyRow(0),
  microhardness_HV: "651.2",
  porosity_pct: "7.1",
  measured_voltage_V: "64.3",
  ...over,
});

describe("validateResultRow", () => {
  it("accepts a complete row and shapes the CSV payload", () => {
    const v = validateResultRow(filled(), 5, "b001");
    expect(v.ok).toBe(true);
    expect(v.payload).toMatchObject({
      batch_id: "b001",
      candidate_index: "0",
      microhardness_HV: "651.2",
      porosity_pct: "7.1",
      measured_voltage_V: "64.3",
      dropped_flag: "",
    });
  });

  it("requires the three mandatory measurements", () => {
    for (const field of [
      "microhardness_HV",
      "porosity_pct",
      "measured_voltage_V",
    ] as const) {
      const v = validateResultRow(filled({ [field]: "" }), 5, "b001");
      expect(v.ok).toBe(false);
      expect(v.errors[field]).toBe("required");
    }
  });

  it("rejects non-numeric values with a field-level message", () => {
    const v = validateResultRow(
      filled({ microhardness_HV: "abc" }),
      5,
      "b001",
    );
    expect(v.ok).toBe(false);
    expect(v.errors.microhardness_HV).toBe("not a number");
  });

  it("treats optional fields as optional but still validates them", () => {
    expect(
      validateResultRow(filled({ application_rate: "" }), 5, "b001").ok,
    ).toBe(true);
    expect(
      validateResultRow(filled({ application_rate: "x" }), 5, "b001").ok,
    ).toBe(false);
  });

  it("bounds the candidate index by the batch size", () => {
    expect(
      validateResultRow(filled({ candidate_index: "4" }), 5, "b001").ok,
    ).toBe(true);
    expect(
      validateResultRow(filled({ candidate_index: "5" }), 5, "b001").ok,
    ).toBe(false);
    expect(
      validateResultRow(filled({ candidate_index: "1.5" }), 5, "b001").ok,
    ).toBe(false);
  });

  it("lets an explicit drop skip the measurement fields", () => {
    const v = validateResultRow(
      { ...emptyRow(2), dropped_flag: true },
      5,
      "b001",
    );
    expect(v.ok).toBe(true);
    expect(v.payload.dropped_flag).toBe("true");
    expect(v.payload.candidate_index).toBe("2");
  });

  it("flags impossible porosity percentages", () => {
    const v = validateResultRow(filled({ porosity_pct: "120" }), 5, "b001");
    expect(v.ok).toBe(false);
    expect(v.errors.porosity_pct).toMatch(/percentage/);
  });
});
