/** Client-side feasibility badges.
 *
 * Band definitions are always the ones fetched from the service config
 * endpoint, never hardcoded, so the badge shown while typing agrees with
 * the server's verdict once the row is submitted. */

import type { ConstraintBands } from "./types.js";

export type Badge = "feasible" | "infeasible" | "incomplete";

/** Inclusive band check on one output. */
export function withinBand(value: number, band: [number, number]): boolean {
  return value >= band[0] && value <= band[1];
}

/** Badge for a (possibly partial) set of measured outputs. Returns
 * "incomplete" while any constrained output is missing or non-numeric. */
export function feasibilityBadge(
  measurements: Record<string, number | null | undefined>,
  bands: ConstraintBands,
): Badge {
  let verdict: Badge = "feasible";
  for (const [name, band] of Object.entries(bands)) {
    const value = measurements[name];
    if (value == null || Number.isNaN(value)) return "incomplete";
    if (!withinBand(value, band)) verdict = "infeasible";
  }
  return verdict;
}

/** Distance to the nearest band edge, negative inside the band; used to
 * annotate near-boundary entries in the results form. */
export function bandMargin(value: number, band: [number, number]): number {
  if (withinBand(value, band)) {
    return -Math.min(value - band[0], band[1] - value);
  }
  return value < band[0] ? band[0] - value : value - band[1];
}
