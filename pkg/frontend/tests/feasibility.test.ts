import { describe, expect, it } from "vitest";

import { bandMargin, feasibilityBadge, withinBand } from "../src/feasibility.js";
import type { ConstraintBands } from "../src/types.js";

const BANDS: ConstraintBands = {
  microhardness_HV: [635, 675],
  porosity_pct: [6, 8.2],
};

describe("feasibilityBadge", () => {
  it("is feasible only when every output sits inside its band", () => {
    expect(
      feasibilityBadge({ microhardness_HV: 650, porosity_pct: 7 }, BANDS),
    ).toBe("feasible");
    expect(
      feasibilityBadge({ microhardness_HV: 700, porosity_pct: 7 }, BANDS),
    ).toBe("infeasible");
    expect(
      feasibilityBadge({ microhardness_HV: 650, porosity_pct: 9 }, BANDS),
    ).toBe("infeasible");
  });

  it("treats band edges as inclusive, matching the server", () => {
    expect(
      feasibilityBadge({ microhardness_HV: 635, porosity_pct: 8.2 }, BANDS),
    ).toBe("feasible");
    expect(
      feasibilityBadge({ microhardness_HV: 674.9999, porosity_pct: 6 }, BANDS),
    ).toBe("feasible");
  });

  it("reports incomplete while a constrained output is missing", () => {
    expect(feasibilityBadge({ microhardness_HV: 650 }, BANDS)).toBe(
      "incomplete",
    );
    expect(
      feasibilityBadge(
        { microhardness_HV: 650, porosity_pct: Number.NaN },
        BANDS,
      ),
    ).toBe("incomplete");
  });

  it("randomized values agree with a direct band re-check", () => {
    let seed = 12345;
    const rand = () => {
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed / 2147483648;
    };
    for (let i = 0; i < 500; i++) {
      const h = 560 + rand() * 200;
      const p = 4 + rand() * 6;
      const expected =
        h >= 635 && h <= 675 && p >= 6 && p <= 8.2
          ? "feasible"
          : "infeasible";
      expect(
        feasibilityBadge({ microhardness_HV: h, porosity_pct: p }, BANDS),
      ).toBe(expected);
    }
  });
});

describe("band helpers", () => {
  it("withinBand is inclusive", () => {
    expect(withinBand(6, [6, 8.2])).toBe(true);
    expect(withinBand(8.2, [6, 8.2])).toBe(true);
    expect(withinBand(8.2000001, [6, 8.2])).toBe(false);
  });

  it("bandMargin is negative inside, positive outside", () => {
    expect(bandMargin(650, [635, 675])).toBeLessThan(0);
    expect(bandMargin(676, [635, 675])).toBeCloseTo(1);
    expect(bandMargin(630, [635, 675])).toBeCloseTo(5);
  });
});
