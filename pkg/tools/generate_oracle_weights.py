"""One-time generator for the shipped oracle weights and the 86-point
initialization design.

The network is constructed directly from a documented analytic ground
truth built out of seven smooth ridge functions on the normalized inputs:

 * two "gun power" ridges (positive loadings on voltage and current,
   negative on secondary gas flow) drive microhardness upward,
 * a "densification" ridge (power up, standoff/feed down) drives porosity
   downward,
 * feed/carrier, standoff, powder and primary-flow ridges add secondary
   structure to both outputs.

Because every hidden unit's loading signs are fixed and each output mixes
them with constant-sign weights, microhardness is globally increasing in
voltage and gun current and decreasing in secondary gas flow, and porosity
is globally decreasing in voltage -- the qualitative behavior the
optimizer's hybrid mean encodes.

The script verifies, before writing anything:
 * output ranges over the full input box (hardness 300-900 HV,
   porosity 2-14 %),
 * that every design point's noiseless hardness sits at least five
   measurement sigmas below the target band (so the shipped design is
   infeasible under any measurement-noise seed),
 * that a nonempty feasible region exists on the default 20000-candidate
   grid under a +2 V session offset, recording its minimum-cost member as
   the reachability target.

Run from the repository root:  python tools/generate_oracle_weights.py
"""

import itertools
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from sprayopt import oracle, process  # noqa: E402
from sprayopt.acquisition import default_constraints  # noqa: E402
from sprayopt.process import CostConfig, default_bounds  # noqa: E402

OUT_DIR = Path(__file__).resolve().parents[1] / "src" / "sprayopt" / "_data"

# Normalization constants (the machine envelope; equals default bounds).
LO = np.array([30.0, 4.0, 450.0, 2.0, 20.0, 90.0, 0.0, 50.0])
SPAN = np.array([30.0, 10.0, 300.0, 3.0, 40.0, 60.0, 1.0, 25.0])

# Ridges: gain, loadings on normalized inputs
# [primary, secondary, current, carrier, feed, standoff, powder, voltage],
# offset.
RIDGES = [
    (2.6, [0.0, -0.18, 0.40, 0.0, 0.0, 0.0, 0.0, 0.50], 0.35),   # power, low
    (2.6, [0.0, -0.18, 0.40, 0.0, 0.0, 0.0, 0.0, 0.50], 0.62),   # power, high
    (2.2, [0.0, 0.0, 0.35, 0.0, -0.20, -0.25, 0.0, 0.45], 0.15), # densification
    (1.8, [0.0, 0.0, 0.0, 0.30, 0.55, 0.0, 0.0, 0.0], 0.45),     # feed/carrier
    (1.9, [0.0, 0.0, 0.0, 0.0, 0.0, 0.80, 0.0, 0.0], 0.42),      # standoff
    (1.5, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.00, 0.0], 0.50),      # powder
    (1.7, [0.70, 0.0, 0.0, 0.20, 0.0, 0.0, 0.0, 0.0], 0.45),     # primary flow
]

W2 = np.array([
    [175.0, 100.0, 0.0, -23.0, -34.0, 22.0, 10.0],   # microhardness
    [0.0, 0.0, -2.9, 0.95, 1.25, -0.45, 0.28],       # porosity
])
B2 = np.array([616.0, 7.4])

HARDNESS_SD = 8.45
DESIGN_HARDNESS_CAP = 635.0 - 5.0 * HARDNESS_SD - 2.5  # extra slack: 590.25

DOE_LEVELS = [
    (0.2, 0.5, 0.8),      # primary gas flow
    (0.35, 0.65, 0.95),   # secondary gas flow
    (0.10, 0.35, 0.55),   # gun current
    (0.25, 0.75),         # carrier gas flow
    (0.2, 0.5, 0.8),      # powder feed rate
    (0.25, 0.60, 0.95),   # standoff distance
]
BASELINE_U = np.array([0.5, 0.5, 0.5, 0.5, 0.5, 0.5])
N_DOE = 73
N_BASELINE = 13
DESIGN_SEED = 7
GRID_SEED = 0
GRID_COUNT = 20000
OFFSET = 2.0


def build_net():
    w1 = np.zeros((7, 8))
    b1 = np.zeros(7)
    for r, (gain, beta, theta) in enumerate(RIDGES):
        beta = np.asarray(beta)
        w1[r] = gain * beta / SPAN
        b1[r] = gain * (-theta - float(beta @ (LO / SPAN)))
    return w1, b1


def main():
    w1, b1 = build_net()
    net = oracle.SurrogateNet(w1, b1, W2, B2)
    bounds = default_bounds()
    constraints = default_constraints()
    cost_cfg = CostConfig()

    # 1. full-box output ranges
    rng = np.random.default_rng(123)
    n = 500000
    X = np.empty((n, 8))
    X[:, :6] = bounds.lows + rng.random((n, 6)) * (bounds.highs - bounds.lows)
    X[:, 6] = rng.integers(0, 2, n)
    X[:, 7] = bounds.voltage_low + rng.random(n) * (
        bounds.voltage_high - bounds.voltage_low)
    out = oracle.forward_batch(net, X)
    h_lo, h_hi = out[:, 0].min(), out[:, 0].max()
    r_lo, r_hi = out[:, 1].min(), out[:, 1].max()
    print(f"hardness range [{h_lo:.1f}, {h_hi:.1f}], "
          f"porosity range [{r_lo:.2f}, {r_hi:.2f}]")
    assert 300.0 < h_lo and h_hi < 900.0, "hardness range violated"
    assert 2.0 < r_lo and r_hi < 14.0, "porosity range violated"

    # 2. assemble the design: filtered factorial + baseline replicates
    lo6, hi6 = bounds.lows, bounds.highs
    combos_u = np.array(list(itertools.product(*DOE_LEVELS)))
    combos = lo6 + combos_u * (hi6 - lo6)
    rows = []
    for powder_code in (0.0, 1.0):
        V = oracle.true_voltage_batch(combos)
        Xd = np.hstack([combos, np.full((len(combos), 1), powder_code),
                        V[:, None]])
        h = oracle.forward_batch(net, Xd)[:, 0]
        for i in range(len(combos)):
            if h[i] <= DESIGN_HARDNESS_CAP:
                rows.append((combos[i], "B" if powder_code else "A", h[i]))
    print(f"{len(rows)} factorial points pass the hardness cap "
          f"{DESIGN_HARDNESS_CAP:.2f}")
    drng = np.random.default_rng(DESIGN_SEED)
    pick = drng.choice(len(rows), size=N_DOE, replace=False)
    design = [(rows[i][0], rows[i][1]) for i in pick]
    base = lo6 + BASELINE_U * (hi6 - lo6)
    design += [(base, "A")] * N_BASELINE
    order = drng.permutation(len(design))
    design = [design[i] for i in order]

    # verify the design margin once more, end to end
    Xd = np.array([np.concatenate([xc, [process.POWDER_CODES[p]],
                                   [oracle.true_voltage_batch(xc[None, :])[0]]])
                   for xc, p in design])
    out_d = oracle.forward_batch(net, Xd)
    margin = (635.0 - out_d[:, 0].max()) / HARDNESS_SD
    print(f"design: {len(design)} points, max hardness {out_d[:, 0].max():.1f} "
          f"({margin:.1f} sigma below the band)")
    assert len(design) == 86
    assert margin >= 5.0, "design infeasibility margin violated"

    # 3. reachability scan on the default grid at +2 V (powder A)
    cands = process.generate_candidates(bounds, GRID_COUNT, seed=GRID_SEED)
    X6 = process.controllables_to_array(cands)
    V = oracle.true_voltage_batch(X6) + OFFSET
    Xg = np.hstack([X6, np.zeros((GRID_COUNT, 1)), V[:, None]])
    out_g = oracle.forward_batch(net, Xg)
    feas = ((out_g[:, 0] >= constraints.lowers[0])
            & (out_g[:, 0] <= constraints.uppers[0])
            & (out_g[:, 1] >= constraints.lowers[1])
            & (out_g[:, 1] <= constraints.uppers[1]))
    costs = process.stress_index_batch(X6, cost_cfg)
    assert feas.any(), "no feasible grid point under the +2 V session"
    j = int(np.flatnonzero(feas)[np.argmin(costs[feas])])
    print(f"reachability: {int(feas.sum())} feasible grid points, "
          f"min feasible cost {costs[j]:.2f}")

    # 4. self-test block at a fixed reference input
    ref_xc = lo6 + 0.5 * (hi6 - lo6)
    ref = np.concatenate([ref_xc, [0.0],
                          [oracle.true_voltage_batch(ref_xc[None, :])[0] + OFFSET]])
    ref_out = oracle.forward_batch(net, ref[None, :])[0]

    net = oracle.SurrogateNet(
        w1, b1, W2, B2,
        self_test={"input": ref.tolist(), "expected": ref_out.tolist()},
        reachability={
            "candidate_count": GRID_COUNT,
            "candidate_seed": GRID_SEED,
            "voltage_offset": OFFSET,
            "powder": "A",
            "bands": constraints.to_dict(),
            "feasible_count": int(feas.sum()),
            "min_feasible_cost": float(costs[j]),
            "argmin_controllables": X6[j].tolist(),
            "grid_max_cost": float(costs.max()),
            "grid_min_cost": float(costs.min()),
        })

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    (OUT_DIR / "oracle_net.json").write_text(
        json.dumps(oracle.net_to_dict(net), sort_keys=True, indent=1),
        encoding="utf-8")

    lines = [",".join(list(process.CONTROLLABLE_FIELDS) + ["powder"])]
    for xc, p in design:
        lines.append(",".join([repr(float(v)) for v in xc] + [p]))
    (OUT_DIR / "init_design.csv").write_text("\n".join(lines) + "\n",
                                             encoding="utf-8")
    print(f"wrote {OUT_DIR / 'oracle_net.json'}")
    print(f"wrote {OUT_DIR / 'init_design.csv'}")


if __name__ == "__main__":
    main()
