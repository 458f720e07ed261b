"""The feasibility-prioritizing selection policy on a toy pool.

Scores a handful of candidates under the two acquisition functions and
shows how the policy branches: feasibility-seeking while nothing feasible
is known, cost-seeking once a confident improvement exists, and back to
feasibility-seeking when confidence drops.
"""

from sprayopt import acquisition as acq

pi = 0.4
incumbent_unknown = acq.Incumbent(None, cost=161.0)   # fallback: grid max + 1
incumbent_found = acq.Incumbent(object(), cost=120.3)

pool_spec = [
    # (cost, feasibility probability)
    (105.0, 0.55),
    (112.0, 0.91),
    (126.0, 0.97),   # worse than the found incumbent
    (131.0, 0.99),
    (108.0, 0.35),
]


def show(title, incumbent, fp_scale=1.0):
    print(f"\n{title}")
    pool = [acq.score_candidate(i, cost, min(fp * fp_scale, 1.0), incumbent, pi)
            for i, (cost, fp) in enumerate(pool_spec)]
    for c in pool:
        print(f"  candidate {c.x}: cost {c.cost:6.1f}  I {c.improvement:5.1f}"
              f"  FP {c.fp:.2f}  FIP {c.alpha_fip:.2f}  HFI {c.alpha_hfi:+.2f}")
    chosen = acq.select_candidate(pool, incumbent.present, pi)
    print(f"  -> selected candidate {chosen.x}")


show("no feasible experiment known (pure feasibility search):",
     incumbent_unknown)
show("feasible incumbent at 120.3 and confident candidates (cost search):",
     incumbent_found)
show("same incumbent, all feasibility probabilities deflated "
     "(conservative fallback):", incumbent_found, fp_scale=0.4)
