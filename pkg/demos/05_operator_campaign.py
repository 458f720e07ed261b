"""Driving a persistent campaign the way an operator would.

Walks the campaign lifecycle by hand: create from an initial history,
ignite, review the proposed batch, drop a candidate, enter lab results
(simulated here), and watch the phase machine and incumbent evolve. The
same flow is available over HTTP through `sprayopt serve`.
"""

import tempfile
from pathlib import Path

import numpy as np

from sprayopt import campaign as camp
from sprayopt import oracle
from sprayopt.acquisition import default_constraints
from sprayopt.optimizer import OptimizerConfig
from sprayopt.process import CostConfig, default_bounds

sim = oracle.SimulatedProcess(
    state=oracle.EquipmentState(voltage_offset=2.0))
init = sim.generate_initialization(oracle.load_default_design(), seed=0)

config = camp.CampaignConfig(
    bounds=default_bounds(), constraints=default_constraints(),
    cost=CostConfig(), optimizer=OptimizerConfig(5, 0.4, 0.05, 20),
    candidate_count=4000, powder="A", seed=0)
state = camp.new_campaign("walkthrough", config, init)
print(f"phase: {state.phase}")

x_c_b = state.history[0].x.controllable
v_b = oracle.ignite(sim.state, x_c_b, np.random.default_rng(0))
state = camp.start_session(state, x_c_b, v_b)
print(f"phase: {state.phase}, session {state.session.session_id}, "
      f"offset {state.session.delta_b:+.2f} V")

state = camp.propose(state)
print(f"phase: {state.phase}, batch {state.pending.batch_id}")
for i, c in enumerate(state.pending.proposal.candidates):
    print(f"  [{i}] {c.acquisition_used} FP={c.fp:.2f} cost={c.cost:.1f} "
          f"V={c.x.voltage:.2f}")

state = camp.drop_candidate(state, 1)
print("dropped candidate 1 (operator judgment)")

rows = []
rng = np.random.default_rng(7)
for i, cand in enumerate(state.pending.proposal.candidates):
    if i in state.pending.dropped:
        continue
    e = sim.measure(cand.x.controllable, "A", rng)
    rows.append({
        "batch_id": state.pending.batch_id, "candidate_index": str(i),
        "microhardness_HV": repr(e.measurements["microhardness_HV"]),
        "porosity_pct": repr(e.measurements["porosity_pct"]),
        "measured_voltage_V": repr(e.x.voltage), "dropped_flag": "",
    })
state, reports = camp.ingest_results(state, rows)
for r in reports:
    print(f"  row {r.line}: {r.status} {r.message}")
inc = state.incumbent()
print(f"phase: {state.phase}, history {len(state.history)}, incumbent "
      f"{'%.1f' % inc.cost if inc.present else 'none yet'}")

with tempfile.TemporaryDirectory() as d:
    path = camp.save(state, Path(d) / "walkthrough.json")
    print(f"state persisted ({path.stat().st_size} bytes) and "
          f"resumable: {camp.load(path).phase}")
