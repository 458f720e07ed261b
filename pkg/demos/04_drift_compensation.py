"""Session-to-session drift compensation through the voltage model.

Fits the auxiliary voltage model on baseline-session data, then shows how
a single short ignition experiment recovers an injected equipment offset
and shifts every candidate's predicted voltage accordingly.
"""

import numpy as np

from sprayopt import oracle, process
from sprayopt.process import default_bounds

bounds = default_bounds()
sim = oracle.SimulatedProcess()
design = oracle.load_default_design()
init = sim.generate_initialization(design, seed=0)

v_model = process.fit_voltage_model(
    [(e.x.controllable, e.x.powder) for e in init],
    [e.x.voltage for e in init], bounds, seed=0)

x_c_b = init[3].x.controllable
print("ignition settings re-run from the evaluated history\n")
for true_offset in (-3.0, 0.0, 2.0):
    state = oracle.EquipmentState(voltage_offset=true_offset,
                                  ignition_noise_sd=0.2)
    rng = np.random.default_rng(1)
    readings = [oracle.ignite(state, x_c_b, rng) for _ in range(5)]
    est = process.estimate_offset(v_model, x_c_b, "A", readings)
    print(f"  true offset {true_offset:+.1f} V -> estimated {est:+.2f} V "
          f"(5 averaged ignition readings)")

cands = process.generate_candidates(bounds, count=5, seed=0)
for delta in (0.0, 2.0):
    expanded = process.expand_candidates(cands, "A", v_model, delta)
    volts = ", ".join(f"{x.voltage:.2f}" for x in expanded)
    print(f"\npredicted candidate voltages with offset {delta:+.1f} V: "
          f"[{volts}]")
