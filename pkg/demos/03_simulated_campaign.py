"""A full closed-loop campaign against the simulated process.

Reproduces the headline scenario: 86 initial experiments (none feasible),
a +2 V equipment offset discovered at ignition, batches of five proposed
with the feasibility-first policy, and automatic termination once most of
a proposed batch has negligible feasible-improvement probability.
"""

from sprayopt import oracle, optimizer
from sprayopt.acquisition import default_constraints
from sprayopt.optimizer import ModelConfig, OptimizerConfig
from sprayopt.process import CostConfig, default_bounds

sim = oracle.SimulatedProcess(
    state=oracle.EquipmentState(voltage_offset=2.0, ignition_noise_sd=0.2))
design = oracle.load_default_design()
init = sim.generate_initialization(design, seed=0)
print(f"initialization: {len(init)} experiments, "
      f"{sum(e.feasible for e in init)} feasible")

trace = optimizer.run_simulated_campaign(
    init, sim,
    OptimizerConfig(batch_size=5, pi=0.4, epsilon=0.05, max_batches=20),
    ModelConfig(bounds=default_bounds(), constraints=default_constraints(),
                cost=CostConfig()),
    seed=0)

print(f"estimated session offset: {trace.delta_b:+.2f} V\n")
for i, batch in enumerate(trace.batches, start=1):
    feas = sum(e.feasible for e in batch.results)
    acqs = {c.acquisition_used for c in batch.proposal.candidates}
    fips = ", ".join(f"{v:.2f}" for v in batch.proposal.fip_values)
    inc = batch.incumbent_after
    print(f"batch {i}: {'/'.join(sorted(acqs))}  FIP at selection [{fips}]")
    print(f"         {feas}/5 feasible, incumbent cost "
          f"{inc.cost:.1f}" + ("  <- terminated" if batch.terminated else ""))

target = sim.net.reachability["min_feasible_cost"]
print(f"\nfinal incumbent cost: {trace.final_incumbent.cost:.2f} "
      f"(noiseless grid target: {target:.2f})")
print(f"evaluations spent: {trace.evaluations}")
