"""Fitting the quality-output surrogates.

Generates a synthetic training set from the shipped simulated process,
fits the microhardness model twice (with the sign-constrained linear
trend and with a plain zero mean), and compares held-out accuracy when
the test session carries a +2 V equipment offset.
"""

import numpy as np

from sprayopt import gp, oracle
from sprayopt.process import default_bounds

bounds8 = default_bounds().model_input_bounds()
design = oracle.load_default_design()

baseline = oracle.SimulatedProcess(
    state=oracle.EquipmentState(voltage_offset=0.0))
shifted = oracle.SimulatedProcess(
    state=oracle.EquipmentState(voltage_offset=2.0))

train = baseline.generate_initialization(design[:60], seed=0)
test = shifted.generate_initialization(design[60:], seed=1)

X_tr = np.array([e.x.flatten() for e in train])
X_te = np.array([e.x.flatten() for e in test])

print("microhardness model, trained on a zero-offset session,")
print("evaluated on a +2 V session:\n")
for label, mean_config in (("hybrid (sign-constrained trend)",
                            gp.microhardness_mean_config()),
                           ("zero mean", None)):
    y_tr = np.array([e.measurements["microhardness_HV"] for e in train])
    y_te = np.array([e.measurements["microhardness_HV"] for e in test])
    model = gp.fit(gp.Dataset(X_tr, y_tr), mean_config, restarts=3, seed=0,
                   input_bounds=bounds8, prior=gp.default_prior())
    mu, var = gp.posterior_batch(model, X_te)
    rmse = np.sqrt(np.mean((mu - y_te) ** 2))
    inside = np.mean(np.abs(mu - y_te) <= 2 * np.sqrt(var))
    print(f"  {label:32s} RMSE = {rmse:6.2f} HV   "
          f"within 2 sigma: {inside:.0%}")
    if model.mean is not None:
        coef = model.mean.coefficients
        print(f"  {'':32s} trend coefficients: secondary gas "
              f"{coef[1]:+.3f}, voltage {coef[7]:+.3f} (model coords)")
print("\nthe fitted trend picks up the voltage effect with the constrained")
print("signs; its advantage over the plain model grows as the training")
print("data's own voltage coverage shrinks (single-session collections).")
