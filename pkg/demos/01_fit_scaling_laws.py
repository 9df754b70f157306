"""
Fitting scaling laws to noisy runs
==================================

Generate a few synthetic training curves, fit a power law to each, and see
how close the fitted asymptote and decay come to the generating values.
"""

import numpy as np

from lawtraverse import FitConfig, fit
from lawtraverse.lawcore import PowerLaw, evaluate
from lawtraverse.synthlab import SynthSpec, generate

truth = {
    "patch=16": PowerLaw(0.6, 0.8, 0.30, 1.0, "patch=16"),
    "patch=8": PowerLaw(1.1, 0.9, 0.18, 2.0, "patch=8"),
}

# 64 points over four compute decades with small Gaussian noise on the error
series = {
    label: generate(SynthSpec(law, count=64, compute_range=(1e-2, 1e2), sigma=0.002, seed=i))
    for i, (label, law) in enumerate(truth.items())
}

for label, run in series.items():
    report = fit(run)
    got, want = report.law, truth[label]
    print(f"{label}: b {got.b:.3f} (true {want.b}), c {got.c:.4f} (true {want.c}), rmse {report.rmse:.4f}")

# extrapolating two decades past the data
far = np.array([1e3, 1e4])
for label, run in series.items():
    pred = evaluate(fit(run).law, far)
    print(label, "predicted", np.round(pred, 4), "true", np.round(evaluate(truth[label], far), 4))

# log-space residuals suit loss curves that live well above 1
loss = PowerLaw(2.0, 0.6, 1.8, 0.5, "ctx=512")
loss_run = generate(SynthSpec(loss, sigma=0.003, noise="log", clip=None, seed=3))
print("loss curve c:", round(fit(loss_run, FitConfig(residual_space="log")).law.c, 3))
