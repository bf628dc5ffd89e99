"""
Associational metrics next to principal fairness
================================================

Statistical parity, calibration and accuracy only look at the observed
table. With the default decision table the two groups get opposite treatment
gaps in the stable and severe strata. Those gaps roughly cancel in the
marginal rates, so parity looks fine while the within-stratum view does not.
"""

import numpy as np

import principal_fairness as pf

sim = pf.simulate(pf.SimConfig(n=4000, m=10, seed=1))

sp = pf.statistical_parity(sim.data)
print("p(D=1 | A=0), p(D=1 | A=1):", round(sp.rates[0], 3), round(sp.rates[1], 3))
print("calibration p(Y=1 | D, A):\n", np.round(pf.calibration(sim.data), 3))
print("accuracy p(D=1 | Y, A):\n", np.round(pf.accuracy_metric(sim.data), 3))

# within-stratum gaps computed from the true strata
report = pf.summarize_strata_draws(sim.data, [sim.strata], seed=0)
print({h.label: round(v, 3) for h, v in report.delta_means().items()})
