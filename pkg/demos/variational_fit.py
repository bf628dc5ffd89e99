"""
Mean-field VI for a small logistic regression
=============================================

Fit q(theta) on a two-parameter problem and compare its ELBO to the log
evidence computed by brute force on a grid.
"""

import numpy as np
from scipy.special import logsumexp

import principal_fairness as pf

rng = np.random.default_rng(0)
x = rng.normal(size=40)
features = np.column_stack([x, np.ones_like(x)])
labels = (rng.random(40) < 1 / (1 + np.exp(-(1.5 * x - 0.5)))).astype(float)

fit = pf.fit_bayes_logistic(features, labels, pf.FitConfig(steps=2000, seed=0))
print("mu   :", np.round(fit.posterior.mu, 3))
print("sigma:", np.round(fit.posterior.sigma, 3))

# log evidence on a grid: log of the integral of prior times likelihood
axis = np.linspace(-6, 6, 601)
b0, b1 = np.meshgrid(axis, axis, indexing="ij")
thetas = np.column_stack([b0.ravel(), b1.ravel()])
log_joint = np.array([pf.log_joint(t, features, labels) for t in thetas])
log_z = logsumexp(log_joint) + 2 * np.log(axis[1] - axis[0])

elbo = pf.elbo_estimate(fit.posterior, features, labels, n_draws=100_000, seed=1)
print(f"ELBO {elbo:.4f} <= log evidence {log_z:.4f}")

# the optimiser's trace: quadrature ELBO before each step
print("trace start/end:", round(fit.trace[0], 3), round(fit.trace[-1], 3))
