"""Synthetic decision data with known potential outcomes and strata.

Generative process, per unit i:

    A_i ~ Bernoulli(0.5)
    X_i ~ N(0, I_m)
    Y_i(d) ~ Bernoulli(sigmoid(X_i . w_d + theta_d * d)),  w_d ~ N(0, I_m)
    H_i = stratum of (Y_i(0), Y_i(1))
    D_i ~ Bernoulli(p[H_i, A_i])
    Y_i = Y_i(D_i)

The potential outcomes never depend on A; A only enters the decision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    OBSERVED,
    STRATA,
    Dataset,
    PotentialOutcomes,
    Stratum,
    strata_codes,
)
from .vi import sigmoid

# rows: stratum code 0..3, columns: attribute value 0, 1
DEFAULT_DECISION_PROB = np.array([
    [0.40, 0.20],  # stable
    [0.80, 0.80],  # treatable
    [0.20, 0.20],  # better-without
    [0.40, 0.60],  # severe
])

UNDEFINED = float("nan")


def _as_table(probs) -> np.ndarray:
    table = np.array(probs, dtype=float)
    if table.shape == (8,):
        table = table.reshape(4, 2)
    if table.shape != (4, 2):
        raise ValueError(f"decision_prob must have 8 entries (4 strata x 2 groups), got shape {table.shape}")
    return table


@dataclass(frozen=True)
class SimConfig:
    n: int = 5000
    m: int = 100
    theta_d: float = -1.0
    decision_prob: np.ndarray = field(default_factory=lambda: DEFAULT_DECISION_PROB.copy())
    seed: int = 0

    def __post_init__(self):
        table = _as_table(self.decision_prob)
        object.__setattr__(self, "decision_prob", table)
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not np.isfinite(self.theta_d):
            raise ValueError("theta_d must be finite")
        if not np.all((table >= 0) & (table <= 1)):
            raise ValueError(f"decision probabilities must lie in [0, 1], got {table.ravel().tolist()}")

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "theta_d": self.theta_d,
            "decision_prob": self.decision_prob.ravel().tolist(),
            "seed": self.seed,
        }


@dataclass(frozen=True)
class SimulatedDataset:
    data: Dataset
    truth: PotentialOutcomes
    strata: np.ndarray
    weights0: np.ndarray
    weights1: np.ndarray
    config: SimConfig | None = None


def simulate(config: SimConfig = SimConfig()) -> SimulatedDataset:
    """Draw one dataset. Identical configs give bit-identical output."""
    n, m = config.n, config.m
    rng = np.random.default_rng(config.seed)
    attribute = rng.binomial(1, 0.5, size=n).astype(np.int8)
    covariates = rng.standard_normal((n, m))
    w0 = rng.standard_normal(m)
    w1 = rng.standard_normal(m)
    y0 = (rng.random(n) < sigmoid(covariates @ w0)).astype(np.int8)
    y1 = (rng.random(n) < sigmoid(covariates @ w1 + config.theta_d)).astype(np.int8)
    strata = strata_codes(y0, y1)
    p_treat = config.decision_prob[strata, attribute]
    decision = (rng.random(n) < p_treat).astype(np.int8)
    outcome = np.where(decision == 1, y1, y0).astype(np.int8)

    data = Dataset(decision, attribute, covariates, outcome)
    truth = PotentialOutcomes(y0, y1, np.full((n, 2), OBSERVED, dtype=np.int8))
    return SimulatedDataset(data, truth, strata, w0, w1, config)


def true_delta(config: SimConfig = SimConfig()) -> dict[Stratum, float]:
    """Configured decision-probability gap p[h, 1] - p[h, 0] per stratum."""
    p = config.decision_prob
    return {h: float(p[h, 1] - p[h, 0]) for h in STRATA}


def oracle_delta(sim: SimulatedDataset) -> dict[Stratum, float]:
    """Empirical gap from the true strata and realised decisions.

    Plain per-row counting, kept separate from the estimator's vectorised path
    so it can serve as a check on it. A stratum with an empty (h, a) cell maps
    to NaN.
    """
    treated = [[0, 0] for _ in STRATA]
    total = [[0, 0] for _ in STRATA]
    for h, d, a in zip(sim.strata.tolist(), sim.data.decision.tolist(), sim.data.attribute.tolist()):
        total[h][a] += 1
        treated[h][a] += d
    out = {}
    for h in STRATA:
        if total[h][0] == 0 or total[h][1] == 0:
            out[h] = UNDEFINED
        else:
            out[h] = treated[h][1] / total[h][1] - treated[h][0] / total[h][0]
    return out
