"""Posterior imputation of missing potential outcomes and principal-fairness estimates.

Each posterior draw samples one parameter vector per arm model, fills in the
unobserved potential outcome of every row, assigns strata, and computes

    delta(h) = p(D=1 | H=h, A=1) - p(D=1 | H=h, A=0).

Draws where a stratum has an empty (h, a) cell contribute nothing to that
stratum; the share of draws that did is reported as ``defined_fraction``.
Associational baselines (statistical parity, calibration, accuracy) are plain
frequencies on the observed table.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .core import (
    IMPUTED,
    OBSERVED,
    STRATA,
    Dataset,
    PotentialOutcomes,
    Stratum,
    derive_seed,
    split_by_treatment,
    strata_codes,
)
from .vi import (
    FitConfig,
    FitResult,
    VariationalPosterior,
    fit_bayes_logistic,
    predict_probs,
    sample_parameters,
)

UNDEFINED = float("nan")
RELIABILITY_THRESHOLD = 0.5


@dataclass(frozen=True)
class ImputedDraw:
    potential_outcomes: PotentialOutcomes
    strata: np.ndarray
    draw_index: int = 0


@dataclass(frozen=True)
class StratumCell:
    """Decision counts within one stratum; index 0/1 is the attribute value."""

    delta: float
    treated: tuple[int, int]
    total: tuple[int, int]

    @property
    def defined(self) -> bool:
        return not np.isnan(self.delta)


@dataclass(frozen=True)
class GroupRates:
    rates: dict[int, float]
    gap: float


@dataclass(frozen=True)
class AssociationalMetrics:
    statistical_parity: GroupRates
    calibration: np.ndarray  # [d, a] -> p(Y=1 | D=d, A=a)
    accuracy: np.ndarray  # [y, a] -> p(D=1 | Y=y, A=a)


@dataclass(frozen=True)
class StratumSummary:
    delta_mean: float
    delta_lower: float
    delta_upper: float
    defined_fraction: float

    @property
    def unreliable(self) -> bool:
        return self.defined_fraction < RELIABILITY_THRESHOLD


@dataclass
class FairnessReport:
    """Posterior summaries of delta(h) plus the associational block.

    ``decision_prob`` and ``strata_proportion`` are (4, 2) arrays indexed by
    (stratum code, attribute value). ``delta_draws`` is (S, 4) with NaN where a
    draw left delta(h) undefined.
    """

    strata: dict[Stratum, StratumSummary]
    decision_prob: np.ndarray
    strata_proportion: np.ndarray
    associational: AssociationalMetrics
    draws_used: int
    delta_draws: np.ndarray
    interval: str = "population"
    seed: int | None = None
    provenance: dict = field(default_factory=dict)

    def delta_means(self) -> dict[Stratum, float]:
        return {h: s.delta_mean for h, s in self.strata.items()}

    @property
    def unreliable_strata(self) -> list[Stratum]:
        return [h for h, s in self.strata.items() if s.unreliable]


class LayoutError(ValueError):
    """Raised when parameter vectors do not match the data's model layout."""


def infer_layout(data: Dataset, *thetas: np.ndarray) -> bool:
    """Whether the parameters include an attribute coefficient.

    Valid lengths are m + 1 (covariates, intercept) and m + 2 (covariates, A,
    intercept); all vectors must agree.
    """
    m = data.n_features
    dims = {np.shape(t)[0] for t in thetas}
    if len(dims) != 1 or next(iter(dims)) not in (m + 1, m + 2):
        raise LayoutError(
            f"posterior has {sorted(dims)} coordinates but the data has {m} covariates "
            f"(expected {m + 1} without attribute or {m + 2} with attribute)"
        )
    return dims.pop() == m + 2


def fit_arm_models(data: Dataset, cfg: FitConfig = FitConfig(),
                   use_attribute: bool = False) -> tuple[FitResult, FitResult]:
    """Independent posteriors for Y(0) on control rows and Y(1) on treated rows.

    Arm d trains with seed ``derive_seed(cfg.seed, d)``.
    """
    features = data.model_features(use_attribute)
    names = data.model_feature_names(use_attribute)
    treated, control = split_by_treatment(data)
    fits = []
    for arm, rows in ((0, control), (1, treated)):
        arm_cfg = replace(cfg, seed=derive_seed(cfg.seed, arm))
        fits.append(fit_bayes_logistic(features[rows], data.outcome[rows], arm_cfg, names))
    return fits[0], fits[1]


def _impute(data, features, treated, control, theta0, theta1, rng, draw_index=0):
    y0 = data.outcome.copy()
    y1 = data.outcome.copy()
    y0[treated] = rng.random(treated.size) < predict_probs(theta0, features[treated])
    y1[control] = rng.random(control.size) < predict_probs(theta1, features[control])
    source = np.full((data.n_rows, 2), OBSERVED, dtype=np.int8)
    source[treated, 0] = IMPUTED
    source[control, 1] = IMPUTED
    po = PotentialOutcomes(y0, y1, source)
    return ImputedDraw(po, strata_codes(y0, y1), draw_index)


def impute_draw(data: Dataset, theta0, theta1, seed=None, draw_index: int = 0) -> ImputedDraw:
    """Sample the missing potential outcome of every row given fixed arm parameters.

    Treated rows keep Y(1) = Y and draw Y(0) from ``theta0``; control rows keep
    Y(0) = Y and draw Y(1) from ``theta1``.
    """
    theta0 = np.asarray(theta0, dtype=float)
    theta1 = np.asarray(theta1, dtype=float)
    use_attribute = infer_layout(data, theta0, theta1)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    treated, control = split_by_treatment(data)
    features = data.model_features(use_attribute)
    return _impute(data, features, treated, control, theta0, theta1, rng, draw_index)


def _cell_counts(strata, decision, attribute):
    strata = np.asarray(strata, dtype=np.int64)
    decision = np.asarray(decision, dtype=np.int64)
    attribute = np.asarray(attribute, dtype=np.int64)
    if not (strata.shape == decision.shape == attribute.shape):
        raise ValueError("strata, decision and attribute must have equal length")
    key = 2 * strata + attribute
    total = np.bincount(key, minlength=8).reshape(4, 2)
    treated = np.bincount(key, weights=decision, minlength=8).reshape(4, 2).astype(np.int64)
    return treated, total


def _rates(treated, total):
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, treated / np.maximum(total, 1), np.nan)


def delta_by_stratum(strata, decision, attribute) -> dict[Stratum, StratumCell]:
    """Within-stratum gap in treatment rate, A=1 minus A=0.

    Strata missing either group get ``delta = NaN``, never 0.
    """
    treated, total = _cell_counts(strata, decision, attribute)
    rates = _rates(treated, total)
    out = {}
    for h in STRATA:
        delta = float(rates[h, 1] - rates[h, 0]) if total[h].all() else UNDEFINED
        out[h] = StratumCell(delta, tuple(int(v) for v in treated[h]), tuple(int(v) for v in total[h]))
    return out


def _conditional_table(target, given, attribute):
    """[g, a] -> empirical p(target=1 | given=g, A=a), NaN for empty cells."""
    target = np.asarray(target, dtype=np.int64)
    key = 2 * np.asarray(given, dtype=np.int64) + np.asarray(attribute, dtype=np.int64)
    total = np.bincount(key, minlength=4).reshape(2, 2)
    hits = np.bincount(key, weights=target, minlength=4).reshape(2, 2)
    return _rates(hits, total)


def statistical_parity(data: Dataset) -> GroupRates:
    rates = {}
    for a in (0, 1):
        mask = data.attribute == a
        rates[a] = float(data.decision[mask].mean()) if mask.any() else UNDEFINED
    return GroupRates(rates, rates[1] - rates[0])


def calibration(data: Dataset) -> np.ndarray:
    """p(Y=1 | D=d, A=a) as a (2, 2) array indexed [d, a]."""
    return _conditional_table(data.outcome, data.decision, data.attribute)


def accuracy_metric(data: Dataset) -> np.ndarray:
    """p(D=1 | Y=y, A=a) as a (2, 2) array indexed [y, a]."""
    return _conditional_table(data.decision, data.outcome, data.attribute)


def associational_metrics(data: Dataset) -> AssociationalMetrics:
    return AssociationalMetrics(statistical_parity(data), calibration(data), accuracy_metric(data))


def _population_deltas(treated, total, rng):
    """One posterior draw of p[h, 1] - p[h, 0] under Beta(1, 1) priors per cell."""
    p = rng.beta(1.0 + treated, 1.0 + total - treated)
    return np.where(total.all(axis=1), p[:, 1] - p[:, 0], np.nan)


def summarize_strata_draws(data: Dataset, strata_draws: Sequence[np.ndarray], seed=None,
                           interval: str = "population", rngs=None, provenance=None) -> FairnessReport:
    """Aggregate per-draw stratum assignments into a :class:`FairnessReport`.

    ``delta_mean`` averages the in-sample gap over draws where it is defined.
    With ``interval="sample"`` the credible bounds are quantiles of those same
    gaps (imputation uncertainty only). With ``interval="population"`` each
    draw additionally samples the eight decision probabilities from their Beta
    posterior given that draw's strata, so the bounds also cover binomial
    uncertainty in p(D=1 | H, A).

    Passing the true strata as a single draw checks the estimator against
    known assignments.
    """
    if interval not in ("population", "sample"):
        raise ValueError(f"interval must be 'population' or 'sample', got {interval!r}")
    S = len(strata_draws)
    if S < 1:
        raise ValueError("need at least one draw")
    if rngs is None:
        rngs = [np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(S)]

    deltas = np.full((S, 4), np.nan)
    spread = np.full((S, 4), np.nan)
    rate_draws = np.full((S, 4, 2), np.nan)
    props = np.zeros((S, 4, 2))
    group_sizes = np.array([(data.attribute == a).sum() for a in (0, 1)])
    for s, strata in enumerate(strata_draws):
        cells = delta_by_stratum(strata, data.decision, data.attribute)
        deltas[s] = [cells[h].delta for h in STRATA]
        treated = np.array([cells[h].treated for h in STRATA])
        total = np.array([cells[h].total for h in STRATA])
        rate_draws[s] = _rates(treated, total)
        with np.errstate(invalid="ignore", divide="ignore"):
            props[s] = np.where(group_sizes > 0, total / np.maximum(group_sizes, 1), np.nan)
        spread[s] = _population_deltas(treated, total, rngs[s]) if interval == "population" else deltas[s]

    summaries = {}
    for h in STRATA:
        col = deltas[:, h]
        defined = ~np.isnan(col)
        if defined.any():
            mean = float(np.mean(col[defined]))
            lo, hi = np.quantile(spread[defined, h], [0.025, 0.975])
            # keep the interval ordered around the mean
            summaries[h] = StratumSummary(mean, float(min(lo, mean)), float(max(hi, mean)), defined.sum() / S)
        else:
            summaries[h] = StratumSummary(UNDEFINED, UNDEFINED, UNDEFINED, 0.0)

    defined_rates = ~np.isnan(rate_draws)
    rate_sum = np.where(defined_rates, rate_draws, 0.0).sum(axis=0)
    n_defined = defined_rates.sum(axis=0)
    decision_prob = np.where(n_defined > 0, rate_sum / np.maximum(n_defined, 1), np.nan)

    return FairnessReport(
        strata=summaries,
        decision_prob=decision_prob,
        strata_proportion=props.mean(axis=0),
        associational=associational_metrics(data),
        draws_used=S,
        delta_draws=deltas,
        interval=interval,
        seed=seed,
        provenance=dict(provenance or {}),
    )


def assess_principal_fairness(data: Dataset, post0: VariationalPosterior, post1: VariationalPosterior,
                              S: int = 100, seed=0, interval: str = "population",
                              provenance=None) -> FairnessReport:
    """Posterior distribution of delta(h) by repeated imputation.

    ``post0`` models Y(0) (fit on control rows) and ``post1`` models Y(1) (fit
    on treated rows). Draw s uses its own generator spawned from ``seed``, so
    draws do not depend on evaluation order.
    """
    if S < 1:
        raise ValueError(f"S must be >= 1, got {S}")
    features = data.model_features(infer_layout(data, post0.mu, post1.mu))
    treated, control = split_by_treatment(data)
    rngs = [np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(S)]
    strata_draws = []
    for s, rng in enumerate(rngs):
        theta0 = sample_parameters(post0, rng)
        theta1 = sample_parameters(post1, rng)
        draw = _impute(data, features, treated, control, theta0, theta1, rng, s)
        strata_draws.append(draw.strata)
    return summarize_strata_draws(data, strata_draws, seed=seed, interval=interval, rngs=rngs,
                                  provenance=provenance)
