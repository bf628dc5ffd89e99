"""Bayesian assessment of principal fairness for binary decisions.

Missing potential outcomes are imputed from mean-field variational Bayesian
logistic regressions, one per decision arm, and the within-stratum gap in
decision rates between the two attribute groups is summarised over posterior
draws.
"""

from .core import (
    Dataset,
    PotentialOutcomes,
    Stratum,
    STRATA,
    ValidationError,
    split_by_treatment,
    stratum_from_outcomes,
    validate_dataset,
)
from .fairness import (
    FairnessReport,
    ImputedDraw,
    LayoutError,
    accuracy_metric,
    assess_principal_fairness,
    calibration,
    delta_by_stratum,
    fit_arm_models,
    impute_draw,
    statistical_parity,
    summarize_strata_draws,
)
from .sim import SimConfig, SimulatedDataset, oracle_delta, simulate, true_delta
from .vi import (
    AdamState,
    FitConfig,
    FitResult,
    NumericalError,
    VariationalPosterior,
    adam_step,
    elbo_estimate,
    elbo_gradient,
    elbo_quadrature,
    fit_bayes_logistic,
    log_joint,
    predict_prob,
    sample_parameters,
)

__version__ = "0.1.0"
