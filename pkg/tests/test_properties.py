"""Randomised invariants of imputation, stratum coding and the CSV contract."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from principal_fairness import Stratum, delta_by_stratum, impute_draw, stratum_from_outcomes
from principal_fairness.core import outcomes_from_stratum, strata_codes
from principal_fairness.serialize import dataset_from_csv, dataset_to_csv

from conftest import make_dataset

PROPERTY_SETTINGS = settings(max_examples=120, deadline=None)

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


@st.composite
def tables(draw, min_rows=2, max_rows=40, max_cols=3):
    n = draw(st.integers(min_rows, max_rows))
    m = draw(st.integers(1, max_cols))
    bits = st.lists(st.integers(0, 1), min_size=n, max_size=n)
    decision = draw(bits)
    # both arms present
    decision[0], decision[-1] = 1, 0
    attribute = draw(bits)
    outcome = draw(bits)
    cov = draw(st.lists(st.lists(finite, min_size=m, max_size=m), min_size=n, max_size=n))
    return make_dataset(decision, attribute, outcome, np.array(cov, dtype=float).reshape(n, m))


@PROPERTY_SETTINGS
@given(tables(), st.integers(0, 2**32 - 1), st.floats(-5, 5), st.floats(-5, 5))
def test_imputation_keeps_observed_outcome(data, seed, b0, b1):
    m = data.n_features
    theta0 = np.r_[np.zeros(m), b0]
    theta1 = np.r_[np.full(m, 1e-6), b1]
    draw = impute_draw(data, theta0, theta1, seed=seed)
    po = draw.potential_outcomes
    treated = data.decision == 1
    assert np.array_equal(po.y1[treated], data.outcome[treated])
    assert np.array_equal(po.y0[~treated], data.outcome[~treated])
    assert po.observed_arm_consistent(data)
    assert np.array_equal(draw.strata, strata_codes(po.y0, po.y1))


@PROPERTY_SETTINGS
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60))
def test_delta_antisymmetric_under_relabel(rows):
    strata, decision, attribute = (np.array(c) for c in zip(*rows))
    forward = delta_by_stratum(strata, decision, attribute)
    flipped = delta_by_stratum(strata, decision, 1 - attribute)
    for h in Stratum:
        if np.isnan(forward[h].delta):
            assert np.isnan(flipped[h].delta)
        else:
            assert flipped[h].delta == -forward[h].delta


@PROPERTY_SETTINGS
@given(st.integers(0, 1), st.integers(0, 1))
def test_stratum_coding_bijective(y0, y1):
    h = stratum_from_outcomes(y0, y1)
    assert outcomes_from_stratum(h) == (y0, y1)
    assert stratum_from_outcomes(*outcomes_from_stratum(h)) is h


@PROPERTY_SETTINGS
@given(tables(), st.integers(0, 2**32 - 1))
def test_imputation_deterministic_under_seed(data, seed):
    theta = np.r_[np.full(data.n_features, 0.001), 0.2]
    a = impute_draw(data, theta, -theta, seed=seed)
    b = impute_draw(data, theta, -theta, seed=seed)
    assert a.strata.tobytes() == b.strata.tobytes()


@PROPERTY_SETTINGS
@given(tables())
def test_csv_round_trip_exact(data):
    back, _ = dataset_from_csv(dataset_to_csv(data, {"seed": 0}))
    assert back.feature_names == data.feature_names
    for name in ("decision", "attribute", "outcome", "covariates"):
        assert np.array_equal(getattr(back, name), getattr(data, name))
