import numpy as np
import pytest

from principal_fairness import Dataset


def make_dataset(decision, attribute, outcome, covariates=None):
    decision = np.asarray(decision, dtype=np.int8)
    n = decision.size
    if covariates is None:
        covariates = np.arange(n, dtype=float).reshape(n, 1)
    return Dataset(
        decision,
        np.asarray(attribute, dtype=np.int8),
        np.asarray(covariates, dtype=float),
        np.asarray(outcome, dtype=np.int8),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
