import numpy as np
import pytest

from principal_fairness import (
    LayoutError,
    Stratum,
    VariationalPosterior,
    accuracy_metric,
    assess_principal_fairness,
    calibration,
    delta_by_stratum,
    fit_arm_models,
    impute_draw,
    statistical_parity,
    summarize_strata_draws,
)
from principal_fairness.fairness import associational_metrics, infer_layout
from principal_fairness.vi import FitConfig

from conftest import make_dataset

# (D, A, Y) rows used for the baseline hand tables
PARITY_ROWS = [(1, 1, 0), (0, 1, 0), (1, 1, 1), (1, 0, 0), (0, 0, 1), (0, 0, 0)]
CALIBRATION_ROWS = [(0, 0, 1), (0, 0, 0), (0, 1, 1), (0, 1, 1), (1, 0, 0), (1, 0, 0), (1, 0, 1), (1, 1, 0)]
ACCURACY_ROWS = [(1, 0, 0), (0, 0, 0), (0, 0, 0), (1, 1, 0), (1, 0, 1), (1, 0, 1), (0, 1, 1), (1, 1, 1)]


def _from_rows(rows):
    d, a, y = zip(*rows)
    return make_dataset(d, a, y)


def _hand_delta(strata, decision, attribute):
    """Loop-based reference for the within-stratum gap."""
    out = {}
    for h in range(4):
        rates = []
        for a in (0, 1):
            ds = [d for s, d, g in zip(strata, decision, attribute) if s == h and g == a]
            rates.append(sum(ds) / len(ds) if ds else None)
        out[h] = np.nan if None in rates else rates[1] - rates[0]
    return out


def _extreme(m, intercept):
    """Near-deterministic posterior: zero slopes, given intercept, tiny sigma."""
    mu = np.zeros(m + 1)
    mu[-1] = intercept
    return VariationalPosterior(mu, np.full(m + 1, -30.0))


class TestImputation:
    def test_treated_rows_forced_to_y0_zero(self, rng):
        n = 40
        data = make_dataset(rng.integers(0, 2, n), rng.integers(0, 2, n), rng.integers(0, 2, n))
        theta0 = np.array([0.0, -40.0])
        theta1 = np.array([0.0, 0.3])
        draw = impute_draw(data, theta0, theta1, seed=0)
        treated = data.decision == 1
        assert set(draw.strata[treated]) <= {Stratum.STABLE, Stratum.BETTER_WITHOUT}
        assert np.all(draw.potential_outcomes.y0[treated] == 0)

    def test_all_treated_success_lands_in_treatable_or_severe(self, rng):
        n = 30
        decision = np.r_[np.ones(20), np.zeros(10)]
        outcome = np.r_[np.ones(20), rng.integers(0, 2, 10)]
        data = make_dataset(decision, rng.integers(0, 2, n), outcome)
        draw = impute_draw(data, np.array([0.1, 0.0]), np.array([-0.1, 0.5]), seed=4)
        assert set(draw.strata[:20]) <= {Stratum.BETTER_WITHOUT, Stratum.SEVERE}

    def test_observed_arm_preserved_and_flagged(self, rng):
        n = 50
        data = make_dataset(rng.integers(0, 2, n), rng.integers(0, 2, n), rng.integers(0, 2, n),
                            rng.normal(size=(n, 3)))
        draw = impute_draw(data, rng.normal(size=4), rng.normal(size=4), seed=1)
        assert draw.potential_outcomes.observed_arm_consistent(data)

    def test_deterministic(self, rng):
        n = 25
        data = make_dataset(rng.integers(0, 2, n), rng.integers(0, 2, n), rng.integers(0, 2, n))
        a = impute_draw(data, [0.2, 0.1], [-0.3, 0.4], seed=5)
        b = impute_draw(data, [0.2, 0.1], [-0.3, 0.4], seed=5)
        np.testing.assert_array_equal(a.strata, b.strata)

    def test_layout_with_attribute(self, rng):
        data = make_dataset([1, 0, 1, 0], [1, 1, 0, 0], [1, 0, 0, 1])
        assert infer_layout(data, np.zeros(3), np.zeros(3)) is True
        assert infer_layout(data, np.zeros(2)) is False
        with pytest.raises(LayoutError, match="1 covariates"):
            impute_draw(data, np.zeros(5), np.zeros(5))


class TestDelta:
    def test_hand_example(self):
        strata = [0, 0, 0, 0, 3, 3, 3, 3]
        decision = [1, 0, 0, 0, 1, 1, 0, 0]
        attribute = [1, 1, 0, 0, 1, 1, 0, 0]
        cells = delta_by_stratum(strata, decision, attribute)
        assert cells[Stratum.STABLE].delta == 0.5
        assert cells[Stratum.SEVERE].delta == 1.0
        assert cells[Stratum.STABLE].treated == (0, 1)
        assert cells[Stratum.STABLE].total == (2, 2)

    def test_empty_cell_is_nan_not_zero(self):
        cells = delta_by_stratum([1, 1, 2], [1, 0, 1], [1, 1, 0])
        assert np.isnan(cells[Stratum.TREATABLE].delta)
        assert not cells[Stratum.TREATABLE].defined
        assert np.isnan(cells[Stratum.STABLE].delta)

    def test_equal_tables_give_zero(self):
        strata = [2] * 8
        decision = [1, 0, 0, 1, 1, 0, 0, 1]
        attribute = [0, 0, 0, 0, 1, 1, 1, 1]
        assert delta_by_stratum(strata, decision, attribute)[Stratum.BETTER_WITHOUT].delta == 0.0

    def test_agrees_with_loop_reference(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 60))
            s, d, a = rng.integers(0, 4, n), rng.integers(0, 2, n), rng.integers(0, 2, n)
            cells = delta_by_stratum(s, d, a)
            ref = _hand_delta(s, d, a)
            for h in Stratum:
                np.testing.assert_equal(cells[h].delta, ref[h])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            delta_by_stratum([0, 1], [1], [0, 1])


class TestSummaries:
    def test_single_true_draw_is_exact(self, rng):
        n = 200
        data = make_dataset(rng.integers(0, 2, n), rng.integers(0, 2, n), rng.integers(0, 2, n))
        strata = rng.integers(0, 4, n)
        report = summarize_strata_draws(data, [strata], seed=0)
        ref = _hand_delta(strata, data.decision, data.attribute)
        for h in Stratum:
            assert report.strata[h].delta_mean == ref[h]

    def test_unreliable_flag(self):
        data = make_dataset([1, 0, 1, 0], [1, 1, 0, 0], [0, 0, 0, 0])
        full = np.array([3, 3, 3, 3])
        # Severe is defined only in the first of four draws
        draws = [full, np.array([0, 0, 0, 0]), np.array([0, 0, 0, 0]), np.array([3, 0, 0, 0])]
        report = summarize_strata_draws(data, draws, seed=0)
        assert report.strata[Stratum.SEVERE].defined_fraction == 0.25
        assert report.strata[Stratum.SEVERE].unreliable
        assert report.strata[Stratum.STABLE].defined_fraction == 0.75
        assert not report.strata[Stratum.STABLE].unreliable
        assert Stratum.TREATABLE in report.unreliable_strata
        assert np.isnan(report.strata[Stratum.TREATABLE].delta_mean)

    def test_strata_proportion_sums_to_one_per_group(self, rng):
        n = 100
        data = make_dataset(rng.integers(0, 2, n), rng.integers(0, 2, n), rng.integers(0, 2, n))
        draws = [rng.integers(0, 4, n) for _ in range(5)]
        report = summarize_strata_draws(data, draws, seed=1)
        np.testing.assert_allclose(report.strata_proportion.sum(axis=0), [1.0, 1.0])
        assert report.delta_draws.shape == (5, 4)

    def test_bad_interval(self, rng):
        data = make_dataset([1, 0], [0, 1], [0, 1])
        with pytest.raises(ValueError):
            summarize_strata_draws(data, [np.array([0, 0])], interval="hpd")


class TestAssess:
    def _data(self, rng, n=120, m=2):
        return make_dataset(rng.integers(0, 2, n), rng.integers(0, 2, n), rng.integers(0, 2, n),
                            rng.normal(size=(n, m)))

    def test_degenerate_posteriors_single_draw(self, rng):
        data = self._data(rng)
        post0, post1 = _extreme(2, -40.0), _extreme(2, 40.0)
        report = assess_principal_fairness(data, post0, post1, S=1, seed=3, interval="sample")
        # treated rows get Y(0)=0, control rows get Y(1)=1
        y0 = np.where(data.decision == 1, 0, data.outcome)
        y1 = np.where(data.decision == 1, data.outcome, 1)
        ref = _hand_delta(y0 + 2 * y1, data.decision, data.attribute)
        for h in Stratum:
            s = report.strata[h]
            np.testing.assert_equal(s.delta_mean, ref[h])
            np.testing.assert_equal(s.delta_lower, ref[h])
            np.testing.assert_equal(s.delta_upper, ref[h])

    def test_population_interval_contains_mean(self, rng):
        data = self._data(rng)
        post = VariationalPosterior(np.zeros(3), np.full(3, -1.0))
        report = assess_principal_fairness(data, post, post, S=30, seed=1)
        for s in report.strata.values():
            if not np.isnan(s.delta_mean):
                assert s.delta_lower <= s.delta_mean <= s.delta_upper

    def test_seeded_reproducible(self, rng):
        data = self._data(rng)
        post = VariationalPosterior(np.array([0.2, -0.1, 0.0]), np.full(3, -1.0))
        a = assess_principal_fairness(data, post, post, S=10, seed=8)
        b = assess_principal_fairness(data, post, post, S=10, seed=8)
        np.testing.assert_array_equal(a.delta_draws, b.delta_draws)
        assert a.strata == b.strata

    def test_rejects_zero_draws(self, rng):
        data = self._data(rng)
        post = VariationalPosterior(np.zeros(3), np.zeros(3))
        with pytest.raises(ValueError):
            assess_principal_fairness(data, post, post, S=0)

    def test_fit_arm_models_layout(self, rng):
        data = self._data(rng, n=60, m=3)
        cfg = FitConfig(steps=20)
        fit0, fit1 = fit_arm_models(data, cfg)
        assert fit0.posterior.dim == fit1.posterior.dim == 4
        assert fit0.n_rows == int((data.decision == 0).sum())
        assert fit1.n_rows == int((data.decision == 1).sum())
        assert fit0.feature_names == ["x0", "x1", "x2", "intercept"]
        with_a, _ = fit_arm_models(data, cfg, use_attribute=True)
        assert with_a.feature_names == ["x0", "x1", "x2", "A", "intercept"]


class TestBaselines:
    def test_statistical_parity(self):
        sp = statistical_parity(_from_rows(PARITY_ROWS))
        assert sp.rates[1] == pytest.approx(2 / 3)
        assert sp.rates[0] == pytest.approx(1 / 3)
        assert sp.gap == pytest.approx(1 / 3)

    def test_calibration(self):
        np.testing.assert_allclose(calibration(_from_rows(CALIBRATION_ROWS)), [[1 / 2, 1], [1 / 3, 0]])

    def test_accuracy(self):
        np.testing.assert_allclose(accuracy_metric(_from_rows(ACCURACY_ROWS)), [[1 / 3, 1], [1, 1 / 2]])

    def test_constant_outcome_leaves_cells_undefined(self):
        data = _from_rows([(1, 0, 1), (0, 0, 1), (1, 1, 1), (0, 1, 1)])
        acc = accuracy_metric(data)
        assert np.all(np.isnan(acc[0]))
        np.testing.assert_allclose(acc[1], [0.5, 0.5])
        np.testing.assert_allclose(calibration(data), [[1, 1], [1, 1]])

    def test_single_group_parity_undefined(self):
        sp = statistical_parity(_from_rows([(1, 0, 0), (0, 0, 1)]))
        assert np.isnan(sp.rates[1])
        assert np.isnan(sp.gap)

    def test_bundle(self):
        m = associational_metrics(_from_rows(CALIBRATION_ROWS))
        np.testing.assert_allclose(m.calibration, calibration(_from_rows(CALIBRATION_ROWS)))
