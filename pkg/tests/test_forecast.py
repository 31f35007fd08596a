from datetime import date

import numpy as np
import pytest

from cryptosent.errors import ComputationError, InputError
from cryptosent.forecast import (
    Scenario,
    SplitSpec,
    evaluate,
    fit_predict,
    make_features,
    scenario_matrix,
    split,
    wide_table_rows,
)
from cryptosent.panel import SeriesPanel


def panel_from(columns: dict, start_ordinal=738000):
    names = tuple(columns)
    values = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    dates = tuple(date.fromordinal(start_ordinal + i) for i in range(values.shape[0]))
    return SeriesPanel(dates, names, values)


def planted_panel(T=2000, seed=0, coef=0.8, noise=1.0):
    """target_t = coef * tiktok_tsi_{t-1} + noise; twitter channel is pure noise."""
    rng = np.random.default_rng(seed)
    tiktok = np.clip(5.0 + np.cumsum(rng.normal(0, 0.4, T)) * 0.0 + rng.normal(0, 2.0, T), 0, 10)
    twitter = np.clip(5.0 + rng.normal(0, 2.0, T), 0, 10)
    target = np.empty(T)
    target[0] = rng.normal()
    target[1:] = coef * tiktok[:-1] + rng.normal(0, noise, T - 1)
    return panel_from({"target": target, "tiktok_tsi": tiktok, "twitter_tsi": twitter})


class TestSplit:
    def test_default_fractions_100(self):
        panel = panel_from({"x": np.arange(100.0)})
        train, val, test = split(panel)
        assert (train.n_dates, val.n_dates, test.n_dates) == (60, 10, 30)

    def test_floor_arithmetic_10(self):
        panel = panel_from({"x": np.arange(20.0)})
        train, val, test = split(panel, SplitSpec(0.6, 0.1, 0.3))
        assert (train.n_dates, val.n_dates, test.n_dates) == (12, 2, 6)

    def test_zero_fraction_rejected(self):
        with pytest.raises(InputError, match="positive"):
            SplitSpec(0.5, 0.5, 0.0)

    def test_chronological_contiguous(self):
        panel = panel_from({"x": np.arange(50.0)})
        train, val, test = split(panel)
        assert train.dates[-1] < val.dates[0] < test.dates[0]
        rejoined = list(train.dates) + list(val.dates) + list(test.dates)
        assert rejoined == list(panel.dates)


class TestMakeFeatures:
    def test_no_channel_column_count(self):
        panel = planted_panel(120, seed=1)
        ds = make_features(panel, Scenario("target"), lags=2)
        assert ds.X.shape[1] == 2
        assert ds.feature_names == ("target.l1", "target.l2")

    def test_two_channels_three_lags_nine_columns(self):
        panel = planted_panel(120, seed=2)
        ds = make_features(panel, Scenario("target", ("twitter", "tiktok")), lags=3)
        assert ds.X.shape[1] == 9

    def test_horizon_shortens_dataset(self):
        panel = planted_panel(60, seed=3)
        d1 = make_features(panel, Scenario("target", horizon=1), lags=2)
        d5 = make_features(panel, Scenario("target", horizon=5), lags=2)
        assert d1.n_rows - d5.n_rows == 4

    def test_lag_alignment(self):
        values = np.arange(10.0)
        panel = panel_from({"target": values})
        ds = make_features(panel, Scenario("target"), lags=2)
        # first row: origin t=1 -> predictors (y1, y0), response y2
        assert ds.X[0].tolist() == [1.0, 0.0]
        assert ds.y[0] == 2.0

    def test_missing_column_errors(self):
        panel = planted_panel(60, seed=4)
        with pytest.raises(InputError, match="no variable"):
            make_features(panel, Scenario("nope"), lags=1)

    def test_scale_filter_applies(self):
        panel = planted_panel(600, seed=5)
        plain = make_features(panel, Scenario("target"), lags=1)
        filtered = make_features(panel, Scenario("target", scale=32), lags=1)
        assert plain.n_rows == filtered.n_rows
        assert not np.allclose(plain.X, filtered.X)


class TestFitPredict:
    def datasets(self, panel, scenario, lags=2):
        tr, va, te = split(panel)
        return (
            make_features(tr, scenario, lags),
            make_features(va, scenario, lags),
            make_features(te, scenario, lags),
        )

    def test_constant_target_all_forecasters_exact(self):
        panel = panel_from({"target": np.full(200, 3.25)})
        tr, va, te = self.datasets(panel, Scenario("target"))
        for name in ("persistence", "ar", "ridge"):
            if name == "ar":
                # constant series make the AR design collinear with the intercept
                with pytest.raises(ComputationError):
                    fit_predict(name, tr, va, te)
                continue
            preds, _ = fit_predict(name, tr, va, te)
            assert evaluate(preds, te.y)["mse"] == pytest.approx(0.0, abs=1e-20)

    def test_ridge_limit_recovers_exact_linear_fit(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal(300).cumsum()
        target = np.empty(300)
        target[1:] = 2.0 * x[:-1]
        target[0] = 0.0
        panel = panel_from({"target": target, "twitter_tsi": np.clip(5 + x, 0, 10)})
        # direct check of the shrinkage limit on a full-rank problem
        from cryptosent.forecast import _ridge_fit

        X = rng.standard_normal((100, 3))
        beta_true = np.array([1.5, -2.0, 0.5])
        y = X @ beta_true + 1.0
        beta_small, intercept, _ = _ridge_fit(X, y, 1e-8)
        assert np.abs(beta_small - beta_true).max() < 1e-6
        beta_grid, _, _ = _ridge_fit(X, y, 1e-4)
        assert np.abs(beta_grid - beta_true).max() < 1e-3

    def test_ar_beats_persistence_on_ar1(self):
        rng = np.random.default_rng(7)
        T = 1200
        y = np.zeros(T)
        for t in range(1, T):
            y[t] = 0.8 * y[t - 1] + rng.standard_normal()
        panel = panel_from({"target": y})
        tr, va, te = self.datasets(panel, Scenario("target"))
        ar_preds, _ = fit_predict("ar", tr, va, te)
        p_preds, _ = fit_predict("persistence", tr, va, te)
        assert evaluate(ar_preds, te.y)["mse"] < evaluate(p_preds, te.y)["mse"]

    def test_singular_system_suggests_ridge(self):
        X = np.ones((30, 2))
        y = np.arange(30.0)
        from cryptosent.forecast import Dataset, _lstsq_fit

        with pytest.raises(ComputationError, match="ridge"):
            _lstsq_fit(X, y)


class TestEvaluate:
    def test_identity(self):
        assert evaluate(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == {"mse": 0.0, "mae": 0.0}

    def test_hand_arithmetic(self):
        metrics = evaluate(np.array([1.0, 2.0]), np.array([2.0, 4.0]))
        assert metrics["mse"] == pytest.approx(2.5, abs=1e-15)
        assert metrics["mae"] == pytest.approx(1.5, abs=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(InputError, match="length"):
            evaluate(np.array([1.0]), np.array([1.0, 2.0]))

    def test_permutation_covariance(self):
        rng = np.random.default_rng(8)
        p, a = rng.standard_normal(50), rng.standard_normal(50)
        base = evaluate(p, a)
        perm = rng.permutation(50)
        assert evaluate(p[perm], a[perm]) == base

    def test_jensen_inequality(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            p, a = rng.standard_normal(30), rng.standard_normal(30)
            m = evaluate(p, a)
            assert m["mae"] ** 2 <= m["mse"] + 1e-12


class TestScenarioMatrix:
    def test_duplicate_scenarios_identical_cells(self):
        panel = planted_panel(400, seed=10)
        s = Scenario("target", ("tiktok",))
        report = scenario_matrix(panel, [s, Scenario("target", ("tiktok",))])
        a, b = report.cells
        assert (a.mse, a.mae) == (b.mse, b.mae)

    def test_planted_signal_beats_baseline(self):
        panel = planted_panel(2000, seed=11)
        baseline = Scenario("target", ())
        tiktok = Scenario("target", ("tiktok",))
        report = scenario_matrix(panel, [baseline, tiktok], baseline_channels=())
        improvement = report.cell(tiktok).improvement_mse
        assert improvement is not None and improvement > 0.20

    def test_noise_channel_within_five_percent(self):
        panel = planted_panel(2000, seed=12)
        baseline = Scenario("target", ())
        noise = Scenario("target", ("twitter",))
        report = scenario_matrix(panel, [baseline, noise], baseline_channels=())
        improvement = report.cell(noise).improvement_mse
        assert improvement is not None and abs(improvement) < 0.05

    def test_no_leakage_parameters_bit_identical(self):
        panel = planted_panel(800, seed=13)
        scenario = Scenario("target", ("tiktok",))
        tr, va, te = split(panel)
        train = make_features(tr, scenario, 2)
        val = make_features(va, scenario, 2)
        test = make_features(te, scenario, 2)
        _, info = fit_predict("ridge", train, val, test)

        # corrupt the test period only and rebuild
        rng = np.random.default_rng(99)
        values = panel.values.copy()
        n_test = te.n_dates
        values[-n_test:, 0] = rng.standard_normal(n_test)
        corrupted = SeriesPanel(panel.dates, panel.variables, values)
        tr2, va2, te2 = split(corrupted)
        train2 = make_features(tr2, scenario, 2)
        val2 = make_features(va2, scenario, 2)
        test2 = make_features(te2, scenario, 2)
        _, info2 = fit_predict("ridge", train2, val2, test2)

        assert info.penalty == info2.penalty
        assert np.array_equal(info.coefficients, info2.coefficients)
        assert info.intercept == info2.intercept

    def test_failed_scenario_recorded_matrix_completes(self):
        panel = planted_panel(400, seed=14)
        good = Scenario("target", ("tiktok",))
        bad = Scenario("missing_column")
        report = scenario_matrix(panel, [good, bad])
        assert report.cell(bad).error is not None
        assert report.cell(good).error is None

    def test_best_flags_within_group(self):
        panel = planted_panel(900, seed=15)
        scenarios = [Scenario("target", ()), Scenario("target", ("tiktok",)), Scenario("target", ("twitter",))]
        report = scenario_matrix(panel, scenarios, baseline_channels=())
        best = [c for c in report.cells if c.best_mse]
        assert len(best) == 1
        assert best[0].mse == min(c.mse for c in report.cells)


class TestWideTable:
    def test_paper_shaped_fixture_row(self):
        # formatting fixture: a (window 7, twitter-only) cell rendering 1.373 / 0.792
        from cryptosent.forecast import ForecastReport, ReportCell

        cell = ReportCell(Scenario("BTCPRC", ("twitter",), 7), mse=1.373, mae=0.792, n_test=100)
        report = ForecastReport((cell,))
        rows = wide_table_rows(report, ["BTCPRC"])
        assert rows[0] == ["Window Size", "Scenario", "BTCPRC MSE", "BTCPRC MAE"]
        assert rows[1] == ["7", "twitter", "1.373", "0.792"]
