"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with `pytest -s` to see the lines on success).
"""

import csv
import json
import subprocess
import sys
import time
from contextlib import contextmanager
from datetime import date

import numpy as np
import pytest
from statsmodels.tsa.stattools import adfuller

from cryptosent import garch, multiscale, topics
from cryptosent.connectedness import directional_measures, dynamic_connectedness, gfevd, static_connectedness
from cryptosent.diagnostics import adf_test
from cryptosent.forecast import Scenario, fit_predict, make_features, scenario_matrix, split
from cryptosent.panel import SeriesPanel
from cryptosent.sentiment import aggregate_tsi, merge_index_series
from cryptosent.var import VarModel, ma_coefficients
from oracles import companion_gfevd, naive_pearson, random_covariance, random_stable_var

from test_forecast import planted_panel
from test_sentiment import rec
from test_topics import synthetic_topic_corpus


@contextmanager
def criterion(number, name):
    started = time.time()
    try:
        yield
    except BaseException:
        print(f"[criterion {number:02d}] {name}: FAIL ({time.time() - started:.1f}s)")
        raise
    print(f"[criterion {number:02d}] {name}: PASS ({time.time() - started:.1f}s)")


def model_of(coeffs, sigma):
    coeffs = [np.asarray(c, dtype=float) for c in coeffs]
    N = coeffs[0].shape[0]
    return VarModel(
        tuple(f"v{j}" for j in range(N)), len(coeffs), np.zeros(N), tuple(coeffs),
        np.zeros((10, N)), np.asarray(sigma, dtype=float),
    )


def test_criterion_01_gfevd_against_bruteforce_oracle():
    with criterion(1, "GFEVD matches brute-force oracle on 50 fuzzed stable VARs"):
        started = time.time()
        rng = np.random.default_rng(2024)
        for _ in range(50):
            N = int(rng.integers(2, 6))
            p = int(rng.integers(1, 4))
            H = int(rng.integers(1, 21))
            coeffs = random_stable_var(rng, N, p)
            sigma = random_covariance(rng, N)
            model = model_of(coeffs, sigma)
            theta = gfevd(ma_coefficients(model, H), sigma)
            oracle = companion_gfevd(coeffs, sigma, H)
            assert np.abs(theta - oracle).max() < 1e-10
            assert np.abs(theta.sum(axis=1) - 1.0).max() < 1e-10
            table = directional_measures(theta, model.names)
            assert abs(table.net.sum()) < 1e-10
        assert time.time() - started < 10.0


def test_criterion_02_connectedness_reductions():
    with criterion(2, "identity/diagonal reductions and constant-H dynamic==static"):
        theta = gfevd([np.eye(3)], np.diag([4.0, 9.0, 0.25]))
        assert np.array_equal(theta, np.eye(3))
        table = directional_measures(theta, ("a", "b", "c"))
        assert table.tci == 0.0

        phi = np.array([[0.5, 0.2, 0.0], [0.1, 0.4, 0.1], [0.0, 0.2, 0.3]])
        sigma = random_covariance(np.random.default_rng(8), 3)
        model = model_of([phi], sigma)
        static = static_connectedness(model, horizon=10)
        days = tuple(date.fromordinal(738000 + i) for i in range(7))
        tables = dynamic_connectedness(model, np.tile(sigma, (7, 1, 1)), days, horizon=10)
        for t in tables:
            assert np.array_equal(np.round(t.theta, 12), np.round(static.theta, 12))
            assert np.array_equal(np.round(t.net, 12), np.round(static.net, 12))
            assert round(t.tci, 12) == round(static.tci, 12)


def test_criterion_03_garch_recovery_and_gradient():
    with criterion(3, "GARCH(1,1) parameter recovery and analytic gradient"):
        started = time.time()
        truth = np.array([0.1, 0.1, 0.8])
        errors = []
        for seed in range(10):
            eps = garch.simulate_garch11(0.1, 0.1, 0.8, 5000, seed=seed)
            fit = garch.fit_garch11(eps)
            errors.append(np.abs(np.array([fit.omega, fit.alpha, fit.beta]) - truth))
        median_error = np.median(np.array(errors), axis=0)
        assert (median_error <= 0.05).all(), median_error

        rng = np.random.default_rng(1)
        eps = garch.simulate_garch11(0.1, 0.1, 0.8, 600, seed=99)
        for _ in range(5):
            omega = float(rng.uniform(0.05, 0.4))
            alpha = float(rng.uniform(0.02, 0.3))
            beta = float(rng.uniform(0.3, 0.95 - alpha))
            _, grad = garch.garch_negative_loglik_grad(eps, omega, alpha, beta)
            step = 1e-5
            for i, base in enumerate((omega, alpha, beta)):
                params = [omega, alpha, beta]
                params[i] = base + step
                up = garch.garch_negative_loglik(eps, *params)
                params[i] = base - step
                down = garch.garch_negative_loglik(eps, *params)
                fd = (up - down) / (2 * step)
                assert abs(grad[i] - fd) / max(1.0, abs(fd)) <= 1e-4
        assert time.time() - started < 60.0


def test_criterion_04_dcc_sanity():
    with criterion(4, "DCC fixed point, recovery, and correlation validity"):
        qbar = np.array([[1.0, 0.4, 0.2], [0.4, 1.0, 0.5], [0.2, 0.5, 1.0]])
        z = garch.simulate_dcc(0.05, 0.90, qbar, T=4000, seed=3)

        _, r_path = garch.dcc_correlation_path(z, 0.0, 0.0)
        expected = np.corrcoef(z.T)
        assert np.abs(r_path - expected).max() < 1e-12

        fit = garch.fit_dcc(z)
        assert abs(fit.a - 0.05) <= 0.05
        assert abs(fit.b - 0.90) <= 0.05
        diag = np.diagonal(fit.r_path, axis1=1, axis2=2)
        assert np.abs(diag - 1.0).max() == 0.0
        assert min(np.linalg.eigvalsh(r).min() for r in fit.r_path) > -1e-10


def test_criterion_05_adf_behavior():
    with criterion(5, "ADF rejection behavior and reference-oracle agreement"):
        rejections = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            y = np.empty(500)
            y[0] = rng.standard_normal()
            for t in range(1, 500):
                y[t] = 0.5 * y[t - 1] + rng.standard_normal()
            if adf_test(y, "constant", max_lag=0).reject["5%"]:
                rejections += 1
        assert rejections >= 19, rejections

        non_rejections = 0
        for seed in range(20):
            rng = np.random.default_rng(1000 + seed)
            y = np.cumsum(rng.standard_normal(500))
            if not adf_test(y, "constant", max_lag=0).reject["5%"]:
                non_rejections += 1
        assert non_rejections >= 18, non_rejections

        for seed in range(5):
            rng = np.random.default_rng(seed)
            y = np.cumsum(rng.standard_normal(300)) if seed % 2 else rng.standard_normal(300).cumsum() * 0.2 + rng.standard_normal(300)
            lag = seed % 3
            ours = adf_test(y, "constant", max_lag=lag).statistic
            ref = adfuller(y, maxlag=lag, regression="c", autolag=None)[0]
            assert abs(ours - ref) < 1e-6


def test_criterion_06_rolling_correlation():
    with criterion(6, "rolling correlation equals naive Pearson recomputation"):
        rng = np.random.default_rng(6)
        for _ in range(15):
            T = int(rng.integers(15, 120))
            w = int(rng.integers(3, min(T, 20)))
            x = rng.standard_normal(T).cumsum()
            y = 0.4 * x + rng.standard_normal(T)
            series = multiscale.rolling_corr(x, y, window=w)
            for k, e in enumerate(range(w - 1, T)):
                expected = naive_pearson(x[e - w + 1 : e + 1], y[e - w + 1 : e + 1])
                assert abs(series.values[k] - expected) < 1e-10

        x = rng.standard_normal(80)
        assert np.allclose(multiscale.rolling_corr(x, x, 7).values, 1.0, atol=1e-12)

        hand = multiscale.rolling_corr(np.array([1.0, 2, 3, 4]), np.array([1.0, 3, 2, 4]), 4)
        assert abs(hand.values[0] - 0.8) < 1e-12


def test_criterion_07_modwt_reconstruction_and_energy():
    with criterion(7, "MODWT additive reconstruction and energy preservation"):
        rng = np.random.default_rng(7)
        for k in range(20):
            T = int(rng.integers(64, 600))
            x = rng.standard_normal(T).cumsum() * float(rng.uniform(0.2, 5.0))
            J = int(rng.integers(1, 7))
            filt = ("haar", "d4")[k % 2]
            dec = multiscale.modwt(x, filt, J)
            assert np.abs(dec.reconstruct() - x).max() < 1e-8
            energy = sum(float(np.mean(w**2)) for w in dec.coeff_details) + float(
                np.var(dec.coeff_smooth)
            )
            assert abs(energy - float(np.var(x))) < 1e-6 * max(1.0, float(np.var(x)))


def test_criterion_08_tsi():
    with criterion(8, "TSI shard-merge equivalence, bounds, and exact mean"):
        series = aggregate_tsi([rec(1, 7, "a"), rec(1, 8, "b"), rec(1, 3, "c")], "twitter")
        assert series.tsi[0] == 6.0

        rng = np.random.default_rng(8)
        for trial in range(20):
            records = [
                rec(1 + int(rng.integers(0, 7)), float(rng.uniform(0, 10)), f"r{trial}-{i}")
                for i in range(int(rng.integers(5, 120)))
            ]
            single = aggregate_tsi(records, "twitter")
            by_day = {}
            for r in records:
                by_day.setdefault(r.utc_day(), []).append(r.score)
            for d, v in zip(single.dates, single.tsi):
                assert min(by_day[d]) - 1e-12 <= v <= max(by_day[d]) + 1e-12
            n_shards = int(rng.integers(2, 6))
            shards = [records[k::n_shards] for k in range(n_shards)]
            merged = merge_index_series([aggregate_tsi(s, "twitter") for s in shards])
            assert merged.dates == single.dates
            assert np.max(np.abs(merged.tsi - single.tsi)) < 1e-12


def test_criterion_09_lda_and_kmeans():
    with criterion(9, "LDA recovers disjoint topics; k-means inertia monotone"):
        docs, truth = synthetic_topic_corpus(1000, seed=5)
        corpus = topics.preprocess(docs, stopwords=[])
        vocab_index = {w: i for i, w in enumerate(corpus.vocabulary)}
        all_words = [f"t{k}w{i}" for k in range(3) for i in range(12)]
        remap = np.zeros_like(truth)
        for col, w in enumerate(all_words):
            remap[:, vocab_index[w]] = truth[:, col]
        model = topics.lda_gibbs(corpus, 3, iterations=150, seed=2)
        matched = set()
        for k in range(3):
            cosines = [
                float(
                    model.phi[k]
                    @ remap[j]
                    / (np.linalg.norm(model.phi[k]) * np.linalg.norm(remap[j]))
                )
                for j in range(3)
            ]
            j = int(np.argmax(cosines))
            assert cosines[j] >= 0.95, cosines
            matched.add(j)
        assert matched == {0, 1, 2}

        rng = np.random.default_rng(9)
        for trial in range(10):
            points = rng.standard_normal((int(rng.integers(30, 150)), int(rng.integers(2, 6))))
            result = topics.kmeans(points, k=int(rng.integers(2, 8)), seed=trial)
            for a, b in zip(result.inertia_path, result.inertia_path[1:]):
                assert b <= a + 1e-9


def test_criterion_10_forecast_harness():
    with criterion(10, "planted-signal forecasting, noise robustness, no leakage"):
        started = time.time()
        panel = planted_panel(2000, seed=11)
        baseline = Scenario("target", ())
        tiktok = Scenario("target", ("tiktok",))
        noise = Scenario("target", ("twitter",))
        report = scenario_matrix(panel, [baseline, tiktok, noise], baseline_channels=())
        assert report.cell(tiktok).improvement_mse > 0.20
        assert abs(report.cell(noise).improvement_mse) < 0.05
        for cell in report.cells:
            assert cell.mae**2 <= cell.mse + 1e-12

        # replacing test-period targets with noise must not move fitted parameters
        tr, va, te = split(panel)
        scenario = Scenario("target", ("tiktok",))
        fit_args = [make_features(p, scenario, 3) for p in (tr, va, te)]
        _, info = fit_predict("ridge", *fit_args)
        values = panel.values.copy()
        values[-te.n_dates :, 0] = np.random.default_rng(0).standard_normal(te.n_dates)
        corrupted = SeriesPanel(panel.dates, panel.variables, values)
        tr2, va2, te2 = split(corrupted)
        fit_args2 = [make_features(p, scenario, 3) for p in (tr2, va2, te2)]
        _, info2 = fit_predict("ridge", *fit_args2)
        assert info.penalty == info2.penalty
        assert np.array_equal(info.coefficients, info2.coefficients)
        assert info.intercept == info2.intercept
        assert time.time() - started < 60.0


def test_criterion_11_pipeline_determinism_and_table_layouts(tmp_path):
    with criterion(11, "report-all determinism and paper-shaped CSV layouts"):
        def cli(*args):
            return subprocess.run(
                [sys.executable, "-m", "cryptosent.cli", *args],
                capture_output=True,
                text=True,
                cwd=tmp_path,
            )

        r = cli("synth", "--out", str(tmp_path / "data"), "--days", "350", "--seed", "11")
        assert r.returncode == 0, r.stderr
        cfg = str(tmp_path / "data" / "config.yaml")
        out = tmp_path / "out"
        r1 = cli("report-all", "--config", cfg, "--out", str(out))
        assert r1.returncode == 0, r1.stderr
        first = (out / "manifest.json").read_text()
        r2 = cli("report-all", "--config", cfg, "--out", str(out))
        assert r2.returncode == 0, r2.stderr
        assert (out / "manifest.json").read_text() == first

        with open(out / "table3.csv", newline="") as fh:
            rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
        header, adf_row, jb_row = rows
        assert header[0] == "Test"
        for coin in ("BTC", "DOGE", "USDT"):
            assert f"{coin}PRC" in header and f"{coin}VOL" in header
        assert header[-2:] == ["Twitter Sent.", "TikTok Sent."]
        assert adf_row[0] == "ADF Statistics" and jb_row[0] == "Jarque--Bera"

        with open(out / "table4.csv", newline="") as fh:
            rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
        header = rows[0]
        assert header[:2] == ["Window Size", "Scenario"]
        assert all(h.endswith(("MSE", "MAE")) for h in header[2:])
        labels = {row[1] for row in rows[1:]}
        assert {"twitter", "tiktok", "twitter+tiktok"} <= labels
        manifest = json.loads(first)
        assert "table3.csv" in manifest["artifacts"] and "table4.csv" in manifest["artifacts"]
