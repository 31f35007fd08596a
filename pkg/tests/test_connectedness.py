from datetime import date

import numpy as np
import pytest

from cryptosent.connectedness import (
    default_threshold,
    directional_measures,
    dynamic_connectedness,
    gfevd,
    network_document,
    static_connectedness,
    table_to_csv_rows,
    tci_series_document,
    to_dot,
)
from cryptosent.errors import ComputationError, InputError
from cryptosent.var import VarModel, ma_coefficients
from oracles import companion_gfevd, random_covariance, random_stable_var


def model_of(coeffs, sigma=None, names=None):
    coeffs = [np.asarray(c, dtype=float) for c in coeffs]
    N = coeffs[0].shape[0]
    sigma = np.eye(N) if sigma is None else np.asarray(sigma, dtype=float)
    names = names or tuple(f"v{j}" for j in range(N))
    return VarModel(tuple(names), len(coeffs), np.zeros(N), tuple(coeffs), np.zeros((10, N)), sigma)


class TestGfevd:
    def test_identity_ma_identity_sigma(self):
        theta = gfevd([np.eye(3)], np.eye(3))
        assert np.array_equal(theta, np.eye(3))

    def test_identity_ma_diagonal_sigma(self):
        theta = gfevd([np.eye(2)], np.diag([4.0, 9.0]))
        assert np.allclose(theta, np.eye(2), atol=1e-15)

    def test_bivariate_vs_bruteforce_oracle(self):
        phi = np.array([[0.5, 0.3], [0.0, 0.5]])
        model = model_of([phi])
        theta = gfevd(ma_coefficients(model, 10), np.eye(2))
        expected = companion_gfevd([phi], np.eye(2), 10)
        assert np.abs(theta - expected).max() < 1e-10

    def test_fuzzed_vars_match_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            N = int(rng.integers(2, 5))
            p = int(rng.integers(1, 4))
            H = int(rng.integers(1, 15))
            coeffs = random_stable_var(rng, N, p)
            sigma = random_covariance(rng, N)
            theta = gfevd(ma_coefficients(model_of(coeffs, sigma), H), sigma)
            expected = companion_gfevd(coeffs, sigma, H)
            assert np.abs(theta - expected).max() < 1e-10
            assert np.abs(theta.sum(axis=1) - 1.0).max() < 1e-10

    def test_zero_diagonal_sigma_errors(self):
        sigma = np.diag([1.0, 0.0])
        with pytest.raises(ComputationError, match="diagonal"):
            gfevd([np.eye(2)], sigma)

    def test_h_convergence_on_stable_var(self):
        phi = np.array([[0.6, 0.2], [0.1, 0.5]])
        model = model_of([phi])
        prev = None
        for H in range(30, 61, 10):
            theta = gfevd(ma_coefficients(model, H), np.eye(2))
            if prev is not None:
                assert np.abs(theta - prev).max() < 1e-8
            prev = theta


class TestDirectionalMeasures:
    def test_identity_theta_no_spillover(self):
        table = directional_measures(np.eye(3), ("a", "b", "c"))
        assert np.array_equal(table.to_others, np.zeros(3))
        assert np.array_equal(table.from_others, np.zeros(3))
        assert np.array_equal(table.net, np.zeros(3))
        assert table.tci == 0.0

    def test_uniform_mixing(self):
        N = 4
        table = directional_measures(np.full((N, N), 1.0 / N), tuple("abcd"))
        assert np.allclose(table.from_others, (N - 1) / N, atol=1e-15)
        assert table.tci == pytest.approx(100.0 * (N - 1) / N, abs=1e-12)

    def test_corrected_denominator_flag(self):
        N = 4
        table = directional_measures(np.full((N, N), 1.0 / N), tuple("abcd"), corrected=True)
        assert table.tci == pytest.approx(100.0 * (N - 1) / N * N / (N - 1), abs=1e-12)

    def test_net_identities(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            N = int(rng.integers(2, 6))
            raw = rng.random((N, N)) + 0.01
            theta = raw / raw.sum(axis=1, keepdims=True)
            table = directional_measures(theta, tuple(f"v{j}" for j in range(N)))
            assert np.array_equal(table.net, table.to_others - table.from_others)
            assert abs(table.net.sum()) < 1e-10
            assert np.abs(table.npdc + table.npdc.T).max() < 1e-15
            assert table.to_others.sum() == pytest.approx(table.from_others.sum(), abs=1e-12)
            # TCI equals the mean of FROM x100 for the default denominator
            assert table.tci == pytest.approx(100.0 * table.from_others.mean(), abs=1e-10)

    def test_non_row_stochastic_rejected(self):
        with pytest.raises(InputError, match="sum to 1"):
            directional_measures(np.full((2, 2), 0.7), ("a", "b"))

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(2)
        raw = rng.random((4, 4)) + 0.1
        theta = raw / raw.sum(axis=1, keepdims=True)
        names = ("a", "b", "c", "d")
        base = directional_measures(theta, names)
        perm = [2, 0, 3, 1]
        permuted = directional_measures(theta[np.ix_(perm, perm)], tuple(names[i] for i in perm))
        assert np.allclose(permuted.net, base.net[perm], atol=1e-14)
        assert permuted.tci == pytest.approx(base.tci, abs=1e-12)
        assert np.allclose(permuted.npdc, base.npdc[np.ix_(perm, perm)], atol=1e-14)


class TestDynamic:
    def test_constant_h_equals_static(self):
        phi = np.array([[0.5, 0.2], [0.1, 0.4]])
        sigma = np.array([[1.0, 0.3], [0.3, 2.0]])
        model = model_of([phi], sigma)
        static = static_connectedness(model, horizon=10)
        days = tuple(date.fromordinal(738000 + i) for i in range(5))
        h_path = np.tile(sigma, (5, 1, 1))
        tables = dynamic_connectedness(model, h_path, days, horizon=10)
        assert len(tables) == 5
        for t in tables:
            assert np.array_equal(
                np.round(t.theta, 12), np.round(static.theta, 12)
            )
            assert round(t.tci, 12) == round(static.tci, 12)

    def test_univariate_tci_zero(self):
        model = model_of([np.array([[0.5]])])
        days = (date(2022, 1, 1), date(2022, 1, 2))
        tables = dynamic_connectedness(model, np.ones((2, 1, 1)), days)
        assert all(t.tci == 0.0 for t in tables)

    def test_alternating_h_matches_per_day_static(self):
        phi = np.array([[0.4, 0.1], [0.2, 0.3]])
        model = model_of([phi])
        h1 = np.array([[1.0, 0.2], [0.2, 1.0]])
        h2 = np.array([[2.0, -0.4], [-0.4, 1.5]])
        days = tuple(date.fromordinal(738100 + i) for i in range(4))
        tables = dynamic_connectedness(model, np.array([h1, h2, h1, h2]), days, horizon=8)
        ma = ma_coefficients(model, 8)
        for t, H in zip(tables, (h1, h2, h1, h2)):
            expected = directional_measures(gfevd(ma, H), model.names)
            assert np.array_equal(t.theta, expected.theta)
        assert np.array_equal(tables[0].theta, tables[2].theta)
        assert not np.array_equal(tables[0].theta, tables[1].theta)

    def test_non_pd_day_skipped_with_warning(self):
        model = model_of([np.array([[0.4, 0.0], [0.0, 0.4]])])
        good = np.eye(2)
        bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # indefinite
        days = tuple(date.fromordinal(738200 + i) for i in range(3))
        with pytest.warns(UserWarning, match="skipping"):
            tables = dynamic_connectedness(model, np.array([good, bad, good]), days)
        assert len(tables) == 2
        with pytest.raises(ComputationError):
            dynamic_connectedness(model, np.array([good, bad]), days[:2], on_bad_day="abort")


class TestNetworkExport:
    def table_from(self, theta, names):
        return directional_measures(np.asarray(theta, dtype=float), names)

    def test_identity_no_edges(self):
        doc = network_document(self.table_from(np.eye(3), ("a", "b", "c")), threshold=0.01)
        assert doc["edges"] == []

    def test_npdc_edge_direction_and_weight(self):
        # theta with theta_ba > theta_ab: NPDC_ab = 0.2 > 0.1 threshold -> edge b->a
        theta = np.array([[0.7, 0.3], [0.1, 0.9]])
        table = self.table_from(theta, ("a", "b"))
        assert table.npdc[0, 1] == pytest.approx(-0.2, abs=1e-15)
        assert table.npdc[1, 0] == pytest.approx(0.2, abs=1e-15)
        doc = network_document(table, threshold=0.1, mode="net-pairwise")
        assert len(doc["edges"]) == 1
        edge = doc["edges"][0]
        # NPDC_ba = 0.2 exceeds the threshold, so the edge runs a->b
        assert edge == {"from": "a", "to": "b", "weight": pytest.approx(0.2)}

    def test_uniform_gross_complete_digraph(self):
        N = 4
        table = self.table_from(np.full((N, N), 1.0 / N), tuple("abcd"))
        doc = network_document(table, threshold=0.0, mode="gross")
        assert len(doc["edges"]) == N * (N - 1)

    def test_dot_renders(self):
        table = self.table_from(np.array([[0.8, 0.2], [0.4, 0.6]]), ("x", "y"))
        doc = network_document(table, threshold=0.05, mode="gross")
        dot = to_dot(doc, comment="hdr")
        assert dot.startswith("// hdr")
        assert '"x"' in dot and "->" in dot

    def test_default_threshold_percentile(self):
        rng = np.random.default_rng(3)
        raw = rng.random((5, 5)) + 0.05
        theta = raw / raw.sum(axis=1, keepdims=True)
        table = self.table_from(theta, tuple(f"v{i}" for i in range(5)))
        thr = default_threshold(table, "gross")
        off = table.theta[~np.eye(5, dtype=bool)]
        assert thr == pytest.approx(np.percentile(np.abs(off), 75))


class TestCsvAndSeries:
    def test_csv_rows_structure(self):
        theta = np.array([[0.8, 0.2], [0.4, 0.6]])
        table = directional_measures(theta, ("A", "B"))
        rows = table_to_csv_rows(table)
        assert rows[0] == ["variable", "A", "B", "FROM"]
        assert rows[1][0] == "A" and rows[-1][0] == "TCI"
        assert float(rows[1][1]) == pytest.approx(80.0)

    def test_tci_series_document(self):
        theta = np.eye(2)
        t1 = directional_measures(theta, ("A", "B"), day=date(2022, 1, 1))
        docs = tci_series_document([t1])
        assert docs[0]["date"] == "2022-01-01"
        assert docs[0]["net"] == {"A": 0.0, "B": 0.0}
