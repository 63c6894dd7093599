import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prodsearch import _accel
from prodsearch.errors import DataError, DimensionMismatch
from prodsearch.svr import (
    ConvergenceWarning,
    Standardizer,
    SvrConfig,
    SvrModel,
    ZeroVarianceWarning,
    predict,
    rbf_gram,
    rbf_kernel,
    smo_solve,
    smo_train,
)
from oracles import svr_dual_objective, svr_dual_oracle
from svr_cases import compare, random_instances

TIGHT = SvrConfig(tolerance=1e-6)


def _problem(seed=0, n=40, d=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = np.clip(2 + 0.5 * X[:, 0] - 0.3 * X[:, 1] + 0.1 * rng.normal(size=n), 1, 3)
    return X, y


def _kkt_gap(beta, K, y, eps, C, rho):
    """Largest violation of the first-order conditions of the dual."""
    g = y - K @ beta  # gradient of the concave dual without the eps term
    worst = 0.0
    for i, b in enumerate(beta):
        r = g[i] + rho  # y_i - f(x_i)
        if abs(b) < 1e-12:
            worst = max(worst, abs(r) - eps)
        elif abs(b) > C - 1e-12:
            worst = max(worst, eps - np.sign(b) * r)
        else:
            worst = max(worst, abs(r - eps * np.sign(b)))
    return worst


class TestKernel:
    def test_examples(self):
        x = np.array([0.3, -1.2])
        assert rbf_kernel(x, x, 0.01) == 1.0
        assert abs(rbf_kernel(np.zeros(2), np.ones(2), 0.01) - math.exp(-0.02)) < 1e-15
        assert round(rbf_kernel(np.zeros(2), np.ones(2), 0.01), 6) == 0.980199
        assert abs(rbf_kernel(np.zeros(3), np.full(3, 5.0), 1e-15) - 1.0) < 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            rbf_kernel(np.zeros(2), np.zeros(3), 0.1)

    def test_gram_matches_pairwise(self):
        X, _ = _problem(n=6)
        G = rbf_gram(X, X, 0.3)
        for i in range(6):
            for j in range(6):
                assert abs(G[i, j] - rbf_kernel(X[i], X[j], 0.3)) < 1e-14


class TestConfig:
    @pytest.mark.parametrize("field", ["c", "gamma", "epsilon", "tolerance"])
    def test_positive(self, field):
        with pytest.raises(ValueError):
            SvrConfig(**{field: 0.0})

    def test_table_defaults(self):
        c = SvrConfig()
        assert (c.c, c.gamma, c.epsilon, c.tolerance) == (1.0, 0.01, 0.001, 0.001)


class TestTraining:
    def test_constant_labels(self):
        X, _ = _problem(n=10)
        m = smo_train(X, np.full(10, 2.33))
        assert m.degenerate and len(m.dual_coefficients) == 0 and m.bias == 2.33
        assert np.all(m.predict(X) == 2.33)
        assert predict(m, X[0]) == 2.33

    def test_dual_feasibility(self):
        X, y = _problem()
        m = smo_train(X, y, SvrConfig(c=0.5))
        assert abs(m.dual_coefficients.sum()) < 1e-9
        assert np.all(np.abs(m.dual_coefficients) <= 0.5 + 1e-12)
        assert np.all(m.dual_coefficients != 0)

    def test_kkt_satisfied_at_convergence(self):
        X, y = _problem(seed=3)
        cfg = SvrConfig(gamma=0.5)
        Z = Standardizer.fit(X).transform(X)
        beta, rho, _, gap, _ = smo_solve(Z, y, cfg)
        assert gap <= cfg.tolerance
        K = rbf_gram(Z, Z, cfg.gamma)
        assert _kkt_gap(beta, K, y, cfg.epsilon, cfg.c, rho) <= cfg.tolerance + 1e-9

    def test_objective_monotone_in_debug_mode(self):
        X, y = _problem(seed=5)
        m = smo_train(X, y, SvrConfig(gamma=0.3), debug=True)
        trace = np.asarray(m.extra["objective_trace"])
        assert trace.size > 1
        assert np.all(np.diff(trace) <= 1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_permutation_invariance(self, seed):
        X, y = _problem(seed=seed, n=25)
        perm = np.random.default_rng(seed).permutation(25)
        a = smo_train(X, y, TIGHT)
        b = smo_train(X[perm], y[perm], TIGHT)
        probe = np.random.default_rng(99).normal(size=(30, 3))
        assert np.abs(a.decision_function(probe) - b.decision_function(probe)).max() < 1e-6

    @pytest.mark.parametrize("case", range(10))
    def test_matches_oracle_tight_tolerance(self, case):
        X, y = list(random_instances(10, seed=123))[case]
        obj_gap, pred_gap, _, _ = compare(X, y, TIGHT)
        assert obj_gap < 1e-6 and pred_gap < 1e-4

    def test_points_inside_tube_predicted_within_epsilon(self):
        for X, y in random_instances(10, seed=7):
            obj_gap, pred_gap, model, beta_o = compare(X, y, TIGHT)
            inside = np.abs(beta_o) < 1e-9
            err = np.abs(model.decision_function(X) - y)[inside]
            assert np.all(err <= TIGHT.epsilon + 1e-4)

    def test_zero_variance_column_dropped(self):
        X, y = _problem(n=20)
        Xc = np.column_stack([X, np.full(20, 4.0)])
        with pytest.warns(ZeroVarianceWarning):
            m = smo_train(Xc, y, feature_names=["a", "b", "c", "const"])
        assert m.standardizer.keep.tolist() == [True, True, True, False]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ZeroVarianceWarning)
            plain = smo_train(X, y)
        assert np.allclose(m.decision_function(Xc), plain.decision_function(X), atol=1e-12)

    def test_iteration_cap_warns(self):
        X, y = _problem(n=60)
        with pytest.warns(ConvergenceWarning):
            m = smo_train(X, y, SvrConfig(gamma=1.0, max_passes=3))
        assert not m.converged

    def test_bad_shapes(self):
        with pytest.raises(DimensionMismatch):
            smo_train(np.zeros((3, 2)), np.zeros(4))
        m = smo_train(*_problem(n=10))
        with pytest.raises(DimensionMismatch):
            m.predict(np.zeros((1, 5)))

    def test_row_cache_path_matches_full_gram(self):
        X, y = _problem(n=50)
        Z = Standardizer.fit(X).transform(X)
        # the two paths round kernel values differently, so compare converged optima
        full = smo_solve(Z, y, SvrConfig(gamma=0.2, tolerance=1e-9))
        cached = smo_solve(Z, y, SvrConfig(gamma=0.2, tolerance=1e-9, full_gram_limit=10, cache_rows=7))
        assert np.allclose(full[0], cached[0], atol=1e-6) and abs(full[1] - cached[1]) < 1e-6

    @pytest.mark.skipif(not _accel.HAS_NUMBA, reason="numba unavailable")
    def test_jit_and_numpy_paths_agree(self):
        X, y = _problem(n=60, seed=11)
        Z = Standardizer.fit(X).transform(X)
        for cfg in (SvrConfig(gamma=0.2), SvrConfig(gamma=0.2, full_gram_limit=10, cache_rows=5)):
            a = smo_solve(Z, y, cfg, jit=True, debug=True)
            b = smo_solve(Z, y, cfg, jit=False, debug=True)
            assert a[2] == b[2]
            assert np.allclose(a[0], b[0], atol=1e-12) and abs(a[1] - b[1]) < 1e-12
            assert np.allclose(a[4], b[4], atol=1e-10)


class TestModel:
    def test_clamp(self):
        m = smo_train(*_problem(n=10))
        m.dual_coefficients = np.zeros_like(m.dual_coefficients)
        m.bias = 3.7
        assert predict(m, np.zeros(3)) == 3.0
        m.bias = 0.2
        assert predict(m, np.zeros(3)) == 1.0

    def test_save_load(self, tmp_path):
        X, y = _problem()
        m = smo_train(X, y, feature_names=["p", "q", "r"])
        m.save(tmp_path / "m.json")
        back = SvrModel.load(tmp_path / "m.json")
        assert back.feature_names == ["p", "q", "r"]
        assert np.array_equal(back.predict(X), m.predict(X))

    def test_load_rejects_foreign_files(self, tmp_path):
        (tmp_path / "x.json").write_text(json.dumps({"format": "other"}))
        with pytest.raises(DataError):
            SvrModel.load(tmp_path / "x.json")

    @given(st.floats(-50, 50), st.floats(-50, 50))
    def test_predictions_always_in_range(self, a, b):
        m = smo_train(*_problem(n=12))
        out = m.predict(np.array([[a, b, a - b]]))
        assert 1.0 <= out[0] <= 3.0
