"""Ranking SVM tests.

The solver is checked against an independent brute-force QP oracle: for m <= 6
pairs, every active-set pattern (each multiplier at 0, at C, or interior) is
enumerated, the interior block is solved exactly, and the best feasible
candidate is the global optimum of the concave box-constrained dual.
"""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from preflearn.dataset import (
    DataTable,
    Feature,
    FeatureSchema,
    Numeric,
    Preference,
    PreferenceSet,
)
from preflearn.ranksvm import (
    Linear,
    Polynomial,
    RankSvmError,
    Rbf,
    SvmParams,
    SvmRankModel,
    default_gamma,
    kernel_eval,
    kernel_matrix,
    pair_kernel,
    svm_score,
    train_ranksvm,
)


def table_from_matrix(X) -> DataTable:
    X = np.asarray(X, dtype=float)
    schema = FeatureSchema(
        tuple(Feature(f"f{j}", Numeric()) for j in range(X.shape[1]))
    )
    return DataTable(
        schema=schema,
        ids=tuple(f"o{i}" for i in range(len(X))),
        rows=tuple(tuple(float(v) for v in row) for row in X),
    )


def prefs_of(index_pairs) -> PreferenceSet:
    return PreferenceSet(
        tuple(Preference(f"o{a}", f"o{b}", 0) for a, b in index_pairs)
    )


def scalar_kernel(kernel):
    """Plain-arithmetic kernel evaluation, independent of the library path."""
    if isinstance(kernel, Linear):
        return lambda x, y: float(np.dot(x, y))
    if isinstance(kernel, Polynomial):
        return lambda x, y: float(
            (kernel.gamma * np.dot(x, y) + kernel.coef0) ** kernel.degree
        )
    return lambda x, y: float(np.exp(-kernel.gamma * np.sum((x - y) ** 2)))


def brute_q(kernel, Xa, Xb) -> np.ndarray:
    k = scalar_kernel(kernel)
    m = len(Xa)
    Q = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            Q[i, j] = (
                k(Xa[i], Xa[j])
                - k(Xa[i], Xb[j])
                - k(Xb[i], Xa[j])
                + k(Xb[i], Xb[j])
            )
    return Q


def qp_oracle(Q: np.ndarray, C: float):
    """Global max of sum(a) - a.Q.a/2 over [0, C]^m by active-set enumeration."""
    m = len(Q)
    best_obj, best_alpha = -np.inf, None
    for pattern in itertools.product((0, 1, 2), repeat=m):
        alpha = np.zeros(m)
        hi = [i for i, s in enumerate(pattern) if s == 1]
        free = [i for i, s in enumerate(pattern) if s == 2]
        alpha[hi] = C
        if free:
            A = Q[np.ix_(free, free)]
            rhs = 1.0 - Q[np.ix_(free, hi)] @ alpha[hi]
            try:
                sol = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError:
                continue
            if np.any(sol < -1e-9) or np.any(sol > C + 1e-9):
                continue
            alpha[free] = np.clip(sol, 0.0, C)
        obj = alpha.sum() - 0.5 * alpha @ Q @ alpha
        if obj > best_obj:
            best_obj, best_alpha = obj, alpha
    return best_obj, best_alpha


def random_instance(rng, m, dim=2):
    Xa = rng.uniform(-1.0, 1.0, size=(m, dim))
    Xb = rng.uniform(-1.0, 1.0, size=(m, dim))
    X = np.vstack([Xa, Xb])
    pairs = [(i, m + i) for i in range(m)]
    return table_from_matrix(X), prefs_of(pairs), Xa, Xb


class TestKernels:
    def test_rbf_same_point_is_one(self):
        x = np.array([0.3, -2.0, 5.5])
        assert kernel_eval(Rbf(gamma=1.0), x, x) == 1.0

    def test_linear_example(self):
        assert kernel_eval(Linear(), [1.0, 2.0], [3.0, 4.0]) == 11.0

    def test_polynomial_example(self):
        # x.y = 1 with gamma=1, coef0=1, degree=2 -> (1+1)^2
        assert kernel_eval(Polynomial(gamma=1.0, coef0=1.0, degree=2), [1.0], [1.0]) == 4.0

    def test_rbf_value(self):
        # ||x-y||^2 = 1 -> exp(-gamma)
        v = kernel_eval(Rbf(gamma=0.5), [0.0, 0.0], [1.0, 0.0])
        assert v == pytest.approx(np.exp(-0.5))

    def test_dimension_mismatch(self):
        with pytest.raises(RankSvmError, match="dimension mismatch"):
            kernel_eval(Linear(), [1.0, 2.0], [1.0, 2.0, 3.0])

    def test_matrix_agrees_with_scalar(self):
        rng = np.random.default_rng(7)
        A = rng.normal(size=(4, 3))
        B = rng.normal(size=(5, 3))
        for kern in (Linear(), Polynomial(gamma=0.5, coef0=1.0, degree=3), Rbf(gamma=0.8)):
            K = kernel_matrix(kern, A, B)
            k = scalar_kernel(kern)
            for i in range(4):
                for j in range(5):
                    assert K[i, j] == pytest.approx(k(A[i], B[j]), rel=1e-12)

    def test_default_gamma(self):
        assert default_gamma(4) == 0.25
        assert default_gamma(10) == 0.1

    def test_unset_gamma_resolves_to_default(self):
        rng = np.random.default_rng(3)
        A = rng.normal(size=(4, 5))
        B = rng.normal(size=(3, 5))
        g = default_gamma(5)
        np.testing.assert_array_equal(
            kernel_matrix(Rbf(), A, B), kernel_matrix(Rbf(gamma=g), A, B)
        )
        np.testing.assert_array_equal(
            kernel_matrix(Polynomial(), A, B),
            kernel_matrix(Polynomial(gamma=g), A, B),
        )

    def test_parameter_validation(self):
        with pytest.raises(RankSvmError):
            Rbf(gamma=0.0)
        with pytest.raises(RankSvmError):
            Polynomial(gamma=-1.0)
        with pytest.raises(RankSvmError):
            Polynomial(gamma=1.0, degree=0)
        with pytest.raises(RankSvmError):
            SvmParams(C=0.0)
        with pytest.raises(RankSvmError):
            SvmParams(tol=0.0)
        with pytest.raises(RankSvmError):
            SvmParams(max_epochs=0)


class TestPairKernel:
    def test_equal_pairs_linear_is_squared_distance(self):
        a, b = np.array([1.0, 3.0]), np.array([0.0, 1.0])
        v = pair_kernel(Linear(), (a, b), (a, b))
        assert v == pytest.approx(np.sum((a - b) ** 2))

    def test_zero_difference_pair_gives_zero(self):
        a = np.array([2.0, -1.0])
        q = (np.array([5.0, 0.0]), np.array([1.0, 1.0]))
        for kern in (Linear(), Polynomial(gamma=1.0), Rbf(gamma=2.0)):
            assert pair_kernel(kern, (a, a), q) == pytest.approx(0.0)

    def test_linear_scalar_example(self):
        v = pair_kernel(
            Linear(),
            (np.array([1.0]), np.array([0.0])),
            (np.array([2.0]), np.array([0.0])),
        )
        assert v == 2.0

    @given(st.integers(0, 10_000))
    def test_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c, d = rng.normal(size=(4, 3))
        for kern in (Linear(), Rbf(gamma=1.5)):
            assert pair_kernel(kern, (a, b), (c, d)) == pytest.approx(
                pair_kernel(kern, (c, d), (a, b))
            )

    def test_linear_equals_difference_dot(self):
        rng = np.random.default_rng(3)
        a, b, c, d = rng.normal(size=(4, 4))
        assert pair_kernel(Linear(), (a, b), (c, d)) == pytest.approx(
            float(np.dot(a - b, c - d))
        )


class TestOnePairAnalytic:
    def test_alpha_and_margin(self):
        # minimize w^2/2 subject to w >= 1 has solution w = 1, dual alpha = 1
        table = table_from_matrix([[1.0], [0.0]])
        prefs = prefs_of([(0, 1)])
        model = train_ranksvm(prefs, table, SvmParams(C=1.0, kernel=Linear()))
        assert model.alpha.tolist() == [1.0]
        assert model.score([1.0]) - model.score([0.0]) == pytest.approx(1.0, abs=1e-12)
        assert model.diagnostics.converged
        assert model.diagnostics.stop_reason == "converged"
        assert model.diagnostics.objective == pytest.approx(0.5, abs=1e-9)

    def test_small_c_caps_alpha(self):
        table = table_from_matrix([[1.0], [0.0]])
        prefs = prefs_of([(0, 1)])
        model = train_ranksvm(prefs, table, SvmParams(C=0.25, kernel=Linear()))
        assert model.alpha.tolist() == [0.25]


class TestSeparableOneDim:
    def test_all_training_pairs_correct(self):
        values = np.arange(10.0).reshape(-1, 1)
        table = table_from_matrix(values)
        pairs = [(j, i) for i in range(10) for j in range(i + 1, 10)]
        prefs = prefs_of(pairs)  # larger value preferred
        model = train_ranksvm(prefs, table, SvmParams(C=10.0, kernel=Linear()))
        scores = model.score_many(values)
        for j, i in pairs:
            assert scores[j] > scores[i]


ORACLE_CASES = [
    (Linear(), 1.0, 1, 11),
    (Linear(), 1.0, 3, 12),
    (Linear(), 10.0, 4, 13),
    (Linear(), 0.5, 6, 14),
    (Polynomial(gamma=0.5, coef0=1.0, degree=2), 1.0, 3, 15),
    (Polynomial(gamma=0.5, coef0=1.0, degree=2), 5.0, 5, 16),
    (Rbf(gamma=0.7), 1.0, 2, 17),
    (Rbf(gamma=0.7), 10.0, 4, 18),
    (Rbf(gamma=1.5), 2.0, 6, 19),
]


class TestOracleEquivalence:
    @pytest.mark.parametrize("kernel,C,m,seed", ORACLE_CASES)
    def test_objective_and_predictions_match_oracle(self, kernel, C, m, seed):
        rng = np.random.default_rng(seed)
        table, prefs, Xa, Xb = random_instance(rng, m)
        params = SvmParams(C=C, kernel=kernel, tol=1e-8, max_epochs=20_000)
        model = train_ranksvm(prefs, table, params)
        assert model.diagnostics.converged

        Q = brute_q(kernel, Xa, Xb)
        oracle_obj, oracle_alpha = qp_oracle(Q, C)
        assert model.diagnostics.objective == pytest.approx(oracle_obj, abs=1e-4)

        got = np.sign(model.score_many(Xa) - model.score_many(Xb))
        want = np.sign(Q @ oracle_alpha)
        assert np.array_equal(got, want)


class TestInvariants:
    @given(st.integers(0, 10_000), st.sampled_from([1.0, 0.3, 5.0]))
    @settings(max_examples=40, deadline=None)
    def test_dual_feasibility_and_kkt(self, seed, C):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(2, 8))
        table, prefs, Xa, Xb = random_instance(rng, m, dim=3)
        params = SvmParams(C=C, kernel=Linear(), tol=1e-6, max_epochs=10_000)
        model = train_ranksvm(prefs, table, params)
        diags = model.diagnostics
        alpha = diags.alpha
        assert np.all(alpha >= 0.0) and np.all(alpha <= C)
        # stored support pairs keep only strictly positive multipliers
        assert np.all(model.alpha > 0.0)
        if diags.converged:
            g = 1.0 - brute_q(Linear(), Xa, Xb) @ alpha
            for i in range(m):
                if alpha[i] <= 0.0:
                    assert g[i] <= params.tol
                elif alpha[i] >= C:
                    assert g[i] >= -params.tol
                else:
                    assert abs(g[i]) <= params.tol

    def test_objective_monotone_in_epochs(self):
        rng = np.random.default_rng(41)
        table, prefs, _, _ = random_instance(rng, 12, dim=3)
        objectives = []
        for epochs in range(1, 9):
            params = SvmParams(C=5.0, kernel=Rbf(gamma=0.9), tol=1e-12, max_epochs=epochs)
            model = train_ranksvm(prefs, table, params)
            objectives.append(model.diagnostics.objective)
        for prev, cur in zip(objectives, objectives[1:]):
            assert cur >= prev - 1e-12

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        table, prefs, _, _ = random_instance(rng, 15, dim=4)
        params = SvmParams(C=2.0, kernel=Rbf(gamma=0.5))
        m1 = train_ranksvm(prefs, table, params)
        m2 = train_ranksvm(prefs, table, params)
        assert np.array_equal(m1.alpha, m2.alpha)
        assert np.array_equal(m1.support_a, m2.support_a)

    def test_cache_paths_agree(self):
        rng = np.random.default_rng(6)
        table, prefs, Xa, Xb = random_instance(rng, 9, dim=3)
        params_cached = SvmParams(C=1.0, kernel=Rbf(gamma=0.8))
        params_rowwise = SvmParams(C=1.0, kernel=Rbf(gamma=0.8), cache_cap=0)
        m1 = train_ranksvm(prefs, table, params_cached)
        m2 = train_ranksvm(prefs, table, params_rowwise)
        assert m1.diagnostics.alpha == pytest.approx(m2.diagnostics.alpha, abs=1e-10)

    def test_prediction_antisymmetry(self):
        rng = np.random.default_rng(8)
        table, prefs, _, _ = random_instance(rng, 10, dim=3)
        model = train_ranksvm(prefs, table, SvmParams(C=1.0, kernel=Linear()))
        xs = rng.normal(size=(20, 3))
        s = model.score_many(xs)
        for i in range(0, 20, 2):
            assert np.sign(s[i] - s[i + 1]) == -np.sign(s[i + 1] - s[i])


class TestDegenerateInputs:
    def test_empty_preferences_rejected(self):
        table = table_from_matrix([[1.0], [0.0]])
        with pytest.raises(RankSvmError, match="empty"):
            train_ranksvm(PreferenceSet(()), table, SvmParams())

    def test_all_zero_difference_rejected(self):
        table = table_from_matrix([[1.0, 2.0], [1.0, 2.0]])
        prefs = prefs_of([(0, 1)])
        with pytest.raises(RankSvmError, match="identical feature vectors"):
            train_ranksvm(prefs, table, SvmParams())

    def test_zero_difference_pairs_dropped_and_counted(self):
        table = table_from_matrix([[1.0], [1.0], [3.0], [0.0]])
        prefs = prefs_of([(0, 1), (2, 3)])
        model = train_ranksvm(prefs, table, SvmParams(C=1.0))
        assert model.diagnostics.zero_difference_pairs == 1
        assert model.diagnostics.kept_pair_indices.tolist() == [1]
        assert model.score([3.0]) > model.score([0.0])


class TestScoring:
    def test_empty_support_scores_zero(self):
        model = SvmRankModel(
            support_a=np.zeros((0, 2)),
            support_b=np.zeros((0, 2)),
            alpha=np.zeros(0),
            kernel=Linear(),
        )
        assert svm_score(model, [5.0, -3.0]) == 0.0
        assert model.score_many(np.ones((4, 2))).tolist() == [0.0] * 4

    def test_score_matches_kernel_expansion(self):
        rng = np.random.default_rng(9)
        table, prefs, _, _ = random_instance(rng, 6, dim=2)
        kern = Rbf(gamma=1.2)
        model = train_ranksvm(prefs, table, SvmParams(C=1.0, kernel=kern))
        k = scalar_kernel(kern)
        x = np.array([0.4, -0.2])
        want = sum(
            float(a) * (k(sa, x) - k(sb, x))
            for sa, sb, a in zip(model.support_a, model.support_b, model.alpha)
        )
        assert model.score(x) == pytest.approx(want, rel=1e-12)

    def test_rbf_scores_stay_finite_for_large_inputs(self):
        model = SvmRankModel(
            support_a=np.array([[1000.0, 0.0]]),
            support_b=np.array([[0.0, 1000.0]]),
            alpha=np.array([1.0]),
            kernel=Rbf(gamma=10.0),
        )
        xs = np.array([[1e3, 1e3], [-1e3, 1e3], [0.0, 0.0], [999.0, -999.0]])
        assert np.all(np.isfinite(model.score_many(xs)))

    def test_dimension_mismatch_on_score(self):
        table = table_from_matrix([[1.0, 0.0], [0.0, 1.0]])
        model = train_ranksvm(prefs_of([(0, 1)]), table, SvmParams())
        with pytest.raises(RankSvmError, match="dimension mismatch"):
            model.score([1.0, 2.0, 3.0])


class TestProgressCallback:
    def test_progress_fractions_monotone(self):
        rng = np.random.default_rng(11)
        table, prefs, _, _ = random_instance(rng, 10, dim=3)
        seen = []
        train_ranksvm(
            prefs,
            table,
            SvmParams(C=1.0, tol=1e-12, max_epochs=50),
            on_progress=seen.append,
        )
        assert seen == sorted(seen)
        assert all(0.0 < f <= 1.0 for f in seen)

    def test_callback_exception_aborts_training(self):
        class Stop(Exception):
            pass

        def boom(_fraction):
            raise Stop()

        rng = np.random.default_rng(12)
        table, prefs, _, _ = random_instance(rng, 10, dim=3)
        with pytest.raises(Stop):
            train_ranksvm(
                prefs,
                table,
                SvmParams(C=1.0, tol=1e-12, max_epochs=50),
                on_progress=boom,
            )
