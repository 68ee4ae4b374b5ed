import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from preflearn.dataset import DataTable, Feature, FeatureSchema, Nominal, Numeric
from preflearn.preprocess import (
    FittedPlan,
    Include,
    MinMax,
    NominalToBinary,
    NumericStats,
    NumericToNominal,
    PreprocessError,
    PreprocessPlan,
    ZScore,
    apply_plan,
    compute_stats,
    min_max,
    nominal_to_binary,
    numeric_to_nominal,
    z_score,
)


def numeric_table(*columns, names=None):
    names = names or [f"x{j}" for j in range(len(columns))]
    schema = FeatureSchema(tuple(Feature(n, Numeric()) for n in names))
    n = len(columns[0])
    rows = tuple(tuple(float(col[i]) for col in columns) for i in range(n))
    return DataTable(schema, tuple(str(i) for i in range(n)), rows)


def nominal_table(values, categories):
    schema = FeatureSchema((Feature("c", Nominal(tuple(categories))),))
    return DataTable(schema, tuple(str(i) for i in range(len(values))), tuple((v,) for v in values))


class TestStats:
    def test_numeric_column(self):
        stats = compute_stats(numeric_table([2, 4, 6]))
        s = stats.per_feature["x0"]
        assert s.minimum == 2 and s.maximum == 6 and s.mean == 4
        assert s.std == pytest.approx(math.sqrt(8 / 3), abs=1e-12)
        assert s.distinct == 3

    def test_constant_column_zero_std(self):
        s = compute_stats(numeric_table([5, 5])).per_feature["x0"]
        assert s.std == 0.0

    def test_nominal_frequencies(self):
        stats = compute_stats(nominal_table(["red", "red", "blue"], ["red", "blue"]))
        s = stats.per_feature["c"]
        assert s.frequencies == {"red": 2, "blue": 1}
        assert s.distinct == 2

    def test_empty_table_rejected(self):
        empty = DataTable(FeatureSchema((Feature("x", Numeric()),)), (), ())
        with pytest.raises(PreprocessError):
            compute_stats(empty)

    @settings(max_examples=40)
    @given(
        col=st.lists(
            st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=1, max_size=30
        )
    )
    def test_invariants(self, col):
        s = compute_stats(numeric_table(col)).per_feature["x0"]
        assert s.minimum <= s.mean + 1e-9 and s.mean <= s.maximum + 1e-9
        assert s.std >= 0


class TestMinMax:
    def test_basic(self):
        out = min_max(numeric_table([2, 4, 6]), "x0")
        assert [r[0] for r in out.rows] == [0.0, 0.5, 1.0]

    def test_identity_on_unit_extremes(self):
        out = min_max(numeric_table([0, 1]), "x0")
        assert [r[0] for r in out.rows] == [0.0, 1.0]

    def test_constant_feature_error(self):
        with pytest.raises(PreprocessError, match="constant.*exclude"):
            min_max(numeric_table([5, 5, 5]), "x0")

    def test_non_numeric_rejected(self):
        with pytest.raises(PreprocessError, match="not numeric"):
            min_max(nominal_table(["a", "b"], ["a", "b"]), "c")

    @settings(max_examples=40)
    @given(
        col=st.lists(
            st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
            min_size=2,
            max_size=30,
        ).filter(lambda c: max(c) > min(c))
    )
    def test_output_in_unit_interval(self, col):
        out = min_max(numeric_table(col), "x0")
        values = [r[0] for r in out.rows]
        assert all(-1e-12 <= v <= 1 + 1e-12 for v in values)


class TestZScore:
    def test_basic(self):
        out = z_score(numeric_table([2, 4, 6]), "x0")
        got = [r[0] for r in out.rows]
        assert got == pytest.approx([-1.224745, 0.0, 1.224745], abs=1e-6)

    def test_symmetric_input_fixed(self):
        out = z_score(numeric_table([-1, 1]), "x0")
        assert [r[0] for r in out.rows] == pytest.approx([-1.0, 1.0])

    def test_constant_feature_error(self):
        with pytest.raises(PreprocessError):
            z_score(numeric_table([3, 3]), "x0")

    @settings(max_examples=40)
    @given(
        col=st.lists(
            st.floats(min_value=-1e3, max_value=1e3, allow_nan=False),
            min_size=2,
            max_size=30,
        ).filter(lambda c: max(c) - min(c) > 1e-6)
    )
    def test_moments(self, col):
        out = z_score(numeric_table(col), "x0")
        v = np.array([r[0] for r in out.rows])
        assert abs(v.mean()) < 1e-9
        assert abs(v.std() - 1) < 1e-9


class TestNominalToBinary:
    def test_one_hot(self):
        t = nominal_table(["green"], ["red", "green", "blue"])
        out = nominal_to_binary(t, "c")
        assert out.feature_names == ("c=red", "c=green", "c=blue")
        assert out.rows[0] == (0.0, 1.0, 0.0)

    def test_single_category_all_ones(self):
        out = nominal_to_binary(nominal_table(["only", "only"], ["only"]), "c")
        assert [r[0] for r in out.rows] == [1.0, 1.0]

    def test_column_count_grows_by_k_minus_1(self):
        t = nominal_table(["a", "b", "c"], ["a", "b", "c"])
        out = nominal_to_binary(t, "c")
        assert len(out.schema) == len(t.schema) + 3 - 1
        assert len(out) == len(t)

    @settings(max_examples=30)
    @given(data=st.data())
    def test_rows_sum_to_one(self, data):
        cats = data.draw(st.lists(st.sampled_from("abcdef"), min_size=1, max_size=6, unique=True))
        values = data.draw(st.lists(st.sampled_from(cats), min_size=1, max_size=20))
        out = nominal_to_binary(nominal_table(values, cats), "c")
        for row in out.rows:
            assert sum(row) == 1.0


class TestNumericToNominal:
    def test_two_bins(self):
        out = numeric_to_nominal(numeric_table([0, 0.4, 1]), "x0", 2)
        assert [r[0] for r in out.rows] == ["bin_0", "bin_0", "bin_1"]

    def test_max_clamps_to_last_bin(self):
        out = numeric_to_nominal(numeric_table([0, 1, 2, 3]), "x0", 3)
        assert out.rows[-1][0] == "bin_2"

    def test_bins_must_be_at_least_two(self):
        with pytest.raises(PreprocessError):
            numeric_to_nominal(numeric_table([0, 1]), "x0", 1)

    def test_constant_feature_error(self):
        with pytest.raises(PreprocessError):
            numeric_to_nominal(numeric_table([2, 2]), "x0", 2)


class TestApplyPlan:
    def test_empty_plan_identity(self):
        t = numeric_table([1, 2, 3])
        out, fitted = apply_plan(t, PreprocessPlan())
        assert out == t
        assert fitted.apply(t) == t

    def test_zscore_replay_matches_direct(self):
        t = numeric_table([2, 4, 6])
        out, fitted = apply_plan(t, PreprocessPlan((ZScore("x0"),)))
        assert out == z_score(t, "x0")
        assert fitted.apply(t) == out

    def test_replay_uses_fitted_parameters(self):
        train = numeric_table([0, 10])
        _, fitted = apply_plan(train, PreprocessPlan((MinMax("x0"),)))
        new = numeric_table([5])
        replayed = fitted.apply(new)
        # 5 scaled by the training range [0,10], not by the new object's own range
        assert replayed.rows[0][0] == 0.5

    def test_step_errors_carry_index(self):
        t = numeric_table([1, 2])
        plan = PreprocessPlan((MinMax("x0"), ZScore("nope")))
        with pytest.raises(PreprocessError, match="step 1"):
            apply_plan(t, plan)

    def test_include_projects_and_orders(self):
        t = numeric_table([1], [2], [3], names=["a", "b", "c"])
        out, _ = apply_plan(t, PreprocessPlan((Include(("c", "a")),)))
        assert out.feature_names == ("c", "a")

    def test_include_unknown_feature(self):
        with pytest.raises(PreprocessError, match="unknown feature"):
            apply_plan(numeric_table([1]), PreprocessPlan((Include(("zz",)),)))

    def test_chained_representation_change(self):
        t = numeric_table([0, 0.4, 1.0])
        plan = PreprocessPlan((NumericToNominal("x0", 2), NominalToBinary("x0")))
        out, fitted = apply_plan(t, plan)
        assert out.feature_names == ("x0=bin_0", "x0=bin_1")
        assert out.rows == ((1.0, 0.0), (1.0, 0.0), (0.0, 1.0))
        assert fitted.apply(t) == out

    @settings(max_examples=25)
    @given(
        col=st.lists(
            st.floats(min_value=-100, max_value=100, allow_nan=False),
            min_size=3,
            max_size=15,
        ).filter(lambda c: max(c) > min(c)),
        seed=st.integers(min_value=0, max_value=2**16),
    )
    def test_plan_commutes_with_row_order(self, col, seed):
        t = numeric_table(col)
        plan = PreprocessPlan((MinMax("x0"),))
        out, _ = apply_plan(t, plan)
        perm = np.random.default_rng(seed).permutation(len(col))
        shuffled = DataTable(
            t.schema,
            tuple(t.ids[i] for i in perm),
            tuple(t.rows[i] for i in perm),
        )
        out_shuffled, _ = apply_plan(shuffled, plan)
        for i, p in enumerate(perm):
            assert out_shuffled.rows[i] == out.rows[p]


class TestFittedPlanJson:
    def test_round_trip(self):
        t = DataTable(
            FeatureSchema(
                (
                    Feature("a", Numeric()),
                    Feature("b", Numeric()),
                    Feature("c", Nominal(("x", "y"))),
                )
            ),
            ("0", "1", "2"),
            ((1.0, 0.0, "x"), (2.0, 5.0, "y"), (3.0, 10.0, "x")),
        )
        plan = PreprocessPlan(
            (
                MinMax("a"),
                ZScore("b"),
                NominalToBinary("c"),
                NumericToNominal("a", 3),
            )
        )
        out, fitted = apply_plan(t, plan)
        back = FittedPlan.from_json(fitted.to_json())
        assert back == fitted
        assert back.apply(t) == out

    def test_plan_json_round_trip(self):
        plan = PreprocessPlan(
            (Include(("a", "b")), MinMax("a"), NumericToNominal("b", 4))
        )
        assert PreprocessPlan.from_json(plan.to_json()) == plan

    def test_unknown_op_rejected(self):
        with pytest.raises(PreprocessError, match="unknown op"):
            PreprocessPlan.from_json([{"op": "fourier"}])
