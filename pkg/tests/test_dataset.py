import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from preflearn.dataset import (
    DatasetError,
    DataTable,
    Feature,
    FeatureSchema,
    Numeric,
    Nominal,
    Order,
    OrderSet,
    ParserOptions,
    RankedList,
    Ratings,
    extract_pairs,
    pairs_to_orders,
    parse_dual_file,
    parse_objects,
    parse_single_file,
    write_objects,
    write_orders,
    write_single_file,
)


def ratings_order(*entries, group=0):
    return OrderSet((Order(group=group, kind=Ratings(tuple(entries))),))


def ranked(ids, group=0):
    return OrderSet((Order(group=group, kind=RankedList(tuple(ids))),))


class TestParseSingleFile:
    def test_id_feature_rating(self):
        text = "a,1.0,5\nb,2.0,3\nc,0.5,4\n"
        opts = ParserOptions(has_header=True, id_column="id", label_column="r")
        table, orders = parse_single_file("id,x,r\n" + text, opts)
        assert table.ids == ("a", "b", "c")
        assert table.rows == ((1.0,), (2.0,), (0.5,))
        assert len(orders) == 1
        assert orders.orders[0].kind == Ratings((("a", 5.0), ("b", 3.0), ("c", 4.0)))
        assert orders.orders[0].group == 0

    def test_no_header_label_is_last_column(self):
        table, orders = parse_single_file("1.0,2.0,5\n3.0,4.0,2\n")
        assert table.feature_names == ("f0", "f1")
        assert table.ids == ("0", "1")
        assert orders.orders[0].kind == Ratings((("0", 5.0), ("1", 2.0)))

    def test_skip_lines_ignores_physical_lines(self):
        text = "garbage !!\nmore garbage\n1.0,5\n2.0,3\n"
        table, _ = parse_single_file(text, ParserOptions(skip_lines=2))
        assert len(table) == 2

    def test_comment_lines_ignored(self):
        table, _ = parse_single_file("# a comment\n1.0,5\n2.0,3\n")
        assert len(table) == 2

    def test_arity_error_names_line(self):
        with pytest.raises(DatasetError, match="line 3"):
            parse_single_file("1.0,2.0,5\n2.0,3.0,1\n3.0,9\n")

    def test_bad_label_names_line_and_column(self):
        with pytest.raises(DatasetError, match="line 1.*'c1'"):
            parse_single_file("1.0,oops\n")

    def test_empty_dataset_rejected(self):
        with pytest.raises(DatasetError, match="empty"):
            parse_single_file("")
        with pytest.raises(DatasetError, match="empty"):
            parse_single_file("# only a comment\n")

    def test_group_column_splits_orders(self):
        text = "x,label,session\n1.0,5,1\n2.0,3,1\n3.0,4,2\n4.0,1,2\n"
        opts = ParserOptions(has_header=True, label_column="label", group_column="session")
        table, orders = parse_single_file(text, opts)
        assert sorted(o.group for o in orders.orders) == [1, 2]
        assert all(len(o.kind.entries) == 2 for o in orders.orders)

    def test_nominal_feature_inferred(self):
        table, _ = parse_single_file("red,1\nblue,2\nred,3\n")
        kind = table.schema.features[0].kind
        assert isinstance(kind, Nominal)
        assert kind.categories == ("red", "blue")

    def test_named_columns_require_header(self):
        with pytest.raises(DatasetError, match="has_header"):
            ParserOptions(id_column="id")

    def test_separator_must_be_single_char(self):
        with pytest.raises(DatasetError):
            ParserOptions(separator=",,")
        with pytest.raises(DatasetError):
            ParserOptions(separator="\n")

    def test_bytes_and_stream_sources(self, tmp_path):
        raw = b"1.0,5\n2.0,3\n"
        t1, _ = parse_single_file(raw)
        p = tmp_path / "d.csv"
        p.write_bytes(raw)
        t2, _ = parse_single_file(p)
        with open(p, "rb") as fh:
            t3, _ = parse_single_file(fh)
        assert t1 == t2 == t3


class TestParseDualFile:
    OBJECTS = "id,x,y\na,1.0,0.0\nb,0.5,1.0\nc,0.0,0.5\n"

    def opts(self):
        return ParserOptions(has_header=True, id_column="id")

    def test_basic_order(self):
        table, orders = parse_dual_file(self.OBJECTS, "b,a\n", self.opts())
        assert table.ids == ("a", "b", "c")
        assert orders.orders[0] == Order(group=0, kind=RankedList(("b", "a")))

    def test_group_is_line_index(self):
        _, orders = parse_dual_file(self.OBJECTS, "b,a\nc,a,b\n", self.opts())
        assert [o.group for o in orders.orders] == [0, 1]

    def test_unknown_id_error(self):
        with pytest.raises(DatasetError, match="unknown object id 'z'"):
            parse_dual_file(self.OBJECTS, "b,z\n", self.opts())

    def test_duplicate_id_in_order(self):
        with pytest.raises(DatasetError, match="duplicate object id 'b'"):
            parse_dual_file(self.OBJECTS, "b,a,b\n", self.opts())

    def test_single_item_order_rejected(self):
        with pytest.raises(DatasetError, match="at least two"):
            parse_dual_file(self.OBJECTS, "b\n", self.opts())

    def test_duplicate_object_id_rejected(self):
        with pytest.raises(DatasetError, match="duplicate object id"):
            parse_objects("id,x\na,1\na,2\n", self.opts())

    def test_large_survey_scale_shape(self):
        # 1000 objects x 18 features, 5000 orders of 10 ids each
        import random

        rnd = random.Random(0)
        obj_lines = ["id," + ",".join(f"x{j}" for j in range(18))]
        for i in range(1000):
            obj_lines.append(f"o{i}," + ",".join("%.3f" % rnd.random() for _ in range(18)))
        order_lines = []
        for _ in range(5000):
            order_lines.append(",".join(f"o{i}" for i in rnd.sample(range(1000), 10)))
        table, orders = parse_dual_file(
            "\n".join(obj_lines) + "\n", "\n".join(order_lines) + "\n", self.opts()
        )
        assert len(table) == 1000
        assert len(table.schema) == 18
        assert len(orders) == 5000
        assert all(isinstance(o.kind, RankedList) for o in orders.orders)
        assert all(len(o.kind.object_ids) == 10 for o in orders.orders)


class TestExtractPairs:
    def test_ranked_list_all_pairs(self):
        prefs = extract_pairs(ranked(["b", "a", "c"]))
        got = {(p.preferred, p.other) for p in prefs.pairs}
        assert got == {("b", "a"), ("b", "c"), ("a", "c")}
        assert len(prefs) == 3 * 2 // 2

    def test_ratings_comparisons(self):
        prefs = extract_pairs(ratings_order(("a", 5.0), ("b", 3.0), ("c", 4.0)))
        got = {(p.preferred, p.other) for p in prefs.pairs}
        assert got == {("a", "b"), ("a", "c"), ("c", "b")}

    def test_rating_ties_skipped(self):
        prefs = extract_pairs(ratings_order(("a", 2.0), ("b", 2.0)))
        assert len(prefs) == 0

    def test_lower_is_better_inverts(self):
        orders = ratings_order(("a", 5.0), ("b", 3.0))
        up = extract_pairs(orders, higher_is_better=True)
        down = extract_pairs(orders, higher_is_better=False)
        assert up.pairs[0][:2] == ("a", "b")
        assert down.pairs[0][:2] == ("b", "a")

    def test_pairs_inherit_group(self):
        orders = OrderSet(
            (
                Order(group=7, kind=RankedList(("a", "b"))),
                Order(group=9, kind=RankedList(("c", "d"))),
            )
        )
        prefs = extract_pairs(orders)
        assert {p.group for p in prefs.pairs} == {7, 9}

    @given(n=st.integers(min_value=2, max_value=10))
    def test_ranked_list_pair_count_and_total_order(self, n):
        ids = [f"o{i}" for i in range(n)]
        prefs = extract_pairs(ranked(ids))
        assert len(prefs) == n * (n - 1) // 2
        wins = {(p.preferred, p.other) for p in prefs.pairs}
        # antisymmetry
        assert all((b, a) not in wins for a, b in wins)
        # transitivity by brute force
        for a, b in wins:
            for c in ids:
                if (b, c) in wins:
                    assert (a, c) in wins

    @given(
        labels=st.lists(
            st.floats(min_value=-100, max_value=100, allow_nan=False),
            min_size=2,
            max_size=8,
        )
    )
    def test_flipping_direction_reverses_every_rating_pair(self, labels):
        entries = [(f"o{i}", lbl) for i, lbl in enumerate(labels)]
        orders = ratings_order(*entries)
        up = {(p.preferred, p.other) for p in extract_pairs(orders, True).pairs}
        down = {(p.preferred, p.other) for p in extract_pairs(orders, False).pairs}
        assert down == {(b, a) for a, b in up}

    def test_antisymmetry_validated(self):
        from preflearn.dataset import Preference, PreferenceSet

        with pytest.raises(DatasetError, match="contradictory"):
            PreferenceSet((Preference("a", "b", 0), Preference("b", "a", 0)))
        # different groups may disagree
        PreferenceSet((Preference("a", "b", 0), Preference("b", "a", 1)))

    def test_pairs_to_orders_round_trip(self):
        orders = OrderSet(
            (
                Order(group=0, kind=RankedList(("a", "b"))),
                Order(group=1, kind=RankedList(("c", "d"))),
            )
        )
        prefs = extract_pairs(orders)
        assert pairs_to_orders(prefs) == orders


ident = st.text(
    alphabet=st.characters(whitelist_categories=("Ll", "Lu", "Nd")),
    min_size=1,
    max_size=8,
)


@st.composite
def tables(draw):
    n_rows = draw(st.integers(min_value=1, max_value=6))
    n_num = draw(st.integers(min_value=0, max_value=3))
    n_nom = draw(st.integers(min_value=0 if n_num else 1, max_value=2))
    features = []
    for j in range(n_num):
        features.append(Feature(f"num{j}", Numeric()))
    nom_values = []
    for j in range(n_nom):
        cats = draw(
            st.lists(ident.map(lambda s: "c_" + s), min_size=1, max_size=4, unique=True)
        )
        col = [draw(st.sampled_from(cats)) for _ in range(n_rows)]
        # categories must be exactly those appearing, in first-appearance order
        seen = {}
        for v in col:
            seen.setdefault(v, None)
        features.append(Feature(f"nom{j}", Nominal(tuple(seen))))
        nom_values.append(col)
    rows = []
    for i in range(n_rows):
        row = [
            draw(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
            for _ in range(n_num)
        ]
        row.extend(nom_values[j][i] for j in range(n_nom))
        rows.append(tuple(row))
    ids = [f"r{i}" for i in range(n_rows)]
    return DataTable(FeatureSchema(tuple(features)), tuple(ids), tuple(rows))


class TestRoundTrip:
    @settings(max_examples=50)
    @given(table=tables())
    def test_objects_round_trip(self, table):
        text = write_objects(table)
        back = parse_objects(text, ParserOptions(has_header=True, id_column="id"))
        assert back == table

    def test_single_file_round_trip(self):
        table, orders = parse_single_file("1.5,5\n2.5,3\n")
        text = write_single_file(table, orders)
        opts = ParserOptions(has_header=True, id_column="id", label_column="label")
        table2, orders2 = parse_single_file(text, opts)
        assert table2.rows == table.rows
        assert [o.kind for o in orders2.orders] == [o.kind for o in orders.orders]

    def test_ranked_orders_round_trip(self):
        objects = "id,x\na,1.0\nb,2.0\nc,3.0\n"
        opts = ParserOptions(has_header=True, id_column="id")
        table, orders = parse_dual_file(objects, "b,a\nc,a,b\n", opts)
        text = write_orders(orders)
        _, orders2 = parse_dual_file(objects, text, opts)
        assert orders2 == orders


class TestDataTable:
    def test_to_matrix_rejects_nominal(self):
        table, _ = parse_single_file("red,1\nblue,2\n")
        with pytest.raises(DatasetError, match="nominal"):
            table.to_matrix()

    def test_matrix_for_selects_rows(self):
        table = DataTable(
            FeatureSchema((Feature("x", Numeric()),)),
            ("a", "b"),
            ((1.0,), (2.0,)),
        )
        m = table.matrix_for(["b", "a", "b"])
        assert m.tolist() == [[2.0], [1.0], [2.0]]

    def test_select_features(self):
        table, _ = parse_single_file("1.0,2.0,3.0,0\n")
        sub = table.select_features(["f1"])
        assert sub.feature_names == ("f1",)
        assert sub.rows == ((2.0,),)

    def test_row_arity_checked(self):
        with pytest.raises(DatasetError, match="has 1 values"):
            DataTable(
                FeatureSchema((Feature("x", Numeric()), Feature("y", Numeric()))),
                ("a",),
                ((1.0,),),
            )

    def test_schema_rejects_duplicate_names(self):
        with pytest.raises(DatasetError, match="duplicate feature name"):
            FeatureSchema((Feature("x", Numeric()), Feature("x", Numeric())))

    def test_order_set_validates_ids(self):
        table, _ = parse_single_file("1.0,5\n")
        orders = ranked(["0", "zzz"])
        with pytest.raises(DatasetError, match="unknown object id 'zzz'"):
            orders.validate_against(table)
