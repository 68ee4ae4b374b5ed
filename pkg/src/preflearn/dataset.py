"""Dataset model and parsers.

A preference-learning dataset has two sides: a table of objects (feature
vectors keyed by an id) and a set of orders over those ids.  Orders come
either as ranked lists (most preferred first) or as rating-labelled rows, and
are flattened into pairwise preferences for training.

Two file layouts are supported:

* single-file: one delimited row per object carrying its features and a real
  rating label (total orders, optionally grouped by a group column);
* dual-file: an objects file (id + features) plus an orders file with one
  ranked list of ids per line (partial orders).

Text is UTF-8, the decimal point is '.', and lines starting with '#' after
the configured number of skipped lines are treated as comments.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Union

import numpy as np


class DatasetError(ValueError):
    """Raised for malformed dataset files or inconsistent dataset values."""


@dataclass(frozen=True)
class Numeric:
    """Feature kind for real-valued cells."""


@dataclass(frozen=True)
class Nominal:
    """Feature kind for categorical cells; category order is schema order."""

    categories: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.categories:
            raise DatasetError("nominal feature needs at least one category")
        if len(set(self.categories)) != len(self.categories):
            raise DatasetError("nominal categories must be unique")


FeatureKind = Union[Numeric, Nominal]
Cell = Union[float, str]


@dataclass(frozen=True)
class Feature:
    name: str
    kind: FeatureKind

    def __post_init__(self) -> None:
        if not self.name:
            raise DatasetError("feature names must be non-empty")


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[Feature, ...]

    def __post_init__(self) -> None:
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            dup = next(n for n in names if names.count(n) > 1)
            raise DatasetError(f"duplicate feature name {dup!r}")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def index_of(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise DatasetError(f"unknown feature {name!r}")


@dataclass(frozen=True)
class DataTable:
    """Immutable table of objects: a schema plus one row of cells per id."""

    schema: FeatureSchema
    ids: tuple[str, ...]
    rows: tuple[tuple[Cell, ...], ...]

    def __post_init__(self) -> None:
        if len(self.ids) != len(self.rows):
            raise DatasetError("ids and rows length mismatch")
        if len(set(self.ids)) != len(self.ids):
            seen: set[str] = set()
            for oid in self.ids:
                if oid in seen:
                    raise DatasetError(f"duplicate object id {oid!r}")
                seen.add(oid)
        width = len(self.schema)
        for oid, row in zip(self.ids, self.rows):
            if len(row) != width:
                raise DatasetError(
                    f"row {oid!r} has {len(row)} values, schema has {width}"
                )
            for feat, value in zip(self.schema.features, row):
                if isinstance(feat.kind, Numeric):
                    if not isinstance(value, float):
                        raise DatasetError(
                            f"row {oid!r}, feature {feat.name!r}: expected numeric value"
                        )
                else:
                    if value not in feat.kind.categories:
                        raise DatasetError(
                            f"row {oid!r}, feature {feat.name!r}: "
                            f"value {value!r} not among categories"
                        )

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self.schema.names

    def row_of(self, object_id: str) -> tuple[Cell, ...]:
        return self.rows[self._index[object_id]]

    @property
    def _index(self) -> dict[str, int]:
        # cached lazily on the instance; DataTable is frozen so this is safe
        cache = self.__dict__.get("_index_cache")
        if cache is None:
            cache = {oid: i for i, oid in enumerate(self.ids)}
            object.__setattr__(self, "_index_cache", cache)
        return cache

    def column(self, name: str) -> tuple[Cell, ...]:
        j = self.schema.index_of(name)
        return tuple(row[j] for row in self.rows)

    def to_matrix(self) -> np.ndarray:
        """Return rows as a float matrix; nominal features must be encoded first."""
        cached = self.__dict__.get("_matrix_cache")
        if cached is not None:
            return cached
        for f in self.schema.features:
            if isinstance(f.kind, Nominal):
                raise DatasetError(
                    f"feature {f.name!r} is nominal; convert it to a binary "
                    "representation before building a numeric matrix"
                )
        m = np.array(self.rows, dtype=float)
        if m.ndim != 2:
            m = m.reshape(len(self.rows), len(self.schema))
        m.setflags(write=False)
        object.__setattr__(self, "_matrix_cache", m)
        return m

    def matrix_for(self, object_ids: Iterable[str]) -> np.ndarray:
        idx = self._index
        full = self.to_matrix()
        return full[[idx[oid] for oid in object_ids]]

    def subset_rows(self, object_ids: Iterable[str]) -> "DataTable":
        idx = self._index
        wanted = [idx[oid] for oid in object_ids]
        return DataTable(
            schema=self.schema,
            ids=tuple(self.ids[i] for i in wanted),
            rows=tuple(self.rows[i] for i in wanted),
        )

    def select_features(self, names: Iterable[str]) -> "DataTable":
        names = list(names)
        cols = [self.schema.index_of(n) for n in names]
        schema = FeatureSchema(tuple(self.schema.features[j] for j in cols))
        rows = tuple(tuple(row[j] for j in cols) for row in self.rows)
        return DataTable(schema=schema, ids=self.ids, rows=rows)


@dataclass(frozen=True)
class RankedList:
    """Object ids, most preferred first."""

    object_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.object_ids) < 2:
            raise DatasetError("a ranked list needs at least two objects")
        if len(set(self.object_ids)) != len(self.object_ids):
            raise DatasetError("duplicate object id within one ranked list")


@dataclass(frozen=True)
class Ratings:
    """(object id, real label) entries; label direction is decided at pair extraction."""

    entries: tuple[tuple[str, float], ...]


OrderKind = Union[RankedList, Ratings]


@dataclass(frozen=True)
class Order:
    group: int
    kind: OrderKind


@dataclass(frozen=True)
class OrderSet:
    orders: tuple[Order, ...]

    def __len__(self) -> int:
        return len(self.orders)

    @property
    def group_ids(self) -> tuple[int, ...]:
        seen: dict[int, None] = {}
        for o in self.orders:
            seen.setdefault(o.group, None)
        return tuple(seen)

    def referenced_ids(self) -> set[str]:
        out: set[str] = set()
        for o in self.orders:
            if isinstance(o.kind, RankedList):
                out.update(o.kind.object_ids)
            else:
                out.update(oid for oid, _ in o.kind.entries)
        return out

    def for_groups(self, groups: Iterable[int]) -> "OrderSet":
        wanted = set(groups)
        return OrderSet(tuple(o for o in self.orders if o.group in wanted))

    def validate_against(self, table: DataTable) -> None:
        known = set(table.ids)
        for o in self.orders:
            for oid in (
                o.kind.object_ids
                if isinstance(o.kind, RankedList)
                else [e[0] for e in o.kind.entries]
            ):
                if oid not in known:
                    raise DatasetError(
                        f"order group {o.group} references unknown object id {oid!r}"
                    )


class Preference(tuple):
    """A (preferred, other, group) triple."""

    __slots__ = ()

    def __new__(cls, preferred: str, other: str, group: int):
        return super().__new__(cls, (preferred, other, group))

    @property
    def preferred(self) -> str:
        return self[0]

    @property
    def other(self) -> str:
        return self[1]

    @property
    def group(self) -> int:
        return self[2]


@dataclass(frozen=True)
class PreferenceSet:
    pairs: tuple[Preference, ...]

    def __post_init__(self) -> None:
        seen: set[tuple[str, str, int]] = set()
        for p in self.pairs:
            if p.preferred == p.other:
                raise DatasetError(f"pair with identical objects {p.preferred!r}")
            if (p.other, p.preferred, p.group) in seen:
                raise DatasetError(
                    f"contradictory pair ({p.preferred!r}, {p.other!r}) "
                    f"in group {p.group}"
                )
            seen.add((p.preferred, p.other, p.group))

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def groups(self) -> tuple[int, ...]:
        seen: dict[int, None] = {}
        for p in self.pairs:
            seen.setdefault(p.group, None)
        return tuple(seen)

    def for_groups(self, groups: Iterable[int]) -> "PreferenceSet":
        wanted = set(groups)
        return PreferenceSet(tuple(p for p in self.pairs if p.group in wanted))


@dataclass(frozen=True)
class ParserOptions:
    """Knobs for the delimited-text parsers.

    ``label_column``, ``id_column`` and ``group_column`` name columns by
    header and therefore require ``has_header``.  Without a header the label
    is the last column and ids are synthesized as row indices.
    """

    separator: str = ","
    skip_lines: int = 0
    has_header: bool = False
    label_column: str | None = None
    id_column: str | None = None
    group_column: str | None = None
    higher_is_better: bool = True

    def __post_init__(self) -> None:
        if len(self.separator) != 1 or self.separator in "\r\n":
            raise DatasetError("separator must be a single non-newline character")
        if self.skip_lines < 0:
            raise DatasetError("skip_lines must be >= 0")
        if not self.has_header:
            for label, value in (
                ("label_column", self.label_column),
                ("id_column", self.id_column),
                ("group_column", self.group_column),
            ):
                if value is not None:
                    raise DatasetError(f"{label} requires has_header")


Source = Union[str, Path, IO[str], IO[bytes], bytes]


def _read_text(source: Source) -> str:
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8")
    if isinstance(source, str):
        return source
    if isinstance(source, bytes):
        return source.decode("utf-8")
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def _data_lines(text: str, opts: ParserOptions) -> Iterator[tuple[int, str]]:
    """Yield (1-based physical line number, content) after skips and comments."""
    for lineno, line in enumerate(text.splitlines(), start=1):
        if lineno <= opts.skip_lines:
            continue
        if not line.strip():
            continue
        if line.lstrip().startswith("#"):
            continue
        yield lineno, line


def _split(line: str, opts: ParserOptions) -> list[str]:
    return [cell.strip() for cell in line.split(opts.separator)]


def _parse_float(cell: str) -> float | None:
    try:
        return float(cell)
    except ValueError:
        return None


def _build_columns(
    records: list[tuple[int, list[str]]], names: list[str]
) -> tuple[FeatureSchema, list[list[Cell]]]:
    """Infer feature kinds column by column: all-parsable -> numeric, else nominal."""
    n_cols = len(names)
    columns: list[list[Cell]] = []
    features: list[Feature] = []
    for j in range(n_cols):
        raw = [cells[j] for _, cells in records]
        parsed = [_parse_float(c) for c in raw]
        if all(v is not None for v in parsed):
            features.append(Feature(names[j], Numeric()))
            columns.append(list(parsed))  # type: ignore[arg-type]
        else:
            cats: dict[str, None] = {}
            for c in raw:
                cats.setdefault(c, None)
            features.append(Feature(names[j], Nominal(tuple(cats))))
            columns.append(list(raw))
    return FeatureSchema(tuple(features)), columns


def _collect_records(
    text: str, opts: ParserOptions, what: str
) -> tuple[list[str] | None, list[tuple[int, list[str]]]]:
    """Split a file into an optional header and (lineno, cells) records."""
    lines = _data_lines(text, opts)
    header: list[str] | None = None
    if opts.has_header:
        try:
            _, first = next(lines)
        except StopIteration:
            raise DatasetError(f"empty {what} (no header line)") from None
        header = _split(first, opts)
    records = []
    arity = len(header) if header is not None else None
    for lineno, line in lines:
        cells = _split(line, opts)
        if arity is None:
            arity = len(cells)
        if len(cells) != arity:
            raise DatasetError(
                f"line {lineno}: expected {arity} fields, got {len(cells)}"
            )
        records.append((lineno, cells))
    if not records:
        raise DatasetError(f"empty {what} (no data rows)")
    return header, records


def _column_index(header: list[str], name: str, what: str) -> int:
    try:
        return header.index(name)
    except ValueError:
        raise DatasetError(f"{what} {name!r} not found in header") from None


def parse_objects(source: Source, opts: ParserOptions = ParserOptions()) -> DataTable:
    """Parse an objects file: id column (or synthesized row indices) plus features.

    With a header, ``id_column`` names the id column; the dual-file default is
    the first column.  Without a header all columns are features and ids are
    row indices.
    """
    header, records = _collect_records(_read_text(source), opts, "objects file")
    if header is not None:
        id_idx = (
            _column_index(header, opts.id_column, "id_column")
            if opts.id_column is not None
            else 0
        )
        feat_idx = [j for j in range(len(header)) if j != id_idx]
        ids = []
        for lineno, cells in records:
            ids.append(cells[id_idx])
        names = [header[j] for j in feat_idx]
    else:
        feat_idx = list(range(len(records[0][1])))
        ids = [str(i) for i in range(len(records))]
        names = [f"f{j}" for j in feat_idx]
    trimmed = [(lineno, [cells[j] for j in feat_idx]) for lineno, cells in records]
    schema, columns = _build_columns(trimmed, names)
    rows = tuple(tuple(col[i] for col in columns) for i in range(len(records)))
    try:
        return DataTable(schema=schema, ids=tuple(ids), rows=rows)
    except DatasetError as exc:
        raise DatasetError(f"objects file: {exc}") from None


def parse_single_file(
    source: Source, opts: ParserOptions = ParserOptions()
) -> tuple[DataTable, OrderSet]:
    """Parse the single-file layout: features plus a real rating label per row.

    Produces one ``Ratings`` order per group; a single group 0 when no group
    column is configured.  The label column defaults to the last column.
    """
    header, records = _collect_records(_read_text(source), opts, "dataset")
    n_cols = len(records[0][1])
    names = header if header is not None else [f"c{j}" for j in range(n_cols)]

    if opts.label_column is not None:
        label_idx = _column_index(names, opts.label_column, "label_column")
    else:
        label_idx = n_cols - 1
    id_idx = (
        _column_index(names, opts.id_column, "id_column")
        if opts.id_column is not None
        else None
    )
    group_idx = (
        _column_index(names, opts.group_column, "group_column")
        if opts.group_column is not None
        else None
    )
    special = {label_idx} | {j for j in (id_idx, group_idx) if j is not None}
    if len(special) < 1 + (id_idx is not None) + (group_idx is not None):
        raise DatasetError("id, label and group columns must be distinct")
    feat_idx = [j for j in range(n_cols) if j not in special]
    if not feat_idx:
        raise DatasetError("dataset has no feature columns")

    ids: list[str] = []
    labels: list[float] = []
    groups: list[int] = []
    for row_i, (lineno, cells) in enumerate(records):
        lbl = _parse_float(cells[label_idx])
        if lbl is None:
            raise DatasetError(
                f"line {lineno}, column {names[label_idx]!r}: "
                f"cannot parse {cells[label_idx]!r} as a number"
            )
        labels.append(lbl)
        ids.append(cells[id_idx] if id_idx is not None else str(row_i))
        if group_idx is not None:
            g = _parse_float(cells[group_idx])
            if g is None or g != int(g):
                raise DatasetError(
                    f"line {lineno}, column {names[group_idx]!r}: "
                    f"cannot parse {cells[group_idx]!r} as an integer group"
                )
            groups.append(int(g))
        else:
            groups.append(0)

    feat_names = (
        [names[j] for j in feat_idx]
        if header is not None
        else [f"f{k}" for k in range(len(feat_idx))]
    )
    trimmed = [(lineno, [cells[j] for j in feat_idx]) for lineno, cells in records]
    schema, columns = _build_columns(trimmed, feat_names)
    rows = tuple(tuple(col[i] for col in columns) for i in range(len(records)))
    table = DataTable(schema=schema, ids=tuple(ids), rows=rows)

    by_group: dict[int, list[tuple[str, float]]] = {}
    for oid, lbl, g in zip(ids, labels, groups):
        by_group.setdefault(g, []).append((oid, lbl))
    orders = OrderSet(
        tuple(
            Order(group=g, kind=Ratings(tuple(entries)))
            for g, entries in by_group.items()
        )
    )
    return table, orders


def parse_dual_file(
    objects: Source, orders: Source, opts: ParserOptions = ParserOptions()
) -> tuple[DataTable, OrderSet]:
    """Parse the dual-file layout: objects file plus ranked-list orders file.

    Each orders line holds object ids, most preferred first, separated by the
    same separator; the line index (0-based, among actual orders) becomes the
    group id.
    """
    table = parse_objects(objects, opts)
    known = set(table.ids)
    parsed: list[Order] = []
    for lineno, line in _data_lines(_read_text(orders), opts):
        ids = _split(line, opts)
        seen: set[str] = set()
        for oid in ids:
            if oid not in known:
                raise DatasetError(f"line {lineno}: unknown object id {oid!r}")
            if oid in seen:
                raise DatasetError(f"line {lineno}: duplicate object id {oid!r}")
            seen.add(oid)
        if len(ids) < 2:
            raise DatasetError(f"line {lineno}: an order needs at least two objects")
        parsed.append(Order(group=len(parsed), kind=RankedList(tuple(ids))))
    if not parsed:
        raise DatasetError("empty orders file")
    return table, OrderSet(tuple(parsed))


def extract_pairs(orders: OrderSet, higher_is_better: bool = True) -> PreferenceSet:
    """Flatten orders into pairwise preferences.

    A ranked list of n items yields all n(n-1)/2 pairs (earlier preferred);
    ratings yield one pair per unordered pair with strictly unequal labels,
    ties yield nothing.  Pairs inherit the order's group id.
    """
    pairs: list[Preference] = []
    for order in orders.orders:
        if isinstance(order.kind, RankedList):
            ids = order.kind.object_ids
            for i in range(len(ids)):
                for j in range(i + 1, len(ids)):
                    pairs.append(Preference(ids[i], ids[j], order.group))
        else:
            entries = order.kind.entries
            for i in range(len(entries)):
                for j in range(i + 1, len(entries)):
                    (id_a, lbl_a), (id_b, lbl_b) = entries[i], entries[j]
                    if lbl_a == lbl_b:
                        continue
                    a_wins = (lbl_a > lbl_b) == higher_is_better
                    if a_wins:
                        pairs.append(Preference(id_a, id_b, order.group))
                    else:
                        pairs.append(Preference(id_b, id_a, order.group))
    return PreferenceSet(tuple(pairs))


def pairs_to_orders(prefs: PreferenceSet) -> OrderSet:
    """Lift each preference to a two-item ranked list carrying its group id.

    Only valid when every group holds exactly one pair (synthetic pair data);
    grouped data should keep its original orders.
    """
    by_group: dict[int, int] = {}
    for p in prefs.pairs:
        by_group[p.group] = by_group.get(p.group, 0) + 1
        if by_group[p.group] > 1:
            raise DatasetError(
                f"group {p.group} holds more than one pair; "
                "cannot lift to two-item orders"
            )
    return OrderSet(
        tuple(
            Order(group=p.group, kind=RankedList((p.preferred, p.other)))
            for p in prefs.pairs
        )
    )


def _format_cell(value: Cell) -> str:
    if isinstance(value, float):
        return repr(value)
    return value


def write_objects(table: DataTable, separator: str = ",", id_name: str = "id") -> str:
    """Serialize a table to delimited text (header + rows), parse_objects-compatible."""
    out = io.StringIO()
    out.write(separator.join([id_name, *table.feature_names]) + "\n")
    for oid, row in zip(table.ids, table.rows):
        out.write(separator.join([oid, *(_format_cell(v) for v in row)]) + "\n")
    return out.getvalue()


def write_orders(orders: OrderSet, separator: str = ",") -> str:
    """Serialize ranked-list orders, one line per order, most preferred first."""
    out = io.StringIO()
    for order in orders.orders:
        if not isinstance(order.kind, RankedList):
            raise DatasetError("only ranked-list orders have a dual-file form")
        out.write(separator.join(order.kind.object_ids) + "\n")
    return out.getvalue()


def write_single_file(
    table: DataTable,
    orders: OrderSet,
    separator: str = ",",
    id_name: str = "id",
    label_name: str = "label",
    group_name: str = "group",
) -> str:
    """Serialize a table plus ratings orders to the single-file layout."""
    labels: dict[str, float] = {}
    groups: dict[str, int] = {}
    for order in orders.orders:
        if not isinstance(order.kind, Ratings):
            raise DatasetError("single-file form needs ratings orders")
        for oid, lbl in order.kind.entries:
            labels[oid] = lbl
            groups[oid] = order.group
    missing = [oid for oid in table.ids if oid not in labels]
    if missing:
        raise DatasetError(f"object {missing[0]!r} has no rating label")
    multi_group = len({g for g in groups.values()}) > 1
    header = [id_name, *table.feature_names, label_name]
    if multi_group:
        header.append(group_name)
    out = io.StringIO()
    out.write(separator.join(header) + "\n")
    for oid, row in zip(table.ids, table.rows):
        cells = [oid, *(_format_cell(v) for v in row), repr(labels[oid])]
        if multi_group:
            cells.append(str(groups[oid]))
        out.write(separator.join(cells) + "\n")
    return out.getvalue()
