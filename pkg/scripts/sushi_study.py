#!/usr/bin/env python3
"""Rank-correlation study on the public sushi preference dataset.

The dataset is not bundled (it must be downloaded separately from its
maintainers: search for "sushi preference data set", files sushi3.idata and
sushi3b.5000.10.order). Point --raw-dir at the unpacked distribution, or
--objects/--orders at dual-file CSVs produced by an earlier --out-dir run.

For each requested learner this runs 5-fold cross-validation over the orders
and reports the mean Spearman rank correlation of held-out rankings.

Usage:
    python3 scripts/sushi_study.py --raw-dir ~/sushi3 [--out-dir data/sushi]
    python3 scripts/sushi_study.py --objects objects.csv --orders orders.csv
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from preflearn.ann import BackpropConfig
from preflearn.dataset import (
    DataTable,
    DatasetError,
    Feature,
    FeatureSchema,
    Numeric,
    Order,
    OrderSet,
    ParserOptions,
    RankedList,
    parse_dual_file,
    write_objects,
    write_orders,
)
from preflearn.evaluation import sushi_protocol
from preflearn.learners import Backprop, Neuro, RankSvm
from preflearn.ranksvm import Rbf, SvmParams

N_MINOR_GROUPS = 12  # minor-group codes 0..11 are one-hot encoded


def load_raw_objects(path: Path) -> DataTable:
    """Parse the item-attribute file (sushi3.idata).

    Expected layout per tab-separated line: id, name, style, major group,
    minor group (0..11), oiliness, eating frequency, price, selling
    frequency. The minor group is one-hot encoded, giving 18 features.
    """
    names = ["style", "major"]
    names += [f"minor_{g}" for g in range(N_MINOR_GROUPS)]
    names += ["oiliness", "eat_freq", "price", "sell_freq"]
    schema = FeatureSchema(tuple(Feature(n, Numeric()) for n in names))

    ids = []
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) < 9:
            raise DatasetError(
                f"{path.name} line {lineno}: expected 9 tab-separated columns, "
                f"got {len(cells)}"
            )
        item_id = cells[0].strip()
        try:
            style, major, minor = (float(cells[i]) for i in (2, 3, 4))
            tail = [float(c) for c in cells[5:9]]
        except ValueError as exc:
            raise DatasetError(f"{path.name} line {lineno}: {exc}") from exc
        minor_code = int(minor)
        if not 0 <= minor_code < N_MINOR_GROUPS:
            raise DatasetError(
                f"{path.name} line {lineno}: minor group {minor_code} out of range"
            )
        one_hot = [1.0 if g == minor_code else 0.0 for g in range(N_MINOR_GROUPS)]
        ids.append(item_id)
        rows.append(tuple([style, major] + one_hot + tail))
    if not ids:
        raise DatasetError(f"{path.name}: no items found")
    return DataTable(schema=schema, ids=tuple(ids), rows=tuple(rows))


def load_raw_orders(path: Path, known_ids: set[str]) -> OrderSet:
    """Parse an order file (sushi3b.5000.10.order).

    Each data line is "<tag> <n> id_1 ... id_n" with ids most-preferred
    first; a leading header line without that shape is skipped.
    """
    orders = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) >= 3 and tokens[1].isdigit() and len(tokens) == int(tokens[1]) + 2:
            ranked = tokens[2:]
        elif lineno == 1:
            continue  # header line (counts only)
        else:
            raise DatasetError(
                f"{path.name} line {lineno}: expected '<tag> <n> id_1 ... id_n'"
            )
        unknown = [i for i in ranked if i not in known_ids]
        if unknown:
            raise DatasetError(
                f"{path.name} line {lineno}: unknown item id {unknown[0]!r}"
            )
        orders.append(
            Order(group=len(orders), kind=RankedList(object_ids=tuple(ranked)))
        )
    if not orders:
        raise DatasetError(f"{path.name}: no orders found")
    return OrderSet(tuple(orders))


def make_learners() -> dict:
    return {
        "ranksvm-rbf": RankSvm(SvmParams(C=1.0, kernel=Rbf(gamma=1.0 / 18))),
        "backprop": Backprop(config=BackpropConfig(learning_rate=0.1, epochs=100)),
    }


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    source = parser.add_argument_group("dataset source (pick one)")
    source.add_argument("--raw-dir", type=Path, help="unpacked sushi3 distribution")
    source.add_argument("--objects", type=Path, help="converted objects CSV")
    source.add_argument("--orders", type=Path, help="converted orders CSV")
    parser.add_argument("--out-dir", type=Path, help="write converted dual-file CSVs")
    parser.add_argument("--convert-only", action="store_true")
    parser.add_argument("--learner", choices=sorted(make_learners()), action="append")
    parser.add_argument("--max-orders", type=int, default=None,
                        help="subsample the first N orders (quick runs)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    try:
        if args.raw_dir is not None:
            table = load_raw_objects(args.raw_dir / "sushi3.idata")
            orders = load_raw_orders(
                args.raw_dir / "sushi3b.5000.10.order", set(table.ids)
            )
        elif args.objects is not None and args.orders is not None:
            table, orders = parse_dual_file(
                args.objects, args.orders, ParserOptions(has_header=True)
            )
        else:
            parser.error("need either --raw-dir or both --objects and --orders")

        if args.out_dir is not None:
            args.out_dir.mkdir(parents=True, exist_ok=True)
            (args.out_dir / "objects.csv").write_text(write_objects(table))
            (args.out_dir / "orders.csv").write_text(write_orders(orders))
            print(f"converted dataset written to {args.out_dir}", file=sys.stderr)
        if args.convert_only:
            return 0

        if args.max_orders is not None:
            orders = OrderSet(orders.orders[: args.max_orders])
        print(
            f"{len(table)} objects, {len(orders)} orders, "
            f"{len(table.feature_names)} features",
            file=sys.stderr,
        )
        for name in args.learner or sorted(make_learners()):
            learner = make_learners()[name]
            result = sushi_protocol(table, orders, learner, k=5, seed=args.seed)
            print(f"{name:<14} mean rho = {result.mean:.4f}  "
                  f"folds = {[f'{v:.3f}' for v in result.values]}")
    except (DatasetError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
