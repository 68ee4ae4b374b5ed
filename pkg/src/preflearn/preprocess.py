"""Feature statistics and table transforms.

Every transform is expressed twice: a plan step (what to do) and a fitted
step (the parameters learned from a concrete table).  Fitting on training
rows and replaying the fitted parameters on unseen rows is what keeps
cross-validation leak-free and lets a stored model preprocess new objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from preflearn.dataset import (
    DataTable,
    DatasetError,
    Feature,
    FeatureSchema,
    Nominal,
    Numeric,
)


class PreprocessError(ValueError):
    pass


@dataclass(frozen=True)
class NumericStats:
    minimum: float
    maximum: float
    mean: float
    std: float
    distinct: int


@dataclass(frozen=True)
class NominalStats:
    frequencies: dict[str, int]
    distinct: int


@dataclass(frozen=True)
class FeatureStats:
    per_feature: dict[str, Union[NumericStats, NominalStats]]
    row_count: int

    def to_json(self) -> dict:
        out = {}
        for name, s in self.per_feature.items():
            if isinstance(s, NumericStats):
                out[name] = {
                    "kind": "numeric",
                    "min": s.minimum,
                    "max": s.maximum,
                    "mean": s.mean,
                    "std": s.std,
                    "distinct": s.distinct,
                }
            else:
                out[name] = {
                    "kind": "nominal",
                    "frequencies": dict(s.frequencies),
                    "distinct": s.distinct,
                }
        return {"row_count": self.row_count, "features": out}


def compute_stats(table: DataTable) -> FeatureStats:
    """Per-feature summary statistics; std is the population std (divide by n)."""
    if len(table) == 0:
        raise PreprocessError("cannot compute statistics of an empty table")
    per: dict[str, Union[NumericStats, NominalStats]] = {}
    n = len(table)
    for j, feat in enumerate(table.schema.features):
        col = [row[j] for row in table.rows]
        if isinstance(feat.kind, Numeric):
            mean = math.fsum(col) / n
            var = math.fsum((v - mean) ** 2 for v in col) / n
            per[feat.name] = NumericStats(
                minimum=min(col),
                maximum=max(col),
                mean=mean,
                std=math.sqrt(var),
                distinct=len(set(col)),
            )
        else:
            freqs = {c: 0 for c in feat.kind.categories}
            for v in col:
                freqs[v] += 1
            per[feat.name] = NominalStats(frequencies=freqs, distinct=len(set(col)))
    return FeatureStats(per_feature=per, row_count=n)


# ---------------------------------------------------------------------------
# Plan steps


@dataclass(frozen=True)
class Include:
    features: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.features:
            raise PreprocessError("include step needs at least one feature")


@dataclass(frozen=True)
class MinMax:
    feature: str


@dataclass(frozen=True)
class ZScore:
    feature: str


@dataclass(frozen=True)
class NominalToBinary:
    feature: str


@dataclass(frozen=True)
class NumericToNominal:
    feature: str
    bins: int

    def __post_init__(self) -> None:
        if self.bins < 2:
            raise PreprocessError("bin count must be at least 2")


Step = Union[Include, MinMax, ZScore, NominalToBinary, NumericToNominal]


@dataclass(frozen=True)
class PreprocessPlan:
    steps: tuple[Step, ...] = ()

    def to_json(self) -> list[dict]:
        out = []
        for s in self.steps:
            if isinstance(s, Include):
                out.append({"op": "include", "features": list(s.features)})
            elif isinstance(s, MinMax):
                out.append({"op": "min_max", "feature": s.feature})
            elif isinstance(s, ZScore):
                out.append({"op": "z_score", "feature": s.feature})
            elif isinstance(s, NominalToBinary):
                out.append({"op": "nominal_to_binary", "feature": s.feature})
            else:
                out.append(
                    {"op": "numeric_to_nominal", "feature": s.feature, "bins": s.bins}
                )
        return out

    @staticmethod
    def from_json(data: list) -> "PreprocessPlan":
        steps: list[Step] = []
        for i, raw in enumerate(data):
            if not isinstance(raw, dict) or "op" not in raw:
                raise PreprocessError(f"plan step {i}: expected an object with 'op'")
            op = raw["op"]
            try:
                if op == "include":
                    steps.append(Include(tuple(raw["features"])))
                elif op == "min_max":
                    steps.append(MinMax(raw["feature"]))
                elif op == "z_score":
                    steps.append(ZScore(raw["feature"]))
                elif op == "nominal_to_binary":
                    steps.append(NominalToBinary(raw["feature"]))
                elif op == "numeric_to_nominal":
                    steps.append(NumericToNominal(raw["feature"], int(raw["bins"])))
                else:
                    raise PreprocessError(f"plan step {i}: unknown op {op!r}")
            except KeyError as exc:
                raise PreprocessError(f"plan step {i}: missing field {exc}") from None
        return PreprocessPlan(tuple(steps))


# ---------------------------------------------------------------------------
# Fitted steps


def _numeric_column(table: DataTable, feature: str) -> tuple[int, list[float]]:
    j = table.schema.index_of(feature)
    if not isinstance(table.schema.features[j].kind, Numeric):
        raise PreprocessError(f"feature {feature!r} is not numeric")
    return j, [row[j] for row in table.rows]


def _replace_column(
    table: DataTable, index: int, feature: Feature, values: list
) -> DataTable:
    features = list(table.schema.features)
    features[index] = feature
    rows = tuple(
        tuple(values[i] if k == index else cell for k, cell in enumerate(row))
        for i, row in enumerate(table.rows)
    )
    return DataTable(FeatureSchema(tuple(features)), table.ids, rows)


@dataclass(frozen=True)
class FittedInclude:
    features: tuple[str, ...]

    def apply(self, table: DataTable) -> DataTable:
        return table.select_features(self.features)


@dataclass(frozen=True)
class FittedMinMax:
    feature: str
    minimum: float
    maximum: float

    def apply(self, table: DataTable) -> DataTable:
        j, col = _numeric_column(table, self.feature)
        span = self.maximum - self.minimum
        values = [(v - self.minimum) / span for v in col]
        return _replace_column(table, j, table.schema.features[j], values)


@dataclass(frozen=True)
class FittedZScore:
    feature: str
    mean: float
    std: float

    def apply(self, table: DataTable) -> DataTable:
        j, col = _numeric_column(table, self.feature)
        values = [(v - self.mean) / self.std for v in col]
        return _replace_column(table, j, table.schema.features[j], values)


@dataclass(frozen=True)
class FittedNominalToBinary:
    feature: str
    categories: tuple[str, ...]

    def apply(self, table: DataTable) -> DataTable:
        j = table.schema.index_of(self.feature)
        kind = table.schema.features[j].kind
        if not isinstance(kind, Nominal):
            raise PreprocessError(f"feature {self.feature!r} is not nominal")
        features = list(table.schema.features)
        binary = [
            Feature(f"{self.feature}={cat}", Numeric()) for cat in self.categories
        ]
        features[j : j + 1] = binary
        rows = []
        for row in table.rows:
            value = row[j]
            if value not in self.categories:
                raise PreprocessError(
                    f"feature {self.feature!r}: unseen category {value!r}"
                )
            onehot = tuple(1.0 if cat == value else 0.0 for cat in self.categories)
            rows.append(row[:j] + onehot + row[j + 1 :])
        return DataTable(FeatureSchema(tuple(features)), table.ids, tuple(rows))


@dataclass(frozen=True)
class FittedNumericToNominal:
    feature: str
    minimum: float
    maximum: float
    bins: int

    def apply(self, table: DataTable) -> DataTable:
        j, col = _numeric_column(table, self.feature)
        span = self.maximum - self.minimum
        cats = tuple(f"bin_{b}" for b in range(self.bins))
        values = []
        for v in col:
            b = int(self.bins * (v - self.minimum) / span)
            b = min(max(b, 0), self.bins - 1)
            values.append(cats[b])
        return _replace_column(table, j, Feature(self.feature, Nominal(cats)), values)


FittedStep = Union[
    FittedInclude, FittedMinMax, FittedZScore, FittedNominalToBinary, FittedNumericToNominal
]


@dataclass(frozen=True)
class FittedPlan:
    """Plan with parameters frozen; replaying it on any table is deterministic."""

    steps: tuple[FittedStep, ...] = ()

    def apply(self, table: DataTable) -> DataTable:
        for i, step in enumerate(self.steps):
            try:
                table = step.apply(table)
            except (PreprocessError, DatasetError) as exc:
                raise PreprocessError(f"step {i}: {exc}") from None
        return table

    def to_json(self) -> list[dict]:
        out = []
        for s in self.steps:
            if isinstance(s, FittedInclude):
                out.append({"op": "include", "features": list(s.features)})
            elif isinstance(s, FittedMinMax):
                out.append(
                    {
                        "op": "min_max",
                        "feature": s.feature,
                        "min": s.minimum,
                        "max": s.maximum,
                    }
                )
            elif isinstance(s, FittedZScore):
                out.append(
                    {"op": "z_score", "feature": s.feature, "mean": s.mean, "std": s.std}
                )
            elif isinstance(s, FittedNominalToBinary):
                out.append(
                    {
                        "op": "nominal_to_binary",
                        "feature": s.feature,
                        "categories": list(s.categories),
                    }
                )
            else:
                out.append(
                    {
                        "op": "numeric_to_nominal",
                        "feature": s.feature,
                        "min": s.minimum,
                        "max": s.maximum,
                        "bins": s.bins,
                    }
                )
        return out

    @staticmethod
    def from_json(data: list) -> "FittedPlan":
        steps: list[FittedStep] = []
        for i, raw in enumerate(data):
            if not isinstance(raw, dict) or "op" not in raw:
                raise PreprocessError(f"fitted step {i}: expected an object with 'op'")
            op = raw["op"]
            try:
                if op == "include":
                    steps.append(FittedInclude(tuple(raw["features"])))
                elif op == "min_max":
                    steps.append(
                        FittedMinMax(raw["feature"], float(raw["min"]), float(raw["max"]))
                    )
                elif op == "z_score":
                    steps.append(
                        FittedZScore(raw["feature"], float(raw["mean"]), float(raw["std"]))
                    )
                elif op == "nominal_to_binary":
                    steps.append(
                        FittedNominalToBinary(raw["feature"], tuple(raw["categories"]))
                    )
                elif op == "numeric_to_nominal":
                    steps.append(
                        FittedNumericToNominal(
                            raw["feature"],
                            float(raw["min"]),
                            float(raw["max"]),
                            int(raw["bins"]),
                        )
                    )
                else:
                    raise PreprocessError(f"fitted step {i}: unknown op {op!r}")
            except KeyError as exc:
                raise PreprocessError(f"fitted step {i}: missing field {exc}") from None
        return FittedPlan(tuple(steps))


def fit_step(table: DataTable, step: Step) -> FittedStep:
    if isinstance(step, Include):
        for name in step.features:
            table.schema.index_of(name)  # raises for unknown names
        return FittedInclude(step.features)
    if isinstance(step, MinMax):
        _, col = _numeric_column(table, step.feature)
        lo, hi = min(col), max(col)
        if hi == lo:
            raise PreprocessError(
                f"feature {step.feature!r} is constant; exclude it instead of scaling"
            )
        return FittedMinMax(step.feature, lo, hi)
    if isinstance(step, ZScore):
        _, col = _numeric_column(table, step.feature)
        n = len(col)
        mean = math.fsum(col) / n
        std = math.sqrt(math.fsum((v - mean) ** 2 for v in col) / n)
        if std == 0:
            raise PreprocessError(
                f"feature {step.feature!r} is constant; exclude it instead of scaling"
            )
        return FittedZScore(step.feature, mean, std)
    if isinstance(step, NominalToBinary):
        j = table.schema.index_of(step.feature)
        kind = table.schema.features[j].kind
        if not isinstance(kind, Nominal):
            raise PreprocessError(f"feature {step.feature!r} is not nominal")
        return FittedNominalToBinary(step.feature, kind.categories)
    if isinstance(step, NumericToNominal):
        _, col = _numeric_column(table, step.feature)
        lo, hi = min(col), max(col)
        if hi == lo:
            raise PreprocessError(
                f"feature {step.feature!r} is constant; cannot derive bins"
            )
        return FittedNumericToNominal(step.feature, lo, hi, step.bins)
    raise PreprocessError(f"unknown step {step!r}")


def apply_plan(table: DataTable, plan: PreprocessPlan) -> tuple[DataTable, FittedPlan]:
    """Fit and apply each step in order; the fitted plan replays on unseen objects."""
    fitted: list[FittedStep] = []
    for i, step in enumerate(plan.steps):
        try:
            fs = fit_step(table, step)
            table = fs.apply(table)
        except (PreprocessError, DatasetError) as exc:
            raise PreprocessError(f"step {i}: {exc}") from None
        fitted.append(fs)
    return table, FittedPlan(tuple(fitted))


def min_max(table: DataTable, feature: str) -> DataTable:
    """Rescale a numeric feature to [0,1] by its own min/max."""
    return fit_step(table, MinMax(feature)).apply(table)


def z_score(table: DataTable, feature: str) -> DataTable:
    """Center a numeric feature to mean 0 and population std 1."""
    return fit_step(table, ZScore(feature)).apply(table)


def nominal_to_binary(table: DataTable, feature: str) -> DataTable:
    """Replace a nominal feature by one 0/1 column per category."""
    return fit_step(table, NominalToBinary(feature)).apply(table)


def numeric_to_nominal(table: DataTable, feature: str, bins: int) -> DataTable:
    """Discretize a numeric feature into equal-width bins over its range."""
    return fit_step(table, NumericToNominal(feature, bins)).apply(table)
