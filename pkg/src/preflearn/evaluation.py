"""Validation protocols and metrics.

Cross-validation splits by preference *group* (one group per order, or one
group per synthetic pair), never by individual pair, so no order's pairs
straddle a fold boundary.  Preprocessing is re-fitted inside every fold on
the training rows only and replayed onto the held-out rows.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from preflearn import learners
from preflearn.dataset import (
    DataTable,
    OrderSet,
    PreferenceSet,
    RankedList,
    extract_pairs,
)
from preflearn.learners import Fitter, LearnerSpec, derive_seed
from preflearn.preprocess import PreprocessPlan, apply_plan


class EvaluationError(ValueError):
    pass


PAIRWISE_ACCURACY = "pairwise_accuracy"
SPEARMAN_RHO = "spearman_rho"
_METRICS = (PAIRWISE_ACCURACY, SPEARMAN_RHO)


@dataclass(frozen=True)
class TrainingSet:
    """Train and evaluate on the full dataset (optimistic estimate)."""


@dataclass(frozen=True)
class KFold:
    k: int
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.k < 2:
            raise EvaluationError("k must be at least 2")


Mode = Union[TrainingSet, KFold]


@dataclass(frozen=True)
class ValidationSpec:
    mode: Mode = KFold(3)
    metric: str = PAIRWISE_ACCURACY

    def __post_init__(self) -> None:
        if self.metric not in _METRICS:
            raise EvaluationError(f"unknown metric {self.metric!r}")


@dataclass(frozen=True)
class FoldResult:
    values: tuple[float, ...]
    durations: tuple[float, ...]  # wall-clock seconds per fold

    def __post_init__(self) -> None:
        if len(self.values) != len(self.durations):
            raise EvaluationError("one duration per fold value required")
        if not self.values:
            raise EvaluationError("a fold result needs at least one fold")

    @property
    def mean(self) -> float:
        return math.fsum(self.values) / len(self.values)

    @property
    def std(self) -> float:
        mu = self.mean
        return math.sqrt(
            math.fsum((v - mu) ** 2 for v in self.values) / len(self.values)
        )

    def to_json(self) -> dict:
        return {
            "values": list(self.values),
            "durations_s": list(self.durations),
            "mean": self.mean,
            "std": self.std,
        }

    @staticmethod
    def from_json(data: dict) -> "FoldResult":
        return FoldResult(
            values=tuple(float(v) for v in data["values"]),
            durations=tuple(float(v) for v in data["durations_s"]),
        )


def pairwise_accuracy(
    score_fn: Callable[[np.ndarray], np.ndarray],
    prefs: PreferenceSet,
    table: DataTable,
) -> float:
    """Fraction of pairs ranked correctly; ties credit 0.5.

    `score_fn` maps a feature matrix (one row per object) to a score vector;
    a trained model's `score_many` fits directly.
    """
    if len(prefs) == 0:
        raise EvaluationError("cannot score an empty preference set")
    sa = np.asarray(score_fn(table.matrix_for([p.preferred for p in prefs.pairs])))
    sb = np.asarray(score_fn(table.matrix_for([p.other for p in prefs.pairs])))
    d = sa - sb
    return float(np.mean(np.where(d > 0, 1.0, np.where(d == 0, 0.5, 0.0))))


def kfold_split(
    groups: Sequence[int], k: int, seed: int | None = None
) -> tuple[tuple[int, ...], ...]:
    """Seeded shuffle, then round-robin deal into k folds of near-equal size."""
    if k < 2:
        raise EvaluationError("k must be at least 2")
    if k > len(groups):
        raise EvaluationError(f"cannot split {len(groups)} groups into {k} folds")
    rng = np.random.default_rng(0 if seed is None else seed)
    shuffled = [groups[i] for i in rng.permutation(len(groups))]
    folds: list[list[int]] = [[] for _ in range(k)]
    for position, group in enumerate(shuffled):
        folds[position % k].append(group)
    return tuple(tuple(f) for f in folds)


def _average_ranks_desc(scores: np.ndarray) -> np.ndarray:
    """Fractional ranks, best (highest) score = rank 1; ties share the mean rank."""
    s = np.asarray(scores, dtype=float)
    order = np.argsort(-s, kind="stable")
    ranks = np.empty(len(s))
    sorted_s = s[order]
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(predicted_scores: Sequence[float], true_rank: Sequence[float]) -> float:
    """Rank correlation between predicted scores and a given true ranking.

    Predicted scores become descending average ranks (best score = rank 1).
    Without ties the classic 1 - 6*sum(d^2)/(n(n^2-1)) formula applies;
    with ties the Pearson correlation of the two rank vectors is used.
    """
    pred = np.asarray(predicted_scores, dtype=float)
    true = np.asarray(true_rank, dtype=float)
    if len(pred) != len(true):
        raise EvaluationError("score and rank vectors must have equal length")
    n = len(pred)
    if n < 2:
        raise EvaluationError("rank correlation needs at least two items")
    rp = _average_ranks_desc(pred)
    rt = true
    if np.ptp(rp) == 0.0 or np.ptp(rt) == 0.0:
        raise EvaluationError("rank correlation undefined for constant ranks")
    ties = len(np.unique(rp)) < n or len(np.unique(rt)) < n
    if not ties:
        d = rp - rt
        return float(1.0 - 6.0 * np.sum(d * d) / (n * (n * n - 1)))
    rp_c = rp - rp.mean()
    rt_c = rt - rt.mean()
    return float(np.sum(rp_c * rt_c) / np.sqrt(np.sum(rp_c**2) * np.sum(rt_c**2)))


def _true_ranks(kind, higher_is_better: bool) -> tuple[list[str], np.ndarray]:
    """Object ids of one order plus their true ranks (1 = most preferred)."""
    if isinstance(kind, RankedList):
        ids = list(kind.object_ids)
        return ids, np.arange(1, len(ids) + 1, dtype=float)
    ids = [oid for oid, _ in kind.entries]
    labels = np.array([label for _, label in kind.entries], dtype=float)
    return ids, _average_ranks_desc(labels if higher_is_better else -labels)


def _fold_metric(
    model,
    metric: str,
    val_orders: OrderSet,
    table: DataTable,
    higher_is_better: bool,
    fold_label: str,
) -> float:
    if metric == PAIRWISE_ACCURACY:
        val_prefs = extract_pairs(val_orders, higher_is_better)
        if len(val_prefs) == 0:
            raise EvaluationError(f"{fold_label}: no validation pairs")
        return pairwise_accuracy(model.score_many, val_prefs, table)
    rhos = []
    for order in val_orders.orders:
        ids, true = _true_ranks(order.kind, higher_is_better)
        if len(ids) < 2:
            continue
        scores = model.score_many(table.matrix_for(ids))
        rhos.append(spearman_rho(scores, true))
    if not rhos:
        raise EvaluationError(f"{fold_label}: no rankable validation orders")
    return float(np.mean(rhos))


def cross_validate(
    learner: LearnerSpec | Fitter,
    table: DataTable,
    orders: OrderSet,
    vspec: ValidationSpec = ValidationSpec(),
    plan: PreprocessPlan = PreprocessPlan(),
    higher_is_better: bool = True,
    on_progress: Callable[[float], None] | None = None,
    on_log: Callable[[str], None] | None = None,
    train_seed_base: int | None = None,
) -> FoldResult:
    """Group-wise validation of one learner.

    Per fold: fit the preprocessing plan on rows referenced by the training
    orders, replay it on the whole table, train on the training pairs, and
    evaluate the metric on the held-out orders.  TrainingSet mode trains and
    evaluates on everything (optimistic).  Per-fold trainer sub-seeds derive
    from (base, fold index) where base is `train_seed_base` if given, else
    the learner's own seed, else the split seed — so results do not depend
    on fold scheduling.
    """
    if len(orders) == 0:
        raise EvaluationError("no orders to validate on")
    mode = vspec.mode
    if isinstance(mode, TrainingSet):
        fold_sets = [tuple(orders.group_ids)]
        split_seed = None
    else:
        groups = orders.group_ids
        if mode.k > len(groups):
            raise EvaluationError(
                f"cannot split {len(groups)} groups into {mode.k} folds"
            )
        fold_sets = list(kfold_split(groups, mode.k, mode.seed))
        split_seed = mode.seed

    seed_base = train_seed_base
    if seed_base is None:
        seed_base = learners.base_seed(learner)
    if seed_base is None:
        seed_base = split_seed if split_seed is not None else 0

    n_folds = len(fold_sets)
    values: list[float] = []
    durations: list[float] = []
    for f, held_out in enumerate(fold_sets):
        fold_label = f"fold {f + 1}/{n_folds}"
        started = time.perf_counter()
        if isinstance(mode, TrainingSet):
            train_orders = orders
            val_orders = orders
        else:
            held = set(held_out)
            train_orders = orders.for_groups(g for g in orders.group_ids if g not in held)
            val_orders = orders.for_groups(held_out)
        train_ids = train_orders.referenced_ids()
        fit_rows = table.subset_rows([oid for oid in table.ids if oid in train_ids])

        def fold_progress(frac: float, _f=f) -> None:
            if on_progress is not None:
                on_progress((_f + min(max(frac, 0.0), 1.0)) / n_folds)

        try:
            _, fitted = apply_plan(fit_rows, plan)
            proc_table = fitted.apply(table)
            train_prefs = extract_pairs(train_orders, higher_is_better)
            if len(train_prefs) == 0:
                raise EvaluationError("no training pairs")
            model = learners.fit(
                learner,
                train_prefs,
                proc_table,
                seed=derive_seed(seed_base, f),
                on_progress=fold_progress,
            )
            value = _fold_metric(
                model, vspec.metric, val_orders, proc_table, higher_is_better, fold_label
            )
        except ValueError as exc:
            raise EvaluationError(f"{fold_label}: {exc}") from exc
        elapsed = time.perf_counter() - started
        values.append(value)
        durations.append(elapsed)
        if on_log is not None:
            on_log(f"{fold_label}: {vspec.metric} {value:.4f} ({elapsed:.2f} s)")
        if on_progress is not None:
            on_progress((f + 1) / n_folds)
    return FoldResult(values=tuple(values), durations=tuple(durations))


def sushi_protocol(
    table: DataTable,
    orders: OrderSet,
    learner: LearnerSpec | Fitter,
    k: int = 5,
    seed: int | None = None,
    plan: PreprocessPlan = PreprocessPlan(),
    higher_is_better: bool = True,
    on_progress: Callable[[float], None] | None = None,
    on_log: Callable[[str], None] | None = None,
) -> FoldResult:
    """K-fold over orders scoring each held-out order by rank correlation.

    Fold value = mean rho over that fold's held-out orders; the result's mean
    averages the folds.
    """
    vspec = ValidationSpec(mode=KFold(k, seed), metric=SPEARMAN_RHO)
    return cross_validate(
        learner,
        table,
        orders,
        vspec,
        plan,
        higher_is_better,
        on_progress=on_progress,
        on_log=on_log,
    )


def evaluate_model(
    model,
    orders: OrderSet,
    table: DataTable,
    metric: str = PAIRWISE_ACCURACY,
    higher_is_better: bool = True,
) -> float:
    """Metric of an already-trained model over a whole order set.

    The table must already be in the model's input space; callers replay any
    stored preprocessing themselves.
    """
    if metric not in _METRICS:
        raise EvaluationError(f"unknown metric {metric!r}")
    if len(orders) == 0:
        raise EvaluationError("no orders to evaluate on")
    return _fold_metric(model, metric, orders, table, higher_is_better, "evaluation")
