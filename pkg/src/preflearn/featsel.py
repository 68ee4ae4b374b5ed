"""Wrapper feature selection: subsets are scored by the cross-validated
pairwise accuracy of a model trained on them.

Two strategies: NBest scores every feature individually and keeps the top n;
SFS greedily grows a subset one feature per round until the best improvement
falls below a threshold or a size cap is hit.  Ties always break towards
schema order, and every candidate gets a seed derived from (selection seed,
candidate features), so evaluation order and scheduling never change results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Union

from preflearn.dataset import DataTable, OrderSet
from preflearn.evaluation import (
    PAIRWISE_ACCURACY,
    ValidationSpec,
    cross_validate,
)
from preflearn.learners import Fitter, LearnerSpec, derive_seed
from preflearn.preprocess import Include, PreprocessPlan


class FeatselError(ValueError):
    pass


@dataclass(frozen=True)
class NBest:
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise FeatselError("n must be >= 1")


@dataclass(frozen=True)
class Sfs:
    max_features: int
    min_improvement: float = 0.0

    def __post_init__(self) -> None:
        if self.max_features < 1:
            raise FeatselError("max_features must be >= 1")
        if self.min_improvement < 0:
            raise FeatselError("min_improvement must be >= 0")


Strategy = Union[NBest, Sfs]


@dataclass(frozen=True)
class SelectionConfig:
    strategy: Strategy
    learner: LearnerSpec | Fitter
    vspec: ValidationSpec = ValidationSpec()
    seed: int = 0


@dataclass(frozen=True)
class TraceEntry:
    round: int
    feature: str
    score: float


@dataclass(frozen=True)
class SelectionResult:
    features: tuple[str, ...]
    scores: tuple[float, ...]
    trace: tuple[TraceEntry, ...]

    def to_json(self) -> dict:
        return {
            "features": list(self.features),
            "scores": list(self.scores),
            "trace": [
                {"round": t.round, "feature": t.feature, "score": t.score}
                for t in self.trace
            ],
        }


def restrict_plan(plan: PreprocessPlan, features: Iterable[str]) -> PreprocessPlan:
    """Project a preprocessing plan onto a feature subset.

    Per-feature steps referencing excluded features are dropped; Include
    steps are intersected with the subset (and dropped when the intersection
    is empty, since the subset itself already acts as the inclusion filter).
    """
    wanted = set(features)
    steps = []
    for step in plan.steps:
        if isinstance(step, Include):
            kept = tuple(f for f in step.features if f in wanted)
            if kept:
                steps.append(Include(kept))
        elif step.feature in wanted:
            steps.append(step)
    return PreprocessPlan(tuple(steps))


def _ordered_subset(table: DataTable, subset: Iterable[str]) -> tuple[str, ...]:
    names = list(subset)
    if not names:
        raise FeatselError("feature subset must not be empty")
    if len(set(names)) != len(names):
        raise FeatselError("duplicate feature in subset")
    indexed = sorted((table.schema.index_of(n), n) for n in names)
    return tuple(n for _, n in indexed)


def score_subset(
    subset: Iterable[str],
    table: DataTable,
    orders: OrderSet,
    config: SelectionConfig,
    plan: PreprocessPlan = PreprocessPlan(),
    higher_is_better: bool = True,
    on_progress: Callable[[float], None] | None = None,
) -> float:
    """Mean validation pairwise accuracy of the learner on these features only."""
    ordered = _ordered_subset(table, subset)
    sub_table = table.select_features(ordered)
    sub_plan = restrict_plan(plan, ordered)
    vspec = ValidationSpec(mode=config.vspec.mode, metric=PAIRWISE_ACCURACY)
    seed = derive_seed(config.seed, "candidate", *ordered)
    result = cross_validate(
        config.learner,
        sub_table,
        orders,
        vspec,
        sub_plan,
        higher_is_better,
        on_progress=on_progress,
        train_seed_base=seed,
    )
    return result.mean


def n_best(
    table: DataTable,
    orders: OrderSet,
    config: SelectionConfig,
    plan: PreprocessPlan = PreprocessPlan(),
    higher_is_better: bool = True,
    on_progress: Callable[[float], None] | None = None,
    on_log: Callable[[str], None] | None = None,
) -> SelectionResult:
    """Score each feature alone; keep the top n, ties broken by schema order."""
    if not isinstance(config.strategy, NBest):
        raise FeatselError("n_best requires an NBest strategy")
    names = table.feature_names
    scored = []
    trace = []
    for j, name in enumerate(names):
        sub_progress = None
        if on_progress is not None:
            sub_progress = lambda frac, _j=j: on_progress((_j + frac) / len(names))
        s = score_subset(
            [name], table, orders, config, plan, higher_is_better, sub_progress
        )
        scored.append((-s, j, name))
        trace.append(TraceEntry(round=0, feature=name, score=s))
        if on_log is not None:
            on_log(f"feature {name}: {s:.4f}")
        if on_progress is not None:
            on_progress((j + 1) / len(names))
    scored.sort()
    keep = min(config.strategy.n, len(names))
    chosen = scored[:keep]
    return SelectionResult(
        features=tuple(name for _, _, name in chosen),
        scores=tuple(-neg for neg, _, _ in chosen),
        trace=tuple(trace),
    )


def sfs(
    table: DataTable,
    orders: OrderSet,
    config: SelectionConfig,
    plan: PreprocessPlan = PreprocessPlan(),
    higher_is_better: bool = True,
    on_progress: Callable[[float], None] | None = None,
    on_log: Callable[[str], None] | None = None,
) -> SelectionResult:
    """Greedy forward selection.

    Each round adds the feature whose addition scores highest; the loop stops
    when that best score improves on the previous round by less than
    min_improvement, when max_features is reached, or when no features remain.
    """
    if not isinstance(config.strategy, Sfs):
        raise FeatselError("sfs requires an Sfs strategy")
    strategy = config.strategy
    names = table.feature_names
    current: list[str] = []
    scores: list[float] = []
    trace: list[TraceEntry] = []
    last_score = float("-inf")
    for round_no in range(1, strategy.max_features + 1):
        candidates = [n for n in names if n not in current]
        if not candidates:
            break
        best_name, best_score = None, float("-inf")
        for c, name in enumerate(candidates):  # schema order; > keeps first on ties
            sub_progress = None
            if on_progress is not None:
                sub_progress = lambda frac, _c=c: on_progress(
                    (round_no - 1 + (_c + frac) / len(candidates))
                    / strategy.max_features
                )
            s = score_subset(
                current + [name],
                table,
                orders,
                config,
                plan,
                higher_is_better,
                sub_progress,
            )
            if s > best_score:
                best_name, best_score = name, s
        improvement = best_score - last_score
        # continue only on a real gain that clears the threshold; with the
        # default threshold 0 this stops on any plateau
        if improvement <= 0 or improvement < strategy.min_improvement:
            if on_log is not None:
                on_log(
                    f"round {round_no}: best addition {best_name} ({best_score:.4f}) "
                    "does not improve enough; stopping"
                )
            break
        current.append(best_name)
        scores.append(best_score)
        trace.append(TraceEntry(round=round_no, feature=best_name, score=best_score))
        last_score = best_score
        if on_log is not None:
            on_log(f"round {round_no}: added {best_name} ({best_score:.4f})")
    if on_progress is not None:
        on_progress(1.0)
    return SelectionResult(
        features=tuple(current), scores=tuple(scores), trace=tuple(trace)
    )
