"""Learner specifications and a uniform fit entry point.

Validation, feature selection and the experiment pipeline all train models
through `fit` so that the three learner families stay interchangeable: every
returned model exposes `score_many` / `score` and carries its training
diagnostics.

Sub-seeds are derived with `derive_seed`, which feeds mixed int/str parts
into a seed sequence; string parts are hashed with SHA-256 first so the
derivation is stable across platforms and sessions.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from typing import Callable, Union

import numpy as np

from preflearn.ann import (
    BackpropConfig,
    NeuroConfig,
    backprop_train,
    neuroevolve,
)
from preflearn.dataset import DataTable, PreferenceSet
from preflearn.ranksvm import SvmParams, train_ranksvm


@dataclass(frozen=True)
class RankSvm:
    params: SvmParams = SvmParams()


@dataclass(frozen=True)
class Backprop:
    layers: tuple[int, ...] | None = None
    config: BackpropConfig = BackpropConfig()


@dataclass(frozen=True)
class Neuro:
    layers: tuple[int, ...] | None = None
    config: NeuroConfig = NeuroConfig()


LearnerSpec = Union[RankSvm, Backprop, Neuro]

# a custom fitter may stand in for a LearnerSpec anywhere: it is called as
# fitter(prefs, table, seed, on_progress) and must return a scoring model
Fitter = Callable[[PreferenceSet, DataTable, int, object], object]


def _entropy_part(part: int | str) -> int:
    if isinstance(part, str):
        return int.from_bytes(hashlib.sha256(part.encode()).digest()[:8], "little")
    return int(part)


def derive_seed(*parts: int | str) -> int:
    """Stable sub-seed from a tuple of ints and strings."""
    entropy = [_entropy_part(p) for p in parts]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def learner_name(learner: LearnerSpec | Fitter) -> str:
    if isinstance(learner, RankSvm):
        return "ranksvm"
    if isinstance(learner, Backprop):
        return "backprop"
    if isinstance(learner, Neuro):
        return "neuro"
    return getattr(learner, "__name__", "custom")


def base_seed(learner: LearnerSpec | Fitter) -> int | None:
    """The learner's own seed, if its config pins one."""
    if isinstance(learner, (Backprop, Neuro)):
        return learner.config.seed
    return None


def fit(
    learner: LearnerSpec | Fitter,
    prefs: PreferenceSet,
    table: DataTable,
    seed: int | None = None,
    on_progress: Callable[[float], None] | None = None,
):
    """Train one model.

    `seed`, when given, overrides any seed inside the learner config; this is
    how cross-validation injects per-fold sub-seeds.  The kernel ranker is
    deterministic and ignores seeds entirely.
    """
    if isinstance(learner, RankSvm):
        return train_ranksvm(prefs, table, learner.params, on_progress=on_progress)
    if isinstance(learner, Backprop):
        config = learner.config
        effective = seed if seed is not None else config.seed
        config = replace(config, seed=effective if effective is not None else 0)
        return backprop_train(
            prefs, table, learner.layers, config, on_progress=on_progress
        )
    if isinstance(learner, Neuro):
        config = learner.config
        effective = seed if seed is not None else config.seed
        config = replace(config, seed=effective if effective is not None else 0)
        return neuroevolve(
            prefs, table, learner.layers, config, on_progress=on_progress
        )
    if callable(learner):
        return learner(prefs, table, 0 if seed is None else seed, on_progress)
    raise TypeError(f"not a learner spec: {learner!r}")
