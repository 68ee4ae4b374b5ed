"""Synthetic preference benchmarks: uniform random objects ordered by a
hidden utility (linear, quadratic, or a fixed random MLP).

Reproducibility contract: all draws come from numpy's default_rng (PCG64, a
portable, fully specified 64-bit generator), never the global numpy state.
For a given spec the draw order is pinned: (1) the full object matrix in one
uniform call, (2) sequential redraws for utility-tied pairs, (3) one uniform
call deciding noise flips.  Default utility parameters come from sub-streams
seeded (seed, 1), (seed, 2) and (seed, 3) so they are independent of the
object draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from preflearn.ann import MlpModel, TANH, init_weights
from preflearn.dataset import (
    DataTable,
    Feature,
    FeatureSchema,
    Numeric,
    Preference,
    PreferenceSet,
)
from preflearn.evaluation import pairwise_accuracy


class SyntheticError(ValueError):
    pass


@dataclass(frozen=True)
class Linear:
    """u(x) = w . x; weights default to seeded uniform [0, 1]."""

    weights: tuple[float, ...] | None = None


@dataclass(frozen=True)
class Quadratic:
    """u(x) = x^T Q x + w . x; Q defaults to seeded symmetric entries in [-1, 1]."""

    q: tuple[tuple[float, ...], ...] | None = None
    weights: tuple[float, ...] | None = None


@dataclass(frozen=True)
class RandomMlp:
    """u(x) = fixed random tanh network with one hidden layer."""

    hidden: int = 20
    seed: int | None = None  # None: derived from the spec seed

    def __post_init__(self) -> None:
        if self.hidden < 1:
            raise SyntheticError("hidden size must be >= 1")


UtilityFn = Union[Linear, Quadratic, RandomMlp]


@dataclass(frozen=True)
class SynthSpec:
    n_pairs: int
    n_features: int = 10
    function: UtilityFn = Linear()
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_pairs < 1:
            raise SyntheticError("n_pairs must be >= 1")
        if self.n_features < 1:
            raise SyntheticError("n_features must be >= 1")
        if not 0.0 <= self.noise < 1.0:
            raise SyntheticError("noise must lie in [0, 1)")
        fn = self.function
        if isinstance(fn, Linear) and fn.weights is not None:
            if len(fn.weights) != self.n_features:
                raise SyntheticError("weight vector length must equal n_features")
        if isinstance(fn, Quadratic):
            if fn.weights is not None and len(fn.weights) != self.n_features:
                raise SyntheticError("weight vector length must equal n_features")
            if fn.q is not None:
                rows = fn.q
                if len(rows) != self.n_features or any(
                    len(r) != self.n_features for r in rows
                ):
                    raise SyntheticError("Q must be n_features x n_features")


def _build_utility(spec: SynthSpec) -> Callable[[np.ndarray], np.ndarray]:
    d = spec.n_features
    fn = spec.function
    if isinstance(fn, Linear):
        w = (
            np.asarray(fn.weights, dtype=float)
            if fn.weights is not None
            else np.random.default_rng((spec.seed, 1)).uniform(0.0, 1.0, size=d)
        )
        return lambda X: np.atleast_2d(X) @ w
    if isinstance(fn, Quadratic):
        rng = np.random.default_rng((spec.seed, 2))
        if fn.q is not None:
            Q = np.asarray(fn.q, dtype=float)
        else:
            A = rng.uniform(-1.0, 1.0, size=(d, d))
            Q = (A + A.T) / 2.0
        w = (
            np.asarray(fn.weights, dtype=float)
            if fn.weights is not None
            else rng.uniform(0.0, 1.0, size=d)
        )
        return lambda X: np.einsum("ij,jk,ik->i", np.atleast_2d(X), Q, np.atleast_2d(X)) + (
            np.atleast_2d(X) @ w
        )
    rng = np.random.default_rng((spec.seed, 3) if fn.seed is None else fn.seed)
    sizes = (d, fn.hidden, 1)
    weights, biases = init_weights(sizes, rng, init_scale=2.0)
    net = MlpModel(sizes, weights, biases, hidden_activation=TANH)
    return net.score_many


def gen_dataset(
    spec: SynthSpec,
) -> tuple[DataTable, PreferenceSet, Callable[[np.ndarray], np.ndarray]]:
    """Generate 2*n_pairs objects and one preference per disjoint object pair.

    Features are i.i.d. uniform [0, 1]; pair i uses objects (2i, 2i+1) and
    prefers the one with higher true utility.  Tied pairs are redrawn, each
    preference then flips with probability `noise`, and every pair gets its
    own group so pair-level CV splitting emerges from group splitting.
    """
    utility = _build_utility(spec)
    rng = np.random.default_rng((spec.seed, 0))
    n = spec.n_pairs
    d = spec.n_features
    X = rng.uniform(0.0, 1.0, size=(2 * n, d))
    u = np.asarray(utility(X), dtype=float)
    for i in range(n):
        while u[2 * i] == u[2 * i + 1]:
            X[2 * i] = rng.uniform(0.0, 1.0, size=d)
            X[2 * i + 1] = rng.uniform(0.0, 1.0, size=d)
            u[2 * i : 2 * i + 2] = utility(X[2 * i : 2 * i + 2])
    flips = rng.random(n) < spec.noise

    schema = FeatureSchema(tuple(Feature(f"f{j}", Numeric()) for j in range(d)))
    table = DataTable(
        schema=schema,
        ids=tuple(f"o{i}" for i in range(2 * n)),
        rows=tuple(tuple(float(v) for v in row) for row in X),
    )
    pairs = []
    for i in range(n):
        a, b = 2 * i, 2 * i + 1
        if u[a] < u[b]:
            a, b = b, a
        if flips[i]:
            a, b = b, a
        pairs.append(Preference(f"o{a}", f"o{b}", i))
    return table, PreferenceSet(tuple(pairs)), utility


def oracle_accuracy(
    utility: Callable[[np.ndarray], np.ndarray],
    prefs: PreferenceSet,
    table: DataTable,
) -> float:
    """Pairwise accuracy of the true generating utility (1 - noise in expectation)."""
    return pairwise_accuracy(utility, prefs, table)
