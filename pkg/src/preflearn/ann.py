"""Multilayer-perceptron utility models with two trainers.

The network maps a feature vector to a single real utility (linear output
unit), so preference prediction is the sign of a utility difference — the
same interface the kernel ranker exposes.

Trainer 1 (backprop_train) does mini-batch gradient descent on the logistic
pair loss L = ln(1 + exp(-sigma * (s(a) - s(b)))) for a preferred over b.
Trainer 2 (neuroevolve) runs a fixed-topology genetic algorithm over the
flattened weight vector with training pairwise accuracy as fitness.

Both trainers are deterministic given their seeds.  Neuroevolution derives
one RNG stream per (seed, generation, genome index), so fitness evaluation
and offspring creation could run in parallel without changing results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from preflearn.dataset import DataTable, PreferenceSet


class AnnError(ValueError):
    pass


SIGMOID = "sigmoid"
TANH = "tanh"
_ACTIVATIONS = (SIGMOID, TANH)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    return _sigmoid(z) if activation == SIGMOID else np.tanh(z)


def _activation_grad(a: np.ndarray, activation: str) -> np.ndarray:
    # derivative expressed through the activation value itself
    return a * (1.0 - a) if activation == SIGMOID else 1.0 - a * a


def default_layers(n_features: int) -> tuple[int, ...]:
    """One hidden layer of twice the input width."""
    return (n_features, 2 * n_features, 1)


def _check_layers(sizes: tuple[int, ...], n_features: int) -> None:
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise AnnError(f"invalid layer sizes {sizes}")
    if sizes[-1] != 1:
        raise AnnError("output layer must have exactly one unit")
    if sizes[0] != n_features:
        raise AnnError(
            f"input layer has {sizes[0]} units but objects have {n_features} features"
        )


@dataclass(frozen=True, eq=False)
class MlpModel:
    layer_sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]  # per layer: (out, in)
    biases: tuple[np.ndarray, ...]  # per layer: (out,)
    hidden_activation: str = SIGMOID
    diagnostics: object = field(default=None, compare=False)

    def __post_init__(self) -> None:
        sizes = self.layer_sizes
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise AnnError(f"invalid layer sizes {sizes}")
        if sizes[-1] != 1:
            raise AnnError("output layer must have exactly one unit")
        if self.hidden_activation not in _ACTIVATIONS:
            raise AnnError(f"unknown activation {self.hidden_activation!r}")
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise AnnError("one weight matrix and bias vector per layer required")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[l + 1], sizes[l]) or b.shape != (sizes[l + 1],):
                raise AnnError(
                    f"layer {l}: weight shape {w.shape} or bias shape {b.shape} "
                    f"inconsistent with sizes {sizes[l]}->{sizes[l + 1]}"
                )
            w.setflags(write=False)
            b.setflags(write=False)

    @property
    def n_features(self) -> int:
        return self.layer_sizes[0]

    def score_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise AnnError(
                f"dimension mismatch: {X.shape[1]} inputs, expected {self.n_features}"
            )
        a = X
        last = len(self.weights) - 1
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w.T + b
            a = z if l == last else _activate(z, self.hidden_activation)
        return a[:, 0]

    def score(self, x) -> float:
        return float(self.score_many(np.asarray(x, dtype=float).reshape(1, -1))[0])


def mlp_forward(model: MlpModel, x) -> float:
    return model.score(x)


def pair_loss(model: MlpModel, pair: tuple, sigma: float = 1.0) -> float:
    """Logistic loss on the score difference of a preferred-over-other pair."""
    a, b = pair
    d = model.score(a) - model.score(b)
    sd = sigma * d
    return float(np.maximum(-sd, 0.0) + np.log1p(np.exp(-abs(sd))))


def init_weights(
    layer_sizes: Sequence[int], rng: np.random.Generator, init_scale: float = 1.0
) -> tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]:
    """Uniform +-init_scale/sqrt(fan_in) per layer, weights then bias."""
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:]):
        bound = init_scale / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return tuple(weights), tuple(biases)


@dataclass(frozen=True)
class BackpropConfig:
    learning_rate: float = 0.1
    epochs: int = 100
    batch_size: int = 32
    sigma: float = 1.0
    init_scale: float = 1.0
    seed: int | None = None  # None: caller derives one (0 when called directly)

    def __post_init__(self) -> None:
        if self.learning_rate < 0:
            raise AnnError("learning_rate must be >= 0")
        if self.epochs < 1:
            raise AnnError("epochs must be >= 1")
        if self.batch_size < 1:
            raise AnnError("batch_size must be >= 1")
        if self.sigma <= 0:
            raise AnnError("sigma must be positive")
        if self.init_scale <= 0:
            raise AnnError("init_scale must be positive")


@dataclass(frozen=True)
class BackpropDiagnostics:
    final_loss: float
    loss_history: tuple[float, ...]
    epochs: int


def _forward_cached(weights, biases, activation: str, X: np.ndarray):
    activations = [X]
    last = len(weights) - 1
    a = X
    for l, (w, b) in enumerate(zip(weights, biases)):
        z = a @ w.T + b
        a = z if l == last else _activate(z, activation)
        activations.append(a)
    return activations


def _batch_gradient(weights, biases, activation, Xa, Xb, sigma):
    """Mean pair-loss gradient over a batch; returns (dWs, dbs, mean_loss).

    Both members of every pair go through one stacked forward/backward pass;
    the output-layer coefficient is dL/dd = -sigma * logistic(-sigma d),
    applied with opposite signs to the preferred and other halves.
    """
    n = len(Xa)
    # divergence shows up here as inf/nan; it is detected by the caller, so
    # suppress the transient numpy warnings instead of spamming the log
    with np.errstate(over="ignore", invalid="ignore"):
        acts = _forward_cached(weights, biases, activation, np.vstack([Xa, Xb]))
        scores = acts[-1][:, 0]
        d = scores[:n] - scores[n:]
        sd = sigma * d
        loss = float(np.mean(np.maximum(-sd, 0.0) + np.log1p(np.exp(-np.abs(sd)))))
        coef = -sigma * _sigmoid(-sd) / n
    delta = np.concatenate([coef, -coef])[:, None]
    dWs: list[np.ndarray] = [None] * len(weights)  # type: ignore[list-item]
    dbs: list[np.ndarray] = [None] * len(weights)  # type: ignore[list-item]
    for l in range(len(weights) - 1, -1, -1):
        dWs[l] = delta.T @ acts[l]
        dbs[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ weights[l]) * _activation_grad(acts[l], activation)
    return dWs, dbs, loss


def backprop_train(
    prefs: PreferenceSet,
    table: DataTable,
    layers: Sequence[int] | None,
    config: BackpropConfig,
    activation: str = SIGMOID,
    on_progress: Callable[[float], None] | None = None,
) -> MlpModel:
    """Mini-batch SGD on the mean logistic pair loss.

    Weights are initialized from the seed, pair order is reshuffled from the
    same stream each epoch, and the loss history records the running mean of
    pre-update batch losses per epoch.  Raises if the loss goes non-finite.
    """
    if len(prefs) == 0:
        raise AnnError("cannot train on an empty preference set")
    Xa = table.matrix_for([p.preferred for p in prefs.pairs])
    Xb = table.matrix_for([p.other for p in prefs.pairs])
    sizes = tuple(layers) if layers is not None else default_layers(Xa.shape[1])
    _check_layers(sizes, Xa.shape[1])
    rng = np.random.default_rng(config.seed if config.seed is not None else 0)
    weights, biases = init_weights(sizes, rng, config.init_scale)
    weights = tuple(w.copy() for w in weights)
    biases = tuple(b.copy() for b in biases)

    m = len(prefs)
    history: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(m)
        epoch_loss = 0.0
        for start in range(0, m, config.batch_size):
            idx = order[start : start + config.batch_size]
            dWs, dbs, batch_loss = _batch_gradient(
                weights, biases, activation, Xa[idx], Xb[idx], config.sigma
            )
            if not np.isfinite(batch_loss):
                raise AnnError(
                    f"training diverged: non-finite loss at epoch {epoch + 1}; "
                    "reduce learning_rate"
                )
            epoch_loss += batch_loss * len(idx)
            with np.errstate(over="ignore", invalid="ignore"):
                for w, dw in zip(weights, dWs):
                    w -= config.learning_rate * dw
                for b, db in zip(biases, dbs):
                    b -= config.learning_rate * db
        history.append(epoch_loss / m)
        if on_progress is not None:
            on_progress((epoch + 1) / config.epochs)

    _, _, final_loss = _batch_gradient(weights, biases, activation, Xa, Xb, config.sigma)
    return MlpModel(
        layer_sizes=sizes,
        weights=weights,
        biases=biases,
        hidden_activation=activation,
        diagnostics=BackpropDiagnostics(
            final_loss=final_loss, loss_history=tuple(history), epochs=config.epochs
        ),
    )


@dataclass(frozen=True)
class NeuroConfig:
    population: int = 50
    generations: int = 100
    tournament_size: int = 3
    crossover_rate: float = 0.5
    mutation_rate: float = 0.1
    mutation_std: float = 0.1
    elites: int = 1
    init_scale: float = 1.0
    seed: int | None = None  # None: caller derives one (0 when called directly)

    def __post_init__(self) -> None:
        if self.population < 2:
            raise AnnError("population must be >= 2")
        if self.generations < 1:
            raise AnnError("generations must be >= 1")
        if self.tournament_size < 2:
            raise AnnError("tournament_size must be >= 2")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise AnnError("crossover_rate must lie in [0, 1]")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise AnnError("mutation_rate must lie in [0, 1]")
        if self.mutation_std <= 0:
            raise AnnError("mutation_std must be positive")
        if self.elites < 1:
            raise AnnError("elites must be >= 1")
        if self.elites >= self.population:
            raise AnnError("elites must be smaller than the population")
        if self.init_scale <= 0:
            raise AnnError("init_scale must be positive")


@dataclass(frozen=True)
class NeuroDiagnostics:
    fitness_history: tuple[float, ...]  # best-so-far after each generation
    best_fitness: float
    best_generation: int
    generations: int


def genome_size(layer_sizes: Sequence[int]) -> int:
    return sum(
        (fan_in + 1) * fan_out for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:])
    )


def model_to_genome(model: MlpModel) -> np.ndarray:
    parts = []
    for w, b in zip(model.weights, model.biases):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def genome_to_model(
    genome: np.ndarray,
    layer_sizes: Sequence[int],
    activation: str = SIGMOID,
    diagnostics: object = None,
) -> MlpModel:
    sizes = tuple(layer_sizes)
    if len(genome) != genome_size(sizes):
        raise AnnError(
            f"genome has {len(genome)} genes, layout {sizes} needs {genome_size(sizes)}"
        )
    weights, biases, pos = [], [], 0
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        weights.append(genome[pos : pos + fan_in * fan_out].reshape(fan_out, fan_in).copy())
        pos += fan_in * fan_out
        biases.append(genome[pos : pos + fan_out].copy())
        pos += fan_out
    return MlpModel(
        layer_sizes=sizes,
        weights=tuple(weights),
        biases=tuple(biases),
        hidden_activation=activation,
        diagnostics=diagnostics,
    )


def _genome_scores(genome, sizes, activation, X):
    a = X
    last = len(sizes) - 2
    pos = 0
    for l, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
        w = genome[pos : pos + fan_in * fan_out].reshape(fan_out, fan_in)
        pos += fan_in * fan_out
        b = genome[pos : pos + fan_out]
        pos += fan_out
        z = a @ w.T + b
        a = z if l == last else _activate(z, activation)
    return a[:, 0]


def neuroevolve(
    prefs: PreferenceSet,
    table: DataTable,
    layers: Sequence[int] | None,
    config: NeuroConfig,
    activation: str = SIGMOID,
    on_progress: Callable[[float], None] | None = None,
) -> MlpModel:
    """Generational GA over flattened weight genomes.

    Fitness is training pairwise accuracy (ties credited 0.5).  Each new
    population keeps the top `elites` genomes unchanged; the rest are built by
    tournament selection, per-gene uniform crossover and Gaussian mutation.
    Returns the best genome ever evaluated.
    """
    if len(prefs) == 0:
        raise AnnError("cannot train on an empty preference set")
    Xa = table.matrix_for([p.preferred for p in prefs.pairs])
    Xb = table.matrix_for([p.other for p in prefs.pairs])
    sizes = tuple(layers) if layers is not None else default_layers(Xa.shape[1])
    _check_layers(sizes, Xa.shape[1])
    X = np.vstack([Xa, Xb])
    n_pairs = len(prefs)
    seed = config.seed if config.seed is not None else 0

    def fitness(genome: np.ndarray) -> float:
        s = _genome_scores(genome, sizes, activation, X)
        d = s[:n_pairs] - s[n_pairs:]
        return float(np.mean(np.where(d > 0, 1.0, np.where(d == 0, 0.5, 0.0))))

    def fresh_genome(generation: int, index: int) -> np.ndarray:
        rng = np.random.default_rng((seed, generation, index))
        w, b = init_weights(sizes, rng, config.init_scale)
        return model_to_genome(
            MlpModel(sizes, tuple(w), tuple(b), hidden_activation=activation)
        )

    population = [fresh_genome(0, i) for i in range(config.population)]
    fits = np.array([fitness(g) for g in population])
    order = np.argsort(-fits, kind="stable")
    best_genome = population[order[0]].copy()
    best_fitness = float(fits[order[0]])
    best_generation = 0
    history = [best_fitness]

    n_genes = genome_size(sizes)
    for gen in range(1, config.generations + 1):
        elite_idx = order[: config.elites]
        next_pop = [population[i].copy() for i in elite_idx]
        for child_index in range(config.elites, config.population):
            rng = np.random.default_rng((seed, gen, child_index))
            parents = []
            for _ in range(2):
                contenders = rng.integers(0, config.population, size=config.tournament_size)
                winner = contenders[np.argmax(fits[contenders])]
                parents.append(population[winner])
            swap = rng.random(n_genes) < config.crossover_rate
            child = np.where(swap, parents[1], parents[0])
            mutate = rng.random(n_genes) < config.mutation_rate
            child = child + mutate * rng.normal(0.0, config.mutation_std, size=n_genes)
            next_pop.append(child)
        population = next_pop
        fits = np.array([fitness(g) for g in population])
        order = np.argsort(-fits, kind="stable")
        if fits[order[0]] > best_fitness:
            best_fitness = float(fits[order[0]])
            best_genome = population[order[0]].copy()
            best_generation = gen
        history.append(best_fitness)
        if on_progress is not None:
            on_progress(gen / config.generations)

    return genome_to_model(
        best_genome,
        sizes,
        activation,
        diagnostics=NeuroDiagnostics(
            fitness_history=tuple(history),
            best_fitness=best_fitness,
            best_generation=best_generation,
            generations=config.generations,
        ),
    )
