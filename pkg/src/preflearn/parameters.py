"""Machine-readable catalog of every user-tunable parameter.

Served by the HTTP API so front-ends render the same defaults, ranges and
help text the library actually uses; keep entries in sync with the config
dataclasses they describe.
"""

from __future__ import annotations

from preflearn import __version__


def _p(name, type_, default, help_, **extra) -> dict:
    entry = {"name": name, "type": type_, "default": default, "help": help_}
    entry.update(extra)
    return entry


def parameter_catalog() -> dict:
    return {
        "version": __version__,
        "learners": {
            "ranksvm": {
                "label": "Ranking SVM",
                "help": (
                    "Maximizes the margin of score differences over preference "
                    "pairs; a kernel makes the utility non-linear in the "
                    "features. Deterministic: no seed."
                ),
                "parameters": [
                    _p(
                        "C",
                        "float",
                        1.0,
                        "Box constraint on pair multipliers; larger values fit "
                        "the training pairs harder.",
                        min=1e-6,
                    ),
                    _p(
                        "kernel.kind",
                        "choice",
                        "linear",
                        "Kernel family applied to object feature vectors.",
                        choices=["linear", "polynomial", "rbf"],
                    ),
                    _p(
                        "kernel.gamma",
                        "float",
                        None,
                        "Kernel width/scale; defaults to 1 / feature count "
                        "when left empty.",
                        min=1e-9,
                    ),
                    _p(
                        "kernel.coef0",
                        "float",
                        1.0,
                        "Constant term of the polynomial kernel.",
                    ),
                    _p(
                        "kernel.degree",
                        "int",
                        2,
                        "Degree of the polynomial kernel.",
                        min=1,
                    ),
                    _p(
                        "tol",
                        "float",
                        1e-3,
                        "Optimality tolerance on the dual gradient; training "
                        "stops when every multiplier satisfies it.",
                        min=0.0,
                    ),
                    _p(
                        "max_epochs",
                        "int",
                        1000,
                        "Upper bound on passes over the pair set.",
                        min=1,
                    ),
                ],
            },
            "backprop": {
                "label": "Backpropagation (pairwise)",
                "help": (
                    "Trains a multilayer perceptron by gradient descent on the "
                    "logistic loss of score differences between preferred and "
                    "non-preferred objects."
                ),
                "parameters": [
                    _p(
                        "layers",
                        "int_list",
                        None,
                        "Layer sizes from input to the single output unit; "
                        "empty uses (features, 10, 1).",
                    ),
                    _p(
                        "learning_rate",
                        "float",
                        0.1,
                        "Step size of each mini-batch update.",
                        min=0.0,
                    ),
                    _p("epochs", "int", 100, "Passes over the pair set.", min=1),
                    _p(
                        "batch_size",
                        "int",
                        32,
                        "Pairs per gradient step.",
                        min=1,
                    ),
                    _p(
                        "sigma",
                        "float",
                        1.0,
                        "Scale of the score difference inside the logistic "
                        "loss; larger sharpens the preference boundary.",
                        min=1e-9,
                    ),
                    _p(
                        "init_scale",
                        "float",
                        1.0,
                        "Scale of the uniform weight initialization.",
                        min=1e-9,
                    ),
                    _p(
                        "seed",
                        "int",
                        None,
                        "Pins initialization and batch shuffling; empty "
                        "derives it from the experiment seed.",
                    ),
                ],
            },
            "neuro": {
                "label": "Neuroevolution",
                "help": (
                    "Evolves the weights of a fixed-topology perceptron with a "
                    "generational genetic algorithm; fitness is training "
                    "pairwise accuracy."
                ),
                "parameters": [
                    _p(
                        "layers",
                        "int_list",
                        None,
                        "Layer sizes from input to the single output unit; "
                        "empty uses (features, 10, 1).",
                    ),
                    _p("population", "int", 50, "Genomes per generation.", min=2),
                    _p("generations", "int", 100, "Generations to evolve.", min=1),
                    _p(
                        "tournament_size",
                        "int",
                        3,
                        "Genomes sampled per parent pick; larger means greedier "
                        "selection.",
                        min=2,
                    ),
                    _p(
                        "crossover_rate",
                        "float",
                        0.5,
                        "Per-gene probability of inheriting from the second "
                        "parent.",
                        min=0.0,
                        max=1.0,
                    ),
                    _p(
                        "mutation_rate",
                        "float",
                        0.1,
                        "Per-gene probability of Gaussian perturbation.",
                        min=0.0,
                        max=1.0,
                    ),
                    _p(
                        "mutation_std",
                        "float",
                        0.1,
                        "Standard deviation of the mutation noise.",
                        min=1e-9,
                    ),
                    _p(
                        "elites",
                        "int",
                        1,
                        "Best genomes copied unchanged into the next "
                        "generation.",
                        min=1,
                    ),
                    _p(
                        "init_scale",
                        "float",
                        1.0,
                        "Scale of the uniform weight initialization.",
                        min=1e-9,
                    ),
                    _p(
                        "seed",
                        "int",
                        None,
                        "Pins the whole evolution; empty derives it from the "
                        "experiment seed.",
                    ),
                ],
            },
        },
        "selection": {
            "n_best": {
                "label": "N best individual features",
                "help": (
                    "Scores every feature alone by validated accuracy and "
                    "keeps the top n."
                ),
                "parameters": [
                    _p("n", "int", 1, "Features to keep.", min=1),
                ],
            },
            "sfs": {
                "label": "Sequential forward selection",
                "help": (
                    "Greedily grows a subset, each round adding the feature "
                    "that improves validated accuracy most; stops on a "
                    "plateau or at the size cap."
                ),
                "parameters": [
                    _p(
                        "max_features",
                        "int",
                        1,
                        "Upper bound on the subset size.",
                        min=1,
                    ),
                    _p(
                        "min_improvement",
                        "float",
                        0.0,
                        "Smallest accuracy gain that justifies another "
                        "feature.",
                        min=0.0,
                    ),
                ],
            },
        },
        "validation": {
            "parameters": [
                _p(
                    "mode.kind",
                    "choice",
                    "kfold",
                    "K-fold holds out whole orders; training-set mode reports "
                    "the optimistic fit on everything.",
                    choices=["kfold", "training_set"],
                ),
                _p("mode.k", "int", 3, "Number of folds.", min=2),
                _p(
                    "mode.seed",
                    "int",
                    None,
                    "Pins the fold split; empty derives it from the "
                    "experiment seed.",
                ),
                _p(
                    "metric",
                    "choice",
                    "pairwise_accuracy",
                    "Pairwise accuracy scores preference pairs; Spearman rho "
                    "scores whole rankings.",
                    choices=["pairwise_accuracy", "spearman_rho"],
                ),
            ],
        },
        "preprocess": {
            "steps": [
                {
                    "op": "include",
                    "label": "Include features",
                    "help": "Keep only the listed features.",
                },
                {
                    "op": "min_max",
                    "label": "Min-max normalize",
                    "help": "Rescale a numeric feature to [0, 1].",
                },
                {
                    "op": "z_score",
                    "label": "Z-score normalize",
                    "help": "Center a numeric feature and divide by its std.",
                },
                {
                    "op": "nominal_to_binary",
                    "label": "Nominal to binary",
                    "help": "Replace a nominal feature with one 0/1 column per "
                    "category.",
                },
                {
                    "op": "numeric_to_nominal",
                    "label": "Numeric to nominal",
                    "help": "Bin a numeric feature into equal-width nominal "
                    "categories.",
                },
            ],
        },
        "experiment": {
            "parameters": [
                _p(
                    "seed",
                    "int",
                    0,
                    "Single root seed; every random choice in the run is "
                    "derived from it.",
                ),
            ],
        },
    }
