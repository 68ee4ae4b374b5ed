"""Pipeline orchestration: experiment configs, reports, and model files.

An experiment is one JSON-configurable run of the five-phase pipeline
(load, preprocess, feature selection, train/validate, report).  All
randomness flows from the config's single seed through documented sub-seed
derivations, so one number reproduces an entire run.  Reports and trained
models are plain JSON documents; floats survive the round trip exactly
because they are serialized with repr precision.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Union

import numpy as np

from preflearn import __version__, learners
from preflearn.ann import BackpropConfig, MlpModel, NeuroConfig
from preflearn.dataset import (
    DataTable,
    OrderSet,
    ParserOptions,
    extract_pairs,
    pairs_to_orders,
    parse_dual_file,
    parse_single_file,
)
from preflearn.evaluation import (
    FoldResult,
    KFold,
    TrainingSet,
    ValidationSpec,
    cross_validate,
)
from preflearn.featsel import (
    NBest,
    SelectionConfig,
    Sfs,
    Strategy,
    n_best,
    restrict_plan,
    sfs,
)
from preflearn.learners import Backprop, LearnerSpec, Neuro, RankSvm, derive_seed
from preflearn.preprocess import FittedPlan, PreprocessPlan, apply_plan
from preflearn.ranksvm import (
    Kernel,
    Linear as LinearKernel,
    Polynomial,
    Rbf,
    SvmParams,
    SvmRankModel,
)
from preflearn.synthetic import (
    Linear as LinearUtility,
    Quadratic,
    RandomMlp,
    SynthSpec,
    gen_dataset,
)

MODEL_FORMAT_VERSION = 1
PHASES = ("load", "preprocess", "selection", "validation", "report")


class ExperimentError(ValueError):
    """A phase failed; `.report` holds the partial report when available."""

    def __init__(self, message: str, report: "Report | None" = None) -> None:
        super().__init__(message)
        self.report = report


class ModelFormatError(ValueError):
    pass


class ExperimentCancelled(Exception):
    """Raised internally to unwind a cancelled run.

    Deliberately not a ValueError so it passes untouched through the
    evaluation layer's error wrapping.
    """


# ---------------------------------------------------------------------------
# dataset sources


@dataclass(frozen=True)
class SingleFileSource:
    path: str
    options: ParserOptions = ParserOptions()


@dataclass(frozen=True)
class DualFileSource:
    objects_path: str
    orders_path: str
    options: ParserOptions = ParserOptions()


@dataclass(frozen=True)
class SyntheticSource:
    spec: SynthSpec


DatasetSource = Union[SingleFileSource, DualFileSource, SyntheticSource]


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetSource
    learner: LearnerSpec
    plan: PreprocessPlan = PreprocessPlan()
    selection: Strategy | None = None
    validation: ValidationSpec = ValidationSpec()
    seed: int = 0
    report_path: str | None = None
    model_path: str | None = None

    def to_json(self) -> dict:
        return {
            "dataset": _dataset_to_json(self.dataset),
            "learner": _learner_to_json(self.learner),
            "preprocess": self.plan.to_json(),
            "selection": _selection_to_json(self.selection),
            "validation": _validation_to_json(self.validation),
            "seed": self.seed,
            "outputs": {"report": self.report_path, "model": self.model_path},
        }

    @staticmethod
    def from_json(data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ExperimentError("config must be a JSON object")
        outputs = data.get("outputs") or {}
        if not isinstance(outputs, dict):
            raise ExperimentError("config field 'outputs': expected an object")
        try:
            return ExperimentConfig(
                dataset=_dataset_from_json(_field(data, "dataset", "config")),
                learner=_learner_from_json(_field(data, "learner", "config")),
                plan=PreprocessPlan.from_json(data.get("preprocess") or []),
                selection=_selection_from_json(data.get("selection")),
                validation=_validation_from_json(data.get("validation")),
                seed=int(data.get("seed", 0)),
                report_path=outputs.get("report"),
                model_path=outputs.get("model"),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ExperimentError):
                raise
            raise ExperimentError(f"invalid config: {exc}") from exc


def config_hash(config: ExperimentConfig) -> str:
    """Stable fingerprint of a config (output paths excluded)."""
    doc = config.to_json()
    doc.pop("outputs", None)
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# JSON (de)serialization helpers


def _field(data: dict, key: str, where: str):
    if key not in data:
        raise ExperimentError(f"{where}: missing field {key!r}")
    return data[key]


def _kind(data, where: str) -> str:
    if not isinstance(data, dict):
        raise ExperimentError(f"{where}: expected an object")
    return str(_field(data, "kind", where))


def _parser_options_to_json(opts: ParserOptions) -> dict:
    return {
        "separator": opts.separator,
        "skip_lines": opts.skip_lines,
        "has_header": opts.has_header,
        "label_column": opts.label_column,
        "id_column": opts.id_column,
        "group_column": opts.group_column,
        "higher_is_better": opts.higher_is_better,
    }


def _parser_options_from_json(data: dict | None) -> ParserOptions:
    if data is None:
        return ParserOptions()
    if not isinstance(data, dict):
        raise ExperimentError("parser options: expected an object")
    return ParserOptions(
        separator=str(data.get("separator", ",")),
        skip_lines=int(data.get("skip_lines", 0)),
        has_header=bool(data.get("has_header", False)),
        label_column=data.get("label_column"),
        id_column=data.get("id_column"),
        group_column=data.get("group_column"),
        higher_is_better=bool(data.get("higher_is_better", True)),
    )


def _utility_to_json(fn) -> dict:
    if isinstance(fn, LinearUtility):
        return {
            "kind": "linear",
            "weights": None if fn.weights is None else list(fn.weights),
        }
    if isinstance(fn, Quadratic):
        return {
            "kind": "quadratic",
            "q": None if fn.q is None else [list(r) for r in fn.q],
            "weights": None if fn.weights is None else list(fn.weights),
        }
    return {"kind": "random_mlp", "hidden": fn.hidden, "seed": fn.seed}


def _utility_from_json(data: dict):
    kind = _kind(data, "synthetic function")
    if kind == "linear":
        w = data.get("weights")
        return LinearUtility(weights=None if w is None else tuple(float(v) for v in w))
    if kind == "quadratic":
        q = data.get("q")
        w = data.get("weights")
        return Quadratic(
            q=None if q is None else tuple(tuple(float(v) for v in r) for r in q),
            weights=None if w is None else tuple(float(v) for v in w),
        )
    if kind == "random_mlp":
        return RandomMlp(
            hidden=int(data.get("hidden", 20)),
            seed=None if data.get("seed") is None else int(data["seed"]),
        )
    raise ExperimentError(f"synthetic function: unknown kind {kind!r}")


def _synth_spec_to_json(spec: SynthSpec) -> dict:
    return {
        "n_pairs": spec.n_pairs,
        "n_features": spec.n_features,
        "function": _utility_to_json(spec.function),
        "noise": spec.noise,
        "seed": spec.seed,
    }


def _synth_spec_from_json(data: dict) -> SynthSpec:
    if not isinstance(data, dict):
        raise ExperimentError("synthetic spec: expected an object")
    return SynthSpec(
        n_pairs=int(_field(data, "n_pairs", "synthetic spec")),
        n_features=int(data.get("n_features", 10)),
        function=_utility_from_json(data.get("function", {"kind": "linear"})),
        noise=float(data.get("noise", 0.0)),
        seed=int(data.get("seed", 0)),
    )


def _dataset_to_json(source: DatasetSource) -> dict:
    if isinstance(source, SyntheticSource):
        return {"kind": "synthetic", "spec": _synth_spec_to_json(source.spec)}
    if isinstance(source, SingleFileSource):
        return {
            "kind": "single_file",
            "path": source.path,
            "options": _parser_options_to_json(source.options),
        }
    return {
        "kind": "dual_file",
        "objects_path": source.objects_path,
        "orders_path": source.orders_path,
        "options": _parser_options_to_json(source.options),
    }


def _dataset_from_json(data: dict) -> DatasetSource:
    kind = _kind(data, "config field 'dataset'")
    if kind == "synthetic":
        return SyntheticSource(_synth_spec_from_json(_field(data, "spec", "dataset")))
    if kind == "single_file":
        return SingleFileSource(
            path=str(_field(data, "path", "dataset")),
            options=_parser_options_from_json(data.get("options")),
        )
    if kind == "dual_file":
        return DualFileSource(
            objects_path=str(_field(data, "objects_path", "dataset")),
            orders_path=str(_field(data, "orders_path", "dataset")),
            options=_parser_options_from_json(data.get("options")),
        )
    raise ExperimentError(f"config field 'dataset': unknown kind {kind!r}")


def _kernel_to_json(kernel: Kernel) -> dict:
    if isinstance(kernel, LinearKernel):
        return {"kind": "linear"}
    if isinstance(kernel, Polynomial):
        return {
            "kind": "polynomial",
            "gamma": kernel.gamma,
            "coef0": kernel.coef0,
            "degree": kernel.degree,
        }
    return {"kind": "rbf", "gamma": kernel.gamma}


def _gamma(data: dict) -> float | None:
    value = data.get("gamma")
    return None if value is None else float(value)


def _kernel_from_json(data: dict) -> Kernel:
    kind = _kind(data, "kernel")
    if kind == "linear":
        return LinearKernel()
    if kind == "polynomial":
        return Polynomial(
            gamma=_gamma(data),
            coef0=float(data.get("coef0", 1.0)),
            degree=int(data.get("degree", 2)),
        )
    if kind == "rbf":
        return Rbf(gamma=_gamma(data))
    raise ExperimentError(f"kernel: unknown kind {kind!r}")


def _layers(value) -> tuple[int, ...] | None:
    return None if value is None else tuple(int(v) for v in value)


def _learner_to_json(learner: LearnerSpec) -> dict:
    if isinstance(learner, RankSvm):
        p = learner.params
        return {
            "kind": "ranksvm",
            "C": p.C,
            "kernel": _kernel_to_json(p.kernel),
            "tol": p.tol,
            "max_epochs": p.max_epochs,
        }
    if isinstance(learner, Backprop):
        c = learner.config
        return {
            "kind": "backprop",
            "layers": None if learner.layers is None else list(learner.layers),
            "learning_rate": c.learning_rate,
            "epochs": c.epochs,
            "batch_size": c.batch_size,
            "sigma": c.sigma,
            "init_scale": c.init_scale,
            "seed": c.seed,
        }
    if isinstance(learner, Neuro):
        c = learner.config
        return {
            "kind": "neuro",
            "layers": None if learner.layers is None else list(learner.layers),
            "population": c.population,
            "generations": c.generations,
            "tournament_size": c.tournament_size,
            "crossover_rate": c.crossover_rate,
            "mutation_rate": c.mutation_rate,
            "mutation_std": c.mutation_std,
            "elites": c.elites,
            "init_scale": c.init_scale,
            "seed": c.seed,
        }
    raise ExperimentError(f"cannot serialize learner {learner!r}")


def _learner_from_json(data: dict) -> LearnerSpec:
    kind = _kind(data, "config field 'learner'")
    if kind == "ranksvm":
        return RankSvm(
            SvmParams(
                C=float(data.get("C", 1.0)),
                kernel=_kernel_from_json(data.get("kernel", {"kind": "linear"})),
                tol=float(data.get("tol", 1e-3)),
                max_epochs=int(data.get("max_epochs", 1000)),
            )
        )
    if kind == "backprop":
        seed = data.get("seed")
        return Backprop(
            layers=_layers(data.get("layers")),
            config=BackpropConfig(
                learning_rate=float(data.get("learning_rate", 0.1)),
                epochs=int(data.get("epochs", 100)),
                batch_size=int(data.get("batch_size", 32)),
                sigma=float(data.get("sigma", 1.0)),
                init_scale=float(data.get("init_scale", 1.0)),
                seed=None if seed is None else int(seed),
            ),
        )
    if kind == "neuro":
        seed = data.get("seed")
        return Neuro(
            layers=_layers(data.get("layers")),
            config=NeuroConfig(
                population=int(data.get("population", 50)),
                generations=int(data.get("generations", 100)),
                tournament_size=int(data.get("tournament_size", 3)),
                crossover_rate=float(data.get("crossover_rate", 0.5)),
                mutation_rate=float(data.get("mutation_rate", 0.1)),
                mutation_std=float(data.get("mutation_std", 0.1)),
                elites=int(data.get("elites", 1)),
                init_scale=float(data.get("init_scale", 1.0)),
                seed=None if seed is None else int(seed),
            ),
        )
    raise ExperimentError(f"config field 'learner': unknown kind {kind!r}")


def _selection_to_json(strategy: Strategy | None) -> dict | None:
    if strategy is None:
        return None
    if isinstance(strategy, NBest):
        return {"kind": "n_best", "n": strategy.n}
    return {
        "kind": "sfs",
        "max_features": strategy.max_features,
        "min_improvement": strategy.min_improvement,
    }


def _selection_from_json(data: dict | None) -> Strategy | None:
    if data is None:
        return None
    kind = _kind(data, "config field 'selection'")
    if kind == "n_best":
        return NBest(n=int(_field(data, "n", "selection")))
    if kind == "sfs":
        return Sfs(
            max_features=int(_field(data, "max_features", "selection")),
            min_improvement=float(data.get("min_improvement", 0.0)),
        )
    raise ExperimentError(f"config field 'selection': unknown kind {kind!r}")


def _validation_to_json(vspec: ValidationSpec) -> dict:
    if isinstance(vspec.mode, TrainingSet):
        mode = {"kind": "training_set"}
    else:
        mode = {"kind": "kfold", "k": vspec.mode.k, "seed": vspec.mode.seed}
    return {"mode": mode, "metric": vspec.metric}


def _validation_from_json(data: dict | None) -> ValidationSpec:
    if data is None:
        return ValidationSpec()
    if not isinstance(data, dict):
        raise ExperimentError("config field 'validation': expected an object")
    mode_data = data.get("mode", {"kind": "kfold", "k": 3})
    kind = _kind(mode_data, "validation mode")
    if kind == "training_set":
        mode = TrainingSet()
    elif kind == "kfold":
        seed = mode_data.get("seed")
        mode = KFold(
            k=int(mode_data.get("k", 3)), seed=None if seed is None else int(seed)
        )
    else:
        raise ExperimentError(f"validation mode: unknown kind {kind!r}")
    return ValidationSpec(mode=mode, metric=str(data.get("metric", "pairwise_accuracy")))


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class PhaseSummary:
    name: str
    summary: str
    details: dict
    duration_s: float


@dataclass(frozen=True)
class ProgressEvent:
    phase: str
    phase_index: int  # 1-based position in PHASES
    percent: float  # within-phase completion, 0..100
    message: str | None = None


@dataclass(frozen=True)
class Report:
    config: dict
    status: str  # "done" | "cancelled" | "failed"
    phases: tuple[PhaseSummary, ...]
    selection: dict | None
    folds: FoldResult | None
    error: str | None
    version: str = __version__
    timestamp: str = ""

    @property
    def mean(self) -> float | None:
        return None if self.folds is None else self.folds.mean

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "timestamp": self.timestamp,
            "status": self.status,
            "config": self.config,
            "phases": [
                {
                    "name": p.name,
                    "summary": p.summary,
                    "details": p.details,
                    "duration_s": p.duration_s,
                }
                for p in self.phases
            ],
            "selection": self.selection,
            "folds": None if self.folds is None else self.folds.to_json(),
            "mean": self.mean,
            "error": self.error,
        }

    @staticmethod
    def from_json(data: dict) -> "Report":
        if not isinstance(data, dict):
            raise ExperimentError("report must be a JSON object")
        folds = data.get("folds")
        return Report(
            config=data.get("config", {}),
            status=str(_field(data, "status", "report")),
            phases=tuple(
                PhaseSummary(
                    name=str(p["name"]),
                    summary=str(p["summary"]),
                    details=p.get("details", {}),
                    duration_s=float(p.get("duration_s", 0.0)),
                )
                for p in data.get("phases", [])
            ),
            selection=data.get("selection"),
            folds=None if folds is None else FoldResult.from_json(folds),
            error=data.get("error"),
            version=str(data.get("version", "")),
            timestamp=str(data.get("timestamp", "")),
        )

    def render_text(self) -> str:
        lines = [
            f"experiment report — status: {self.status}",
            f"version {self.version}, generated {self.timestamp}",
            "",
        ]
        for p in self.phases:
            lines.append(f"  {p.name:<11} {p.summary}  ({p.duration_s:.2f} s)")
        if self.selection is not None:
            kept = ", ".join(self.selection.get("features", []))
            lines += ["", f"selected features: {kept}"]
        if self.folds is not None:
            metric = self.config.get("validation", {}).get("metric", "metric")
            lines += ["", f"folds ({metric}):"]
            for i, (v, d) in enumerate(
                zip(self.folds.values, self.folds.durations), start=1
            ):
                lines.append(f"  fold {i}: {v:.4f}  ({d:.2f} s)")
            lines += [
                "",
                f"average {metric}: {self.folds.mean:.4f}  (std {self.folds.std:.4f})",
            ]
        if self.error is not None:
            lines += ["", f"error: {self.error}"]
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# model files


@dataclass(frozen=True)
class LoadedModel:
    """A deserialized model plus the preprocessing it was trained behind."""

    kind: str
    model: SvmRankModel | MlpModel
    plan: FittedPlan
    metadata: dict = field(default_factory=dict)

    def score_many(self, X: np.ndarray) -> np.ndarray:
        """Score rows that are already in the model's (preprocessed) space."""
        return self.model.score_many(X)

    def score(self, x) -> float:
        return float(self.score_many(np.asarray(x, dtype=float).reshape(1, -1))[0])

    def score_table(self, table: DataTable) -> np.ndarray:
        """Replay the stored preprocessing on a raw table, then score."""
        return self.model.score_many(self.plan.apply(table).to_matrix())


def model_to_json(
    model, plan: FittedPlan = FittedPlan(), metadata: dict | None = None
) -> dict:
    if isinstance(model, SvmRankModel):
        kind = "ranksvm"
        payload = {
            "support_a": model.support_a.tolist(),
            "support_b": model.support_b.tolist(),
            "alpha": model.alpha.tolist(),
            "kernel": _kernel_to_json(model.kernel),
        }
    elif isinstance(model, MlpModel):
        kind = "mlp"
        payload = {
            "layer_sizes": list(model.layer_sizes),
            "hidden_activation": model.hidden_activation,
            "weights": [w.tolist() for w in model.weights],
            "biases": [b.tolist() for b in model.biases],
        }
    else:
        raise ModelFormatError(
            f"cannot serialize a model of type {type(model).__name__}"
        )
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": kind,
        "preprocess": plan.to_json(),
        "payload": payload,
        "metadata": dict(metadata or {}),
    }


def _payload_field(payload: dict, key: str):
    if key not in payload:
        raise ModelFormatError(f"model payload: missing field {key!r}")
    return payload[key]


def _array2d(payload: dict, key: str) -> np.ndarray:
    arr = np.asarray(_payload_field(payload, key), dtype=float)
    if arr.ndim != 2:
        raise ModelFormatError(f"model payload field {key!r}: expected a 2-D array")
    return arr


def model_from_json(doc: dict) -> LoadedModel:
    if not isinstance(doc, dict):
        raise ModelFormatError("model file: expected a JSON object")
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported format_version {version!r}; "
            f"this build reads version {MODEL_FORMAT_VERSION}"
        )
    for key in ("kind", "payload"):
        if key not in doc:
            raise ModelFormatError(f"model file: missing field {key!r}")
    kind = doc["kind"]
    payload = doc["payload"]
    if not isinstance(payload, dict):
        raise ModelFormatError("model file field 'payload': expected an object")
    try:
        plan = FittedPlan.from_json(doc.get("preprocess", []))
    except ValueError as exc:
        raise ModelFormatError(f"model file field 'preprocess': {exc}") from None
    metadata = doc.get("metadata") or {}

    try:
        if kind == "ranksvm":
            model = SvmRankModel(
                support_a=_array2d(payload, "support_a"),
                support_b=_array2d(payload, "support_b"),
                alpha=np.asarray(_payload_field(payload, "alpha"), dtype=float),
                kernel=_kernel_from_json(_payload_field(payload, "kernel")),
            )
        elif kind == "mlp":
            model = MlpModel(
                layer_sizes=tuple(
                    int(v) for v in _payload_field(payload, "layer_sizes")
                ),
                weights=tuple(
                    np.asarray(w, dtype=float)
                    for w in _payload_field(payload, "weights")
                ),
                biases=tuple(
                    np.asarray(b, dtype=float)
                    for b in _payload_field(payload, "biases")
                ),
                hidden_activation=str(
                    payload.get("hidden_activation", "sigmoid")
                ),
            )
        else:
            raise ModelFormatError(f"model file: unknown kind {kind!r}")
    except ModelFormatError:
        raise
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"model payload: {exc}") from exc
    return LoadedModel(kind=kind, model=model, plan=plan, metadata=metadata)


def save_model(
    model,
    path: str | Path,
    plan: FittedPlan = FittedPlan(),
    metadata: dict | None = None,
) -> None:
    _write_json(path, model_to_json(model, plan, metadata))


def load_model(path: str | Path) -> LoadedModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(
            f"model file {path}: invalid JSON at byte {exc.pos}: {exc.msg}"
        ) from None
    return model_from_json(doc)


def _write_json(path: str | Path, doc: dict) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        os.makedirs(path.parent, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# the pipeline


class _Observer:
    """Serializes progress events, enforces monotone percent, checks cancel."""

    def __init__(
        self,
        on_event: Callable[[ProgressEvent], None] | None,
        should_cancel: Callable[[], bool] | None,
    ) -> None:
        self._on_event = on_event
        self._should_cancel = should_cancel
        self.phase = PHASES[0]
        self._index = 1
        self._percent = 0.0

    def enter(self, phase: str) -> None:
        self.phase = phase
        self._index = PHASES.index(phase) + 1
        self._percent = 0.0
        self._emit(None)

    def progress(self, frac: float) -> None:
        self.check_cancel()
        percent = 100.0 * min(max(frac, 0.0), 1.0)
        self._percent = max(self._percent, percent)
        self._emit(None)

    def log(self, message: str) -> None:
        self.check_cancel()
        self._emit(message)

    def check_cancel(self) -> None:
        if self._should_cancel is not None and self._should_cancel():
            raise ExperimentCancelled()

    def _emit(self, message: str | None) -> None:
        if self._on_event is not None:
            self._on_event(
                ProgressEvent(self.phase, self._index, self._percent, message)
            )


def _timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _load_dataset(source: DatasetSource):
    """Returns (table, orders, higher_is_better)."""
    if isinstance(source, SyntheticSource):
        table, prefs, _ = gen_dataset(source.spec)
        return table, pairs_to_orders(prefs), True
    if isinstance(source, SingleFileSource):
        table, orders = parse_single_file(Path(source.path), source.options)
        return table, orders, source.options.higher_is_better
    table, orders = parse_dual_file(
        Path(source.objects_path), Path(source.orders_path), source.options
    )
    return table, orders, source.options.higher_is_better


def _search_features(
    config: ExperimentConfig,
    table: DataTable,
    orders: OrderSet,
    higher_is_better: bool,
    on_progress: Callable[[float], None] | None = None,
    on_log: Callable[[str], None] | None = None,
):
    sel_config = SelectionConfig(
        strategy=config.selection,
        learner=config.learner,
        vspec=config.validation,
        seed=derive_seed(config.seed, "selection"),
    )
    search = n_best if isinstance(config.selection, NBest) else sfs
    return search(
        table,
        orders,
        sel_config,
        config.plan,
        higher_is_better,
        on_progress=on_progress,
        on_log=on_log,
    )


def run_selection(
    config: ExperimentConfig,
    on_progress: Callable[[float], None] | None = None,
    on_log: Callable[[str], None] | None = None,
):
    """Phases 1-3 only: load the dataset and search feature subsets."""
    if config.selection is None:
        raise ExperimentError("config has no selection strategy")
    table, orders, higher_is_better = _load_dataset(config.dataset)
    return _search_features(config, table, orders, higher_is_better, on_progress, on_log)


def run_experiment(
    config: ExperimentConfig,
    on_event: Callable[[ProgressEvent], None] | None = None,
    should_cancel: Callable[[], bool] | None = None,
) -> Report:
    """Run the five-phase pipeline described by `config`.

    Progress events carry (phase, percent, optional log line) and are
    monotone in (phase index, percent).  `should_cancel` is polled at every
    unit of work (fold, epoch, generation, selection candidate); a cancelled
    run returns a report with status "cancelled" and writes no model file.
    A phase failure raises ExperimentError(phase: cause) carrying the
    partial report.
    """
    obs = _Observer(on_event, should_cancel)
    phases: list[PhaseSummary] = []
    selection_json: dict | None = None
    folds: FoldResult | None = None
    config_json = config.to_json()

    def build(status: str, error: str | None = None) -> Report:
        return Report(
            config=config_json,
            status=status,
            phases=tuple(phases),
            selection=selection_json,
            folds=folds,
            error=error,
            version=__version__,
            timestamp=_timestamp(),
        )

    def write_report(report: Report) -> None:
        if config.report_path is not None:
            _write_json(config.report_path, report.to_json())

    try:
        # ------------------------------------------------ phase 1: load
        obs.enter("load")
        started = time.perf_counter()
        table, orders, higher_is_better = _load_dataset(config.dataset)
        prefs = extract_pairs(orders, higher_is_better)
        if len(prefs) == 0:
            raise ValueError("dataset yields no preference pairs")
        obs.progress(1.0)
        summary = (
            f"{len(table.ids)} objects, {len(table.feature_names)} features, "
            f"{len(orders)} orders, {len(prefs)} pairs"
        )
        obs.log(summary)
        phases.append(
            PhaseSummary(
                "load",
                summary,
                {
                    "objects": len(table.ids),
                    "features": len(table.feature_names),
                    "orders": len(orders),
                    "pairs": len(prefs),
                },
                time.perf_counter() - started,
            )
        )

        # ------------------------------------------ phase 2: preprocess
        obs.enter("preprocess")
        started = time.perf_counter()
        # Fitting on the full table here validates the plan and reports the
        # output schema; validation and selection below re-fit fold-locally.
        preview, _ = apply_plan(table, config.plan)
        obs.progress(1.0)
        summary = (
            f"{len(config.plan.steps)} steps, "
            f"{len(preview.feature_names)} features out"
        )
        obs.log(summary)
        phases.append(
            PhaseSummary(
                "preprocess",
                summary,
                {
                    "steps": len(config.plan.steps),
                    "features_out": list(preview.feature_names),
                },
                time.perf_counter() - started,
            )
        )

        # ------------------------------------------- phase 3: selection
        work_table, work_plan = table, config.plan
        if config.selection is None:
            phases.append(PhaseSummary("selection", "skipped", {}, 0.0))
        else:
            obs.enter("selection")
            started = time.perf_counter()
            result = _search_features(
                config,
                table,
                orders,
                higher_is_better,
                on_progress=obs.progress,
                on_log=obs.log,
            )
            selection_json = result.to_json()
            chosen = set(result.features)
            ordered = tuple(n for n in table.feature_names if n in chosen)
            work_table = table.select_features(ordered)
            work_plan = restrict_plan(config.plan, ordered)
            obs.progress(1.0)
            summary = f"kept {', '.join(result.features)}"
            obs.log(summary)
            phases.append(
                PhaseSummary(
                    "selection",
                    summary,
                    selection_json,
                    time.perf_counter() - started,
                )
            )

        # ------------------------------------------ phase 4: validation
        obs.enter("validation")
        started = time.perf_counter()
        vspec = config.validation
        if isinstance(vspec.mode, KFold) and vspec.mode.seed is None:
            vspec = replace(
                vspec, mode=replace(vspec.mode, seed=derive_seed(config.seed, "folds"))
            )
        folds = cross_validate(
            config.learner,
            work_table,
            orders,
            vspec,
            work_plan,
            higher_is_better,
            on_progress=obs.progress,
            on_log=obs.log,
            train_seed_base=derive_seed(config.seed, "train"),
        )
        proc_table, fitted_plan = apply_plan(work_table, work_plan)
        final_model = learners.fit(
            config.learner,
            prefs,
            proc_table,
            seed=derive_seed(config.seed, "final"),
        )
        obs.progress(1.0)
        summary = (
            f"{learners.learner_name(config.learner)}, "
            f"mean {vspec.metric} {folds.mean:.4f}"
        )
        obs.log(summary)
        phases.append(
            PhaseSummary(
                "validation",
                summary,
                {"learner": learners.learner_name(config.learner)},
                time.perf_counter() - started,
            )
        )

        # ---------------------------------------------- phase 5: report
        obs.enter("report")
        started = time.perf_counter()
        outputs = {}
        if config.model_path is not None:
            save_model(
                final_model,
                config.model_path,
                fitted_plan,
                metadata={
                    "config_hash": config_hash(config),
                    "seed": config.seed,
                    "created": _timestamp(),
                    "learner": learners.learner_name(config.learner),
                },
            )
            outputs["model"] = config.model_path
        if config.report_path is not None:
            outputs["report"] = config.report_path
        summary = (
            "wrote " + ", ".join(sorted(outputs)) if outputs else "nothing to write"
        )
        phases.append(
            PhaseSummary("report", summary, outputs, time.perf_counter() - started)
        )
        obs.progress(1.0)
        report = build("done")
        write_report(report)
        return report
    except ExperimentCancelled:
        report = build("cancelled", error=f"cancelled during {obs.phase}")
        write_report(report)
        return report
    except (ValueError, OSError) as exc:
        message = f"{obs.phase}: {exc}"
        report = build("failed", error=message)
        try:
            write_report(report)
        except OSError:
            pass
        raise ExperimentError(message, report) from exc
