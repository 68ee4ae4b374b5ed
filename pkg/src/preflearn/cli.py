"""Command-line front door: dataset generation, training, evaluation,
feature selection, report rendering and the HTTP service.

Every subcommand is a thin wrapper over the corresponding module operation;
outputs match direct library calls byte for byte.  Exit codes: 0 success,
1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from preflearn import __version__
from preflearn.dataset import (
    ParserOptions,
    pairs_to_orders,
    parse_dual_file,
    parse_single_file,
    write_objects,
    write_orders,
)
from preflearn.evaluation import (
    PAIRWISE_ACCURACY,
    SPEARMAN_RHO,
    evaluate_model,
)
from preflearn.experiment import (
    ExperimentConfig,
    Report,
    _synth_spec_from_json,
    load_model,
    run_experiment,
    run_selection,
)
from preflearn.synthetic import gen_dataset


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argparse variant that reports usage problems as exit code 1."""

    def error(self, message):  # noqa: A002 - argparse API
        raise _UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _parser_options_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--separator", default=",", help="cell separator (default ,)")
    sub.add_argument(
        "--skip-lines", type=int, default=0, help="physical lines to skip"
    )
    sub.add_argument(
        "--has-header", action="store_true", help="first data line names columns"
    )
    sub.add_argument("--label-column", default=None, help="rating column (by header)")
    sub.add_argument("--id-column", default=None, help="object id column (by header)")
    sub.add_argument("--group-column", default=None, help="group column (by header)")
    sub.add_argument(
        "--lower-is-better",
        action="store_true",
        help="smaller rating labels mean more preferred",
    )


def _options_from_args(args: argparse.Namespace) -> ParserOptions:
    return ParserOptions(
        separator=args.separator,
        skip_lines=args.skip_lines,
        has_header=args.has_header,
        label_column=args.label_column,
        id_column=args.id_column,
        group_column=args.group_column,
        higher_is_better=not args.lower_is_better,
    )


def build_parser() -> _Parser:
    parser = _Parser(
        prog="preflearn",
        description="Train and evaluate utility models from ordered data.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    gen = sub.add_parser("gen", help="generate a synthetic benchmark dataset")
    gen.add_argument("--spec", required=True, help="synthetic spec JSON file")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--seed", type=int, default=None, help="override the spec seed")
    gen.set_defaults(handler=_cmd_gen)

    train = sub.add_parser("train", help="run a full experiment from a config")
    train.add_argument("--config", required=True, help="experiment config JSON file")
    train.add_argument("--seed", type=int, default=None, help="override config seed")
    train.add_argument("--out", default=None, help="directory for default outputs")
    train.add_argument("--report", default=None, help="report JSON path")
    train.add_argument("--model", default=None, help="model JSON path")
    train.add_argument(
        "--quiet", action="store_true", help="suppress progress log lines"
    )
    train.set_defaults(handler=_cmd_train)

    evaluate = sub.add_parser("evaluate", help="score a stored model on a dataset")
    evaluate.add_argument("--model", required=True, help="model JSON file")
    evaluate.add_argument("--data", required=True, help="objects file")
    evaluate.add_argument(
        "--orders", default=None, help="orders file (switches to dual-file layout)"
    )
    evaluate.add_argument(
        "--metric",
        choices=[PAIRWISE_ACCURACY, SPEARMAN_RHO],
        default=PAIRWISE_ACCURACY,
    )
    _parser_options_args(evaluate)
    evaluate.set_defaults(handler=_cmd_evaluate)

    select = sub.add_parser("select", help="run wrapper feature selection only")
    select.add_argument("--config", required=True, help="experiment config JSON file")
    select.add_argument("--seed", type=int, default=None, help="override config seed")
    select.set_defaults(handler=_cmd_select)

    serve = sub.add_parser("serve", help="start the local HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument(
        "--workers", type=int, default=None, help="experiment worker threads"
    )
    serve.set_defaults(handler=_cmd_serve)

    report = sub.add_parser("report", help="render a report JSON file as text")
    report.add_argument("path", help="report JSON file")
    report.set_defaults(handler=_cmd_report)

    return parser


def _load_json(path: str, what: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValueError(f"cannot read {what} {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValueError(f"{what} {path}: invalid JSON at byte {exc.pos}") from None


def _cmd_gen(args: argparse.Namespace) -> int:
    spec = _synth_spec_from_json(_load_json(args.spec, "spec file"))
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    table, prefs, _ = gen_dataset(spec)
    orders = pairs_to_orders(prefs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "objects.csv").write_text(write_objects(table), encoding="utf-8")
    (out / "orders.csv").write_text(write_orders(orders), encoding="utf-8")
    print(
        f"wrote {out / 'objects.csv'} ({len(table.ids)} objects) and "
        f"{out / 'orders.csv'} ({len(orders)} orders)"
    )
    return 0


def _read_config(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.from_json(_load_json(args.config, "config file"))
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def _cmd_train(args: argparse.Namespace) -> int:
    config = _read_config(args)
    out_dir = Path(args.out) if args.out is not None else Path.cwd()
    report_path = args.report or config.report_path or str(out_dir / "report.json")
    model_path = args.model or config.model_path or str(out_dir / "model.json")
    config = replace(config, report_path=report_path, model_path=model_path)

    def on_event(event) -> None:
        if event.message is not None and not args.quiet:
            print(f"[{event.phase}] {event.message}", file=sys.stderr)

    report = run_experiment(config, on_event=on_event)
    print(report.render_text(), end="")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    loaded = load_model(args.model)
    opts = _options_from_args(args)
    if args.orders is not None:
        table, orders = parse_dual_file(Path(args.data), Path(args.orders), opts)
    else:
        table, orders = parse_single_file(Path(args.data), opts)
    proc = loaded.plan.apply(table)
    value = evaluate_model(
        loaded.model, orders, proc, args.metric, opts.higher_is_better
    )
    print(f"{args.metric}: {value:.6f}")
    return 0


def _cmd_select(args: argparse.Namespace) -> int:
    config = _read_config(args)
    result = run_selection(config, on_log=lambda line: print(line, file=sys.stderr))
    for entry in result.trace:
        print(f"round {entry.round}  {entry.feature}  {entry.score:.4f}")
    print("selected: " + ", ".join(result.features))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from preflearn.service import create_app

    app = create_app(workers=args.workers)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    report = Report.from_json(_load_json(args.path, "report file"))
    print(report.render_text(), end="")
    return 0


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
