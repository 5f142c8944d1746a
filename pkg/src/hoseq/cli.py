"""Command-line entry point.

Subcommands: generate, simulate, train, eval, suite. Every command takes
--config plus optional --set section.key=value overrides, exits 0 on
success, and on failure prints one machine-parsable line to stderr of
the form "error: <ErrorType>: <message>" (exit code 2 for usage
problems, 1 otherwise). Outputs are byte-identical across reruns with
the same configuration.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import __version__
from .config import Config, load_config
from .dataset import (
    TaskKind,
    TaskSpec,
    build_dataset,
    ingest_beam_trace,
    read_beam_log_csv,
    split_dataset,
    write_dataset_meta,
)
from .errors import HoseqError, TaskMismatchError, UsageError, VocabularyError
from .experiments import (
    CURVE_HEADER,
    METRICS_HEADER,
    provenance_line,
    run_experiment_suite,
    train_config_from,
)
from .mobility import read_traces_csv, write_traces_csv
from .radio import load_deployment, save_deployment
from .seq2seq import evaluate, load_model, save_model, train


def _require(value, flag: str):
    if value is None:
        raise UsageError(f"missing required option {flag}")
    return value


def _task_from_config(cfg: Config) -> TaskSpec:
    kind_raw = cfg.get("task", "kind")
    try:
        kind = TaskKind(kind_raw)
    except ValueError as exc:
        raise UsageError(
            f"unknown task kind {kind_raw!r}; choose one of "
            f"{[k.value for k in TaskKind]}"
        ) from exc
    return TaskSpec(
        kind=kind,
        history_len=cfg.get("task", "history_len"),
        horizon=cfg.get("task", "horizon"),
        vocab_size=cfg.get("task", "vocab_size"),
    )


def _read_any_traces(path, task: TaskSpec):
    """Load either a trace CSV or a timestamped beam log, matching the task."""
    with open(path, encoding="utf-8") as fh:
        header = ""
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                header = line
                break
    if header.startswith("timestamp"):
        if task.kind is not TaskKind.BEAM_TO_BEAM:
            raise TaskMismatchError(f"{path}: beam log cannot feed task {task.kind.value}")
        return ingest_beam_trace(read_beam_log_csv(path, n_beams=task.vocab_size))
    traces = read_traces_csv(path)
    kinds = {t.kind for t in traces}
    if traces and kinds != {task.kind.trace_kind}:
        raise TaskMismatchError(
            f"{path}: {'/'.join(sorted(kinds))} traces cannot feed task {task.kind.value}"
        )
    return traces


def cmd_generate(args) -> None:
    cfg = load_config(args.config, args.set)
    out = _require(args.output, "--output")
    from .radio import AreaConfig, RadioConfig, generate_deployment

    area = AreaConfig(width=cfg.get("area", "width_m"), height=cfg.get("area", "height_m"))
    radio = RadioConfig(
        tx_power_dbm=cfg.get("radio", "tx_power_dbm"),
        path_loss_exponent=cfg.get("radio", "path_loss_exponent"),
        reference_distance_m=cfg.get("radio", "reference_distance_m"),
        max_gain_dbi=cfg.get("radio", "max_gain_dbi"),
        beamwidth_3db_deg=cfg.get("radio", "beamwidth_3db_deg"),
        front_back_ratio_db=cfg.get("radio", "front_back_ratio_db"),
    )
    deployment = generate_deployment(
        seed=cfg.get("deployment", "seed"),
        area=area,
        n_bs=cfg.get("deployment", "n_bs"),
        radio=radio,
        n_sectors=cfg.get("deployment", "n_sectors"),
    )
    save_deployment(deployment, out, provenance=provenance_line(cfg, str(deployment.seed)))
    print(f"wrote deployment with {deployment.n_cells} stations to {out}")


def cmd_simulate(args) -> None:
    cfg = load_config(args.config, args.set)
    dep_path = _require(args.deployment, "--deployment")
    out = _require(args.output, "--output")
    n_steps = cfg.get("mobility", "n_steps")
    n_ues = cfg.get("mobility", "n_ues")
    if n_steps < 1 or n_ues < 1:
        raise UsageError("mobility.n_steps and mobility.n_ues must be >= 1")
    from .mobility import A3Config, MobilityConfig, run_simulation

    deployment = load_deployment(dep_path)
    traces = run_simulation(
        deployment,
        n_ues=n_ues,
        n_steps=n_steps,
        mobility=MobilityConfig(speed=cfg.get("mobility", "speed_m_per_step")),
        a3=A3Config(
            hysteresis_db=cfg.get("a3", "hysteresis_db"),
            time_to_trigger_steps=cfg.get("a3", "time_to_trigger_steps"),
        ),
        seed=cfg.get("mobility", "seed"),
    )
    seed = cfg.get("mobility", "seed")
    write_traces_csv(traces, out, provenance=provenance_line(cfg, str(seed)))
    n_entries = sum(len(t.entries) for t in traces)
    print(f"wrote {len(traces)} trace segments ({n_entries} entries) to {out}")


def cmd_train(args) -> None:
    cfg = load_config(args.config, args.set)
    traces_path = _require(args.traces, "--traces")
    out_dir = Path(_require(args.output_dir, "--output-dir"))
    task = _task_from_config(cfg)
    try:
        traces = _read_any_traces(traces_path, task)
    except VocabularyError as exc:
        raise VocabularyError(f"{traces_path}: {exc}") from exc
    try:
        dataset = build_dataset(traces, task)
    except VocabularyError as exc:
        raise VocabularyError(f"{traces_path}: {exc}") from exc
    seed = cfg.get("train", "seed")
    train_ds, val_ds = split_dataset(dataset, cfg.get("train", "train_fraction"), seed)
    result = train(train_ds, val_ds, train_config_from(cfg, seed))
    out_dir.mkdir(parents=True, exist_ok=True)
    prov = provenance_line(cfg, str(seed))
    save_model(result.model, out_dir / "model.bin")
    with open(out_dir / "loss_curve.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {prov}\n")
        writer = csv.writer(fh)
        writer.writerow(CURVE_HEADER)
        for episode, loss in enumerate(result.train_losses, start=1):
            writer.writerow([episode, "train", repr(loss)])
    write_dataset_meta(
        dataset,
        out_dir / "dataset_meta.ini",
        extra={"n_train_windows": len(train_ds.windows), "n_val_windows": len(val_ds.windows)},
    )
    final = result.val_metrics[-1]
    summary = (
        f"accuracy={final.accuracy:.4f}" if final.accuracy is not None
        else f"mae_steps={final.mae_steps:.4f}"
    )
    print(f"trained {task.kind.value} model ({summary}) into {out_dir}")


def cmd_eval(args) -> None:
    cfg = load_config(args.config, args.set)
    model_path = _require(args.model, "--model")
    traces_path = _require(args.traces, "--traces")
    out = _require(args.output, "--output")
    model = load_model(model_path)
    traces = _read_any_traces(traces_path, model.task)
    dataset = build_dataset(traces, model.task)
    metrics = evaluate(model, dataset)
    prov = provenance_line(cfg, "0")
    with open(out, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {prov}\n")
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        n, k = model.task.history_len, model.task.horizon
        if metrics.per_step_accuracy is not None:
            for j, acc in enumerate(metrics.per_step_accuracy, start=1):
                writer.writerow(["eval", n, k, 0, str(j), "accuracy", repr(acc)])
            writer.writerow(["eval", n, k, 0, "mean", "accuracy", repr(metrics.accuracy)])
        else:
            writer.writerow(["eval", n, k, 0, "1", "mae_steps", repr(metrics.mae_steps)])
            writer.writerow(["eval", n, k, 0, "mean", "mae_steps", repr(metrics.mae_steps)])
        writer.writerow(["eval", n, k, 0, "mean", "loss", repr(metrics.mean_loss)])
    print(f"wrote metrics to {out}")


def cmd_suite(args) -> None:
    cfg = load_config(args.config, args.set)
    out_dir = _require(args.output_dir, "--output-dir")
    report = run_experiment_suite(cfg, out_dir)
    print(f"suite {report.suite}: {len(report.rows)} metric rows in {out_dir}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hoseq",
        description="Mobility simulation and sequence prediction for cellular handovers",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="configuration file")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="override a config value (repeatable)",
        )

    p = sub.add_parser("generate", help="drop base stations and write a deployment file")
    common(p)
    p.add_argument("--output", help="deployment file to write")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="run the mobility simulation and write trace CSV")
    common(p)
    p.add_argument("--deployment", help="deployment file from `generate`")
    p.add_argument("--output", help="trace CSV to write")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train a model on a trace CSV or beam log")
    common(p)
    p.add_argument("--traces", help="trace CSV or timestamp,ue_id,beam_id log")
    p.add_argument("--output-dir", help="directory for model.bin, loss_curve.csv, dataset_meta.ini")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on traces")
    common(p)
    p.add_argument("--model", help="model file from `train`")
    p.add_argument("--traces", help="trace CSV or beam log")
    p.add_argument("--output", help="metrics CSV to write")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("suite", help="run an experiment suite and write report CSVs")
    common(p)
    p.add_argument("--output-dir", help="directory for report CSVs")
    p.set_defaults(func=cmd_suite)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
        return 0
    except UsageError as exc:
        print(f"error: UsageError: {exc}", file=sys.stderr)
        return 2
    except HoseqError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
