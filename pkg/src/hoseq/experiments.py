"""Experiment suites that sweep history length, horizon, and seeds.

Each suite runs its grid over at least three seeds, evaluates on a held
out validation split, and writes plot-ready CSV reports. Grid points are
seed-isolated and deterministic, so reports are byte-identical across
reruns of the same configuration.

Suites:
  cell_accuracy   next-cell accuracy vs history length, horizons 1 and 2
  convergence     training/validation loss per episode on the cell task
  dwell_mae       dwell-time MAE vs history length
  multivariate    cell accuracy with vs without the dwell feature
  beam_accuracy   next-beam accuracy vs history length on synthetic traces
  drift           beam accuracy when evaluation traces drift from training
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .config import Config
from .dataset import (
    TaskKind,
    TaskSpec,
    build_dataset,
    split_dataset,
    synth_beam_traces,
)
from .errors import UsageError
from .mobility import A3Config, MobilityConfig, run_simulation
from .radio import AreaConfig, RadioConfig, generate_deployment
from .seq2seq import Metrics, TrainConfig, TrainResult, train

SIM_SEED_OFFSET = 10_000  # keep BS drops and UE spawns on separate streams
EVAL_SEED_OFFSET = 50_000  # drift evaluation traces come from a fresh stream

METRICS_HEADER = ["suite", "N", "K", "seed", "k_step", "metric", "value"]
CURVE_HEADER = ["episode", "split", "loss"]


@dataclass(frozen=True)
class MetricRow:
    suite: str
    n: int
    k: int
    seed: int
    k_step: str
    metric: str
    value: float


@dataclass
class ExperimentReport:
    suite: str
    rows: list[MetricRow] = field(default_factory=list)
    curves: dict[str, list[tuple[int, str, float]]] = field(default_factory=dict)
    provenance: str = ""


def provenance_line(cfg: Config, seed_note: str) -> str:
    return f"provenance: config_hash={cfg.hash()} seed={seed_note} version={__version__}"


def scenario_from_config(cfg: Config, seed: int):
    """Generate the deployment and simulate traces for one suite seed."""
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
        seed=seed,
        area=area,
        n_bs=cfg.get("deployment", "n_bs"),
        radio=radio,
        n_sectors=cfg.get("deployment", "n_sectors"),
    )
    mobility = MobilityConfig(speed=cfg.get("mobility", "speed_m_per_step"))
    a3 = A3Config(
        hysteresis_db=cfg.get("a3", "hysteresis_db"),
        time_to_trigger_steps=cfg.get("a3", "time_to_trigger_steps"),
    )
    traces = run_simulation(
        deployment,
        n_ues=cfg.get("mobility", "n_ues"),
        n_steps=cfg.get("mobility", "n_steps"),
        mobility=mobility,
        a3=a3,
        seed=seed + SIM_SEED_OFFSET,
    )
    return deployment, traces


def train_config_from(cfg: Config, seed: int, episodes: int | None = None) -> TrainConfig:
    return TrainConfig(
        episodes=episodes if episodes is not None else cfg.get("train", "episodes"),
        batch_size=cfg.get("train", "batch_size"),
        learning_rate=cfg.get("train", "learning_rate"),
        seed=seed,
        init_scale=cfg.get("train", "init_scale"),
        hidden_units=cfg.get("train", "hidden_units"),
    )


def _fit(traces, task: TaskSpec, cfg: Config, seed: int, episodes=None) -> TrainResult:
    dataset = build_dataset(traces, task)
    train_ds, val_ds = split_dataset(dataset, cfg.get("train", "train_fraction"), seed)
    return train(train_ds, val_ds, train_config_from(cfg, seed, episodes))


def _accuracy_rows(suite, n, k, seed, metrics: Metrics, metric="accuracy"):
    rows = [
        MetricRow(suite, n, k, seed, str(j + 1), metric, acc)
        for j, acc in enumerate(metrics.per_step_accuracy)
    ]
    rows.append(MetricRow(suite, n, k, seed, "mean", metric, metrics.accuracy))
    return rows


def run_experiment_suite(cfg: Config, output_dir) -> ExperimentReport:
    """Execute the suite named in [suite] and write its report CSVs."""
    name = cfg.get("suite", "name")
    runner = _SUITES.get(name)
    if runner is None:
        raise UsageError(f"unknown suite {name!r}; choose one of {sorted(_SUITES)}")
    report = runner(cfg)
    seeds = cfg.get("suite", "seeds")
    report.provenance = provenance_line(cfg, ",".join(str(s) for s in seeds))
    _write_report(report, Path(output_dir))
    return report


def _write_report(report: ExperimentReport, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    metrics_path = out / f"metrics_{report.suite}.csv"
    with open(metrics_path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {report.provenance}\n")
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        for row in report.rows:
            writer.writerow(
                [row.suite, row.n, row.k, row.seed, row.k_step, row.metric, repr(row.value)]
            )
    for key, curve in report.curves.items():
        with open(out / f"loss_curve_{key}.csv", "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# {report.provenance}\n")
            writer = csv.writer(fh)
            writer.writerow(CURVE_HEADER)
            for episode, split_name, loss in curve:
                writer.writerow([episode, split_name, repr(loss)])


def _cell_task(cfg: Config, kind: TaskKind, n: int, k: int) -> TaskSpec:
    return TaskSpec(kind=kind, history_len=n, horizon=k, vocab_size=cfg.get("deployment", "n_bs"))


def suite_cell_accuracy(cfg: Config) -> ExperimentReport:
    report = ExperimentReport(suite="cell_accuracy")
    grid: list[MetricRow] = []
    for n in cfg.get("suite", "n_values"):
        for k in cfg.get("suite", "k_values"):
            for seed in cfg.get("suite", "seeds"):
                _, traces = _scenario_cached(cfg, seed)
                task = _cell_task(cfg, TaskKind.CELL_TO_CELL, n, k)
                result = _fit(traces, task, cfg, seed)
                grid.extend(_accuracy_rows("cell_accuracy", n, k, seed, result.val_metrics[-1]))
    report.rows = grid
    return report


def suite_convergence(cfg: Config) -> ExperimentReport:
    report = ExperimentReport(suite="convergence")
    n = cfg.get("task", "history_len")
    k = cfg.get("task", "horizon")
    for seed in cfg.get("suite", "seeds"):
        _, traces = _scenario_cached(cfg, seed)
        task = _cell_task(cfg, TaskKind.CELL_TO_CELL, n, k)
        result = _fit(traces, task, cfg, seed)
        curve: list[tuple[int, str, float]] = []
        for episode, loss in enumerate(result.train_losses, start=1):
            curve.append((episode, "train", loss))
        for episode, metrics in enumerate(result.val_metrics, start=1):
            curve.append((episode, "val", metrics.mean_loss))
        report.curves[f"seed{seed}"] = curve
        report.rows.extend(_accuracy_rows("convergence", n, k, seed, result.val_metrics[-1]))
    return report


def suite_dwell_mae(cfg: Config) -> ExperimentReport:
    report = ExperimentReport(suite="dwell_mae")
    for n in cfg.get("suite", "n_values"):
        for seed in cfg.get("suite", "seeds"):
            _, traces = _scenario_cached(cfg, seed)
            task = _cell_task(cfg, TaskKind.CELL_DWELL_TO_DWELL, n, 1)
            result = _fit(traces, task, cfg, seed)
            final = result.val_metrics[-1]
            report.rows.append(
                MetricRow("dwell_mae", n, 1, seed, "1", "mae_steps", final.mae_steps)
            )
            report.rows.append(
                MetricRow("dwell_mae", n, 1, seed, "mean", "mae_steps", final.mae_steps)
            )
    return report


def suite_multivariate(cfg: Config) -> ExperimentReport:
    arms = [
        (TaskKind.CELL_TO_CELL, "accuracy_cell_only"),
        (TaskKind.CELL_DWELL_TO_CELL, "accuracy_cell_dwell"),
    ]
    report = ExperimentReport(suite="multivariate")
    for n in cfg.get("suite", "n_values"):
        for k in cfg.get("suite", "k_values"):
            for seed in cfg.get("suite", "seeds"):
                _, traces = _scenario_cached(cfg, seed)
                for kind, metric in arms:
                    task = _cell_task(cfg, kind, n, k)
                    result = _fit(traces, task, cfg, seed)
                    report.rows.extend(
                        _accuracy_rows(
                            "multivariate", n, k, seed, result.val_metrics[-1], metric=metric
                        )
                    )
    return report


def _beam_task(cfg: Config, n: int, k: int = 1) -> TaskSpec:
    return TaskSpec(
        kind=TaskKind.BEAM_TO_BEAM, history_len=n, horizon=k, vocab_size=cfg.get("suite", "beams")
    )


def _beam_traces(cfg: Config, seed: int, drift: float):
    return synth_beam_traces(
        n_ues=cfg.get("suite", "beam_n_ues"),
        n_steps=cfg.get("suite", "beam_n_steps"),
        n_beams=cfg.get("suite", "beams"),
        drift=drift,
        seed=seed,
        noise=cfg.get("suite", "beam_noise"),
    )


def suite_beam_accuracy(cfg: Config) -> ExperimentReport:
    report = ExperimentReport(suite="beam_accuracy")
    for n in cfg.get("suite", "n_values"):
        for seed in cfg.get("suite", "seeds"):
            traces = _beam_traces(cfg, seed, drift=0.0)
            result = _fit(traces, _beam_task(cfg, n), cfg, seed)
            report.rows.extend(_accuracy_rows("beam_accuracy", n, 1, seed, result.val_metrics[-1]))
    return report


def suite_drift(cfg: Config) -> ExperimentReport:
    from .seq2seq import evaluate

    report = ExperimentReport(suite="drift")
    n = cfg.get("task", "history_len")
    for seed in cfg.get("suite", "seeds"):
        task = _beam_task(cfg, n)
        result = _fit(_beam_traces(cfg, seed, drift=0.0), task, cfg, seed)
        for drift in cfg.get("suite", "drift_values"):
            eval_traces = _beam_traces(cfg, seed + EVAL_SEED_OFFSET, drift=drift)
            eval_ds = build_dataset(eval_traces, task)
            metrics = evaluate(result.model, eval_ds)
            report.rows.extend(
                _accuracy_rows("drift", n, 1, seed, metrics, metric=f"accuracy_drift_{drift:g}")
            )
    return report


_SUITES = {
    "cell_accuracy": suite_cell_accuracy,
    "convergence": suite_convergence,
    "dwell_mae": suite_dwell_mae,
    "multivariate": suite_multivariate,
    "beam_accuracy": suite_beam_accuracy,
    "drift": suite_drift,
}

_scenario_cache: dict[tuple[str, int], tuple] = {}

SCENARIO_SECTIONS = ("deployment", "area", "radio", "mobility", "a3")


def _scenario_cached(cfg: Config, seed: int):
    """Deployment + traces per (scenario config, seed).

    Keyed on the scenario-relevant sections only, so every grid point of
    a suite, and suites sharing a scenario, reuse one simulation.
    """
    key = (cfg.hash(SCENARIO_SECTIONS), seed)
    if key not in _scenario_cache:
        if len(_scenario_cache) > 16:
            _scenario_cache.clear()
        _scenario_cache[key] = scenario_from_config(cfg, seed)
    return _scenario_cache[key]
