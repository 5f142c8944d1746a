"""Supervised windows over mobility traces for the four prediction tasks.

A task reads N history entries and predicts K future ones. Features are
one-hot IDs over the vocabulary (cells or beams), optionally with a
min-max-scaled dwell column appended; labels are future IDs or future
dwell values. Windows slide with stride 1 and never cross trace
boundaries, so relocation artifacts cannot leak into training data.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from .errors import EmptyDatasetError, ParseError, SplitError, VocabularyError
from .mobility import MobilityTrace


class TaskKind(enum.Enum):
    CELL_TO_CELL = "cell_to_cell"
    CELL_DWELL_TO_DWELL = "cell_dwell_to_dwell"
    CELL_DWELL_TO_CELL = "cell_dwell_to_cell"
    BEAM_TO_BEAM = "beam_to_beam"

    @property
    def uses_dwell_feature(self) -> bool:
        return self in (TaskKind.CELL_DWELL_TO_DWELL, TaskKind.CELL_DWELL_TO_CELL)

    @property
    def predicts_dwell(self) -> bool:
        return self is TaskKind.CELL_DWELL_TO_DWELL

    @property
    def trace_kind(self) -> str:
        return "beam" if self is TaskKind.BEAM_TO_BEAM else "cell"


@dataclass(frozen=True)
class TaskSpec:
    """One prediction task: history length N, horizon K, vocabulary size L."""

    kind: TaskKind
    history_len: int
    horizon: int
    vocab_size: int

    def __post_init__(self):
        if self.history_len < 1:
            raise ValueError("history_len must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.vocab_size < 2:
            raise ValueError("vocab_size must be >= 2")

    @property
    def feature_dim(self) -> int:
        return self.vocab_size + (1 if self.kind.uses_dwell_feature else 0)

    @property
    def output_dim(self) -> int:
        return 1 if self.kind.predicts_dwell else self.vocab_size

    @property
    def uses_dwell(self) -> bool:
        return self.kind.uses_dwell_feature or self.kind.predicts_dwell


@dataclass(frozen=True)
class Window:
    """One (history, future) pair in raw ID/dwell form.

    Encoding to matrices happens separately so the dwell scale can come
    from training statistics after the split.
    """

    history_ids: tuple[int, ...]
    history_dwells: tuple[int, ...] | None
    label_ids: tuple[int, ...] | None
    label_dwells: tuple[int, ...] | None


@dataclass
class Dataset:
    task: TaskSpec
    windows: list[Window]
    dwell_scale: tuple[float, float] | None = None

    def __len__(self) -> int:
        return len(self.windows)


def build_windows(trace: MobilityTrace, task: TaskSpec) -> list[Window]:
    """Stride-1 sliding windows over one trace segment.

    A trace of T entries yields max(0, T - N - K + 1) windows. IDs
    outside {1..L} raise VocabularyError.
    """
    ids = trace.ids()
    dwells = trace.dwells()
    for ident in ids:
        if not (1 <= ident <= task.vocab_size):
            raise VocabularyError(
                f"ID {ident} outside vocabulary 1..{task.vocab_size} (ue {trace.ue_id})"
            )
    n, k = task.history_len, task.horizon
    windows: list[Window] = []
    for start in range(len(ids) - n - k + 1):
        hist = tuple(ids[start : start + n])
        future = slice(start + n, start + n + k)
        windows.append(
            Window(
                history_ids=hist,
                history_dwells=tuple(dwells[start : start + n])
                if task.kind.uses_dwell_feature
                else None,
                label_ids=None if task.kind.predicts_dwell else tuple(ids[future]),
                label_dwells=tuple(dwells[future]) if task.kind.predicts_dwell else None,
            )
        )
    return windows


def build_dataset(traces, task: TaskSpec) -> Dataset:
    """Concatenate the windows of every trace into one dataset.

    For dwell-bearing tasks the scale is the min/max over all dwell
    values seen here; split_dataset recomputes it from the training
    partition alone.
    """
    windows: list[Window] = []
    for trace in traces:
        windows.extend(build_windows(trace, task))
    scale = _dwell_scale(windows) if task.uses_dwell else None
    return Dataset(task=task, windows=windows, dwell_scale=scale)


def _dwell_scale(windows) -> tuple[float, float]:
    values: list[float] = []
    for w in windows:
        if w.history_dwells:
            values.extend(w.history_dwells)
        if w.label_dwells:
            values.extend(w.label_dwells)
    if not values:
        return (0.0, 1.0)
    lo, hi = float(min(values)), float(max(values))
    if hi <= lo:
        hi = lo + 1.0  # degenerate constant dwell; keep the scale usable
    return lo, hi


def scale_dwell(values, scale: tuple[float, float]) -> np.ndarray:
    lo, hi = scale
    return np.clip((np.asarray(values, dtype=np.float64) - lo) / (hi - lo), 0.0, 1.0)


def unscale_dwell(values, scale: tuple[float, float]) -> np.ndarray:
    lo, hi = scale
    return lo + np.asarray(values, dtype=np.float64) * (hi - lo)


def encode_features(
    ids,
    dwells,
    task: TaskSpec,
    dwell_scale: tuple[float, float] | None = None,
) -> np.ndarray:
    """Encode one history as an (N, F) float matrix.

    Row i is the one-hot of ids[i] over L columns; when the task carries
    dwell, column L+1 holds (d - min)/(max - min) clamped to [0, 1].
    """
    ids = list(ids)
    mat = np.zeros((len(ids), task.feature_dim), dtype=np.float64)
    for i, ident in enumerate(ids):
        if not (1 <= ident <= task.vocab_size):
            raise VocabularyError(f"ID {ident} outside vocabulary 1..{task.vocab_size}")
        mat[i, ident - 1] = 1.0
    if task.kind.uses_dwell_feature:
        if dwells is None:
            raise ValueError(f"task {task.kind.value} requires dwell values")
        if dwell_scale is None:
            raise ValueError("dwell_scale required to encode dwell features")
        mat[:, task.vocab_size] = scale_dwell(list(dwells), dwell_scale)
    elif dwells is not None:
        raise ValueError(f"task {task.kind.value} takes no dwell values")
    return mat


def encode_dataset(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """All windows as (X, Y) arrays ready for the model.

    X is (n, N, F). Y is (n, K) int64 zero-based class indices for
    classification tasks, or (n, K) float64 scaled dwell targets.
    """
    if not dataset.windows:
        raise EmptyDatasetError("dataset has no windows")
    task = dataset.task
    n = len(dataset.windows)
    x = np.zeros((n, task.history_len, task.feature_dim), dtype=np.float64)
    for i, w in enumerate(dataset.windows):
        x[i] = encode_features(w.history_ids, w.history_dwells, task, dataset.dwell_scale)
    if task.kind.predicts_dwell:
        raw = np.array([w.label_dwells for w in dataset.windows], dtype=np.float64)
        y = scale_dwell(raw, dataset.dwell_scale)
    else:
        y = np.array([w.label_ids for w in dataset.windows], dtype=np.int64) - 1
    return x, y


def raw_dwell_labels(dataset: Dataset) -> np.ndarray:
    """(n, K) dwell targets in reporting steps, unscaled."""
    if not dataset.task.kind.predicts_dwell:
        raise ValueError("dataset task does not predict dwell")
    return np.array([w.label_dwells for w in dataset.windows], dtype=np.float64)


def split_dataset(dataset: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Shuffle windows with the seed, then cut into train and validation.

    Both parts are non-empty; together they cover the input exactly. For
    dwell-bearing tasks the scale is recomputed from the training
    windows and copied onto the validation set.
    """
    if not (0.0 < train_fraction < 1.0):
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    n = len(dataset.windows)
    if n < 2:
        raise SplitError(f"need at least 2 windows to split, got {n}")
    order = np.random.default_rng(seed).permutation(n)
    n_train = min(max(int(n * train_fraction), 1), n - 1)
    train_windows = [dataset.windows[i] for i in order[:n_train]]
    val_windows = [dataset.windows[i] for i in order[n_train:]]
    scale = _dwell_scale(train_windows) if dataset.task.uses_dwell else None
    train = Dataset(task=dataset.task, windows=train_windows, dwell_scale=scale)
    val = Dataset(task=dataset.task, windows=val_windows, dwell_scale=scale)
    return train, val


# --- beam traces -------------------------------------------------------------

BEAM_LOG_HEADER = ["timestamp", "ue_id", "beam_id"]


@dataclass(frozen=True)
class BeamTraceFile:
    """Parsed beam log: (timestamp s, ue_id, beam_id) rows and the beam count."""

    rows: tuple[tuple[float, int, int], ...]
    n_beams: int


def read_beam_log_csv(path, n_beams: int) -> BeamTraceFile:
    """Parse a timestamp,ue_id,beam_id CSV; malformed rows carry line numbers."""
    rows: list[tuple[float, int, int]] = []
    with open(path, encoding="utf-8") as fh:
        lines = [(no, ln.rstrip("\n")) for no, ln in enumerate(fh, start=1)]
    content = [(no, ln) for no, ln in lines if ln and not ln.startswith("#")]
    if not content:
        return BeamTraceFile(rows=(), n_beams=n_beams)
    header_no, header = content[0]
    if next(csv.reader([header])) != BEAM_LOG_HEADER:
        raise ParseError(f"expected header {','.join(BEAM_LOG_HEADER)}", line=header_no)
    for line_no, raw in content[1:]:
        fields = next(csv.reader([raw]))
        if len(fields) != 3:
            raise ParseError(f"expected 3 fields, got {len(fields)}", line=line_no)
        try:
            ts, ue, beam = float(fields[0]), int(fields[1]), int(fields[2])
        except ValueError as exc:
            raise ParseError(str(exc), line=line_no) from exc
        if not (1 <= beam <= n_beams):
            raise ParseError(f"beam_id {beam} outside 1..{n_beams}", line=line_no)
        rows.append((ts, ue, beam))
    return BeamTraceFile(rows=tuple(rows), n_beams=n_beams)


def ingest_beam_trace(log: BeamTraceFile) -> list[MobilityTrace]:
    """Collapse a beam log into beam-kind traces.

    Rows are grouped per UE and time-sorted; runs of the same beam merge
    into one entry whose dwell is the run length. UEs come out in
    ascending ue_id order.
    """
    by_ue: dict[int, list[tuple[float, int]]] = {}
    for ts, ue, beam in log.rows:
        by_ue.setdefault(ue, []).append((ts, beam))
    traces: list[MobilityTrace] = []
    for ue in sorted(by_ue):
        seq = [beam for _, beam in sorted(by_ue[ue], key=lambda item: item[0])]
        entries: list[tuple[int, int]] = []
        for beam in seq:
            if entries and entries[-1][0] == beam:
                entries[-1] = (beam, entries[-1][1] + 1)
            else:
                entries.append((beam, 1))
        traces.append(MobilityTrace(ue_id=ue, entries=entries, kind="beam"))
    return traces


def write_beam_log_csv(traces, path, provenance: str | None = None) -> None:
    """Expand beam traces back into a timestamped log.

    Each entry emits dwell-many rows at consecutive integer timestamps,
    so ingest_beam_trace(read_beam_log_csv(...)) reproduces the traces
    exactly.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if provenance:
            fh.write(f"# {provenance}\n")
        writer = csv.writer(fh)
        writer.writerow(BEAM_LOG_HEADER)
        for trace in traces:
            t = 0
            for beam, dwell in trace.entries:
                for _ in range(dwell):
                    writer.writerow([float(t), trace.ue_id, beam])
                    t += 1


def synth_beam_traces(
    n_ues: int,
    n_steps: int,
    n_beams: int,
    drift: float,
    seed: int,
    noise: float = 0.08,
    corridor_seed: int = 7,
) -> list[MobilityTrace]:
    """Synthesize beam traces for UEs traversing a fixed beam corridor.

    The corridor is a random permutation of {1..n_beams} drawn from
    corridor_seed and walked cyclically; it plays the role of the road
    geometry, so it stays fixed while `seed` varies the traffic. Per
    step a UE advances one position, or with probability `noise` either
    lingers or skips ahead. `drift` rewires the corridor by applying
    the first round(drift * n_beams) of a fixed stream of adjacent
    transpositions, emulating gradual day-over-day change: larger drift
    perturbs strictly more transitions. Deterministic per
    (seed, drift, noise, corridor_seed).
    """
    if n_beams < 2:
        raise ValueError("n_beams must be >= 2")
    if n_ues < 1 or n_steps < 1:
        raise ValueError("n_ues and n_steps must be >= 1")
    if drift < 0:
        raise ValueError("drift must be non-negative")
    corridor_rng = np.random.default_rng(corridor_seed)
    corridor = corridor_rng.permutation(n_beams) + 1
    swap_stream = corridor_rng.integers(0, n_beams - 1, size=2 * n_beams)
    n_swaps = min(int(round(drift * n_beams)), len(swap_stream))
    for pos in swap_stream[:n_swaps]:
        corridor[pos], corridor[pos + 1] = corridor[pos + 1], corridor[pos]
    rng = np.random.default_rng(seed)
    traces: list[MobilityTrace] = []
    for ue in range(n_ues):
        idx = 0
        entries: list[tuple[int, int]] = []
        for _ in range(n_steps):
            beam = int(corridor[idx % n_beams])
            if entries and entries[-1][0] == beam:
                entries[-1] = (beam, entries[-1][1] + 1)
            else:
                entries.append((beam, 1))
            if noise > 0:
                r = rng.uniform()
                if r < noise / 2:
                    step = 0  # linger one extra report
                elif r < noise:
                    step = 2  # skip a beam
                else:
                    step = 1
            else:
                step = 1
            idx += step
        traces.append(MobilityTrace(ue_id=ue, entries=entries, kind="beam"))
    return traces


def write_dataset_meta(dataset: Dataset, path, extra: dict | None = None) -> None:
    """Emit dataset metadata as a plain-text sections file."""
    lines = ["[dataset]"]
    lines.append(f"kind = {dataset.task.kind.value}")
    lines.append(f"history_len = {dataset.task.history_len}")
    lines.append(f"horizon = {dataset.task.horizon}")
    lines.append(f"vocab_size = {dataset.task.vocab_size}")
    lines.append(f"n_windows = {len(dataset.windows)}")
    if dataset.dwell_scale is not None:
        lines.append(f"dwell_min = {dataset.dwell_scale[0]!r}")
        lines.append(f"dwell_max = {dataset.dwell_scale[1]!r}")
    for key, value in (extra or {}).items():
        lines.append(f"{key} = {value}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
