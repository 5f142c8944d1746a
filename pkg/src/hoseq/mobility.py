"""Straight-line UE motion, the A3 handover state machine, and traces.

UEs move along straight lines at constant speed, one position update per
reporting step. A UE leaving the area is relocated uniformly at random
with a fresh random heading; relocation closes the current trace segment
(it is a data boundary, not a handover). Handovers follow the A3 rule: a
neighbor must exceed the serving cell by the hysteresis margin for
strictly more than time_to_trigger consecutive reports.

Dwell-times are counted in reporting steps. Spawning consumes the first
step, so per UE the dwells across all of its trace segments sum exactly
to the number of simulated steps.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import ParseError
from .radio import Deployment, best_cell, cell_powers


@dataclass(frozen=True)
class MobilityConfig:
    """Kinematics: meters advanced per reporting step (period fixed at 1)."""

    speed: float = 5.0

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError("speed must be non-negative")


@dataclass(frozen=True)
class A3Config:
    """Handover trigger: hysteresis margin in dB and time-to-trigger in steps."""

    hysteresis_db: float = 2.0
    time_to_trigger_steps: int = 1

    def __post_init__(self):
        if self.hysteresis_db < 0:
            raise ValueError("hysteresis_db must be non-negative")
        if self.time_to_trigger_steps < 0:
            raise ValueError("time_to_trigger_steps must be non-negative")


@dataclass(frozen=True)
class UeState:
    """Snapshot of one UE between reporting steps."""

    position: tuple[float, float]
    heading_deg: float
    serving_cell: int
    dwell_counter: int
    a3_timers: dict[int, int] = field(default_factory=dict)


@dataclass
class MobilityTrace:
    """One segment of a UE's mobility history.

    entries is an ordered list of (ID, dwell in steps); consecutive
    entries never repeat an ID. kind is "cell" or "beam".
    """

    ue_id: int
    entries: list[tuple[int, int]]
    kind: str = "cell"

    def ids(self) -> list[int]:
        return [cell for cell, _ in self.entries]

    def dwells(self) -> list[int]:
        return [dwell for _, dwell in self.entries]


@dataclass(frozen=True)
class StepRecord:
    """Per-step diagnostic emitted by run_simulation_logged."""

    ue_id: int
    step: int
    position: tuple[float, float]
    serving_cell: int
    relocated: bool
    handover: bool


def _advance(
    x: float,
    y: float,
    heading_deg: float,
    speed: float,
    area,
    rng: np.random.Generator,
) -> tuple[float, float, float, bool]:
    """One kinematic step; returns (x, y, heading, relocated)."""
    rad = math.radians(heading_deg)
    nx = x + speed * math.cos(rad)
    ny = y + speed * math.sin(rad)
    if area.contains(nx, ny):
        return nx, ny, heading_deg, False
    rx = rng.uniform(0.0, area.width)
    ry = rng.uniform(0.0, area.height)
    rh = rng.uniform(0.0, 360.0)
    return float(rx), float(ry), float(rh), True


def step_ue(ue: UeState, config: MobilityConfig, area, rng: np.random.Generator) -> UeState:
    """Advance one UE by one reporting step, relocating on area exit.

    Only kinematics: serving cell, dwell, and timers pass through
    unchanged. Relocation draws position and heading from rng, so a
    fixed seed reproduces it.
    """
    x, y, heading, _ = _advance(
        ue.position[0], ue.position[1], ue.heading_deg, config.speed, area, rng
    )
    return UeState(
        position=(x, y),
        heading_deg=heading,
        serving_cell=ue.serving_cell,
        dwell_counter=ue.dwell_counter,
        a3_timers=dict(ue.a3_timers),
    )


def evaluate_a3(
    serving_rsrp: float,
    neighbor_rsrps: Mapping[int, float],
    timers: Mapping[int, int],
    a3: A3Config,
) -> tuple[dict[int, int], int | None]:
    """One A3 report: update per-neighbor timers, maybe pick a handover target.

    A neighbor's timer counts consecutive reports with
    rsrp > serving + hysteresis; any miss resets it to zero. A handover
    fires on the first report where some timer exceeds time_to_trigger;
    among simultaneous qualifiers the strongest neighbor wins (ties to
    the lowest cell-ID). On handover every timer resets.
    """
    new_timers: dict[int, int] = {}
    qualified: list[int] = []
    for cell, power in neighbor_rsrps.items():
        if power > serving_rsrp + a3.hysteresis_db:
            t = timers.get(cell, 0) + 1
        else:
            t = 0
        new_timers[cell] = t
        if t > a3.time_to_trigger_steps:
            qualified.append(cell)
    if not qualified:
        return new_timers, None
    target = min(qualified, key=lambda c: (-neighbor_rsrps[c], c))
    return {cell: 0 for cell in new_timers}, target


def run_simulation(
    deployment: Deployment,
    n_ues: int,
    n_steps: int,
    mobility: MobilityConfig,
    a3: A3Config,
    seed: int,
) -> list[MobilityTrace]:
    """Simulate n_ues independent UEs for n_steps reporting steps each.

    Every UE spawns at a uniform random position with a random heading
    and is served by the strongest cell there (spawn consumes step 1).
    Each later step moves the UE, re-evaluates A3 on noiseless powers,
    and updates dwell counters. Relocations start a new trace segment,
    so one UE can contribute several traces. Output is bit-identical for
    identical inputs.
    """
    traces, _ = _simulate(deployment, n_ues, n_steps, mobility, a3, seed, log=None)
    return traces


def run_simulation_logged(
    deployment: Deployment,
    n_ues: int,
    n_steps: int,
    mobility: MobilityConfig,
    a3: A3Config,
    seed: int,
) -> tuple[list[MobilityTrace], list[StepRecord]]:
    """run_simulation plus a per-step position/serving-cell log."""
    log: list[StepRecord] = []
    traces, log = _simulate(deployment, n_ues, n_steps, mobility, a3, seed, log=log)
    return traces, log


def _simulate(deployment, n_ues, n_steps, mobility, a3, seed, log):
    if n_ues < 1:
        raise ValueError("n_ues must be at least 1")
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    area = deployment.area
    all_cells = range(1, deployment.n_cells + 1)
    rng = np.random.default_rng(seed)
    traces: list[MobilityTrace] = []

    for ue_id in range(n_ues):
        x = float(rng.uniform(0.0, area.width))
        y = float(rng.uniform(0.0, area.height))
        heading = float(rng.uniform(0.0, 360.0))
        serving, _ = best_cell(deployment, (x, y))
        dwell = 1
        timers = {c: 0 for c in all_cells if c != serving}
        entries: list[tuple[int, int]] = []
        if log is not None:
            log.append(StepRecord(ue_id, 1, (x, y), serving, False, False))

        for step in range(2, n_steps + 1):
            x, y, heading, relocated = _advance(x, y, heading, mobility.speed, area, rng)
            if relocated:
                entries.append((serving, dwell))
                traces.append(MobilityTrace(ue_id=ue_id, entries=entries))
                entries = []
                serving, _ = best_cell(deployment, (x, y))
                dwell = 1
                timers = {c: 0 for c in all_cells if c != serving}
                if log is not None:
                    log.append(StepRecord(ue_id, step, (x, y), serving, True, False))
                continue
            powers = cell_powers(deployment, (x, y))
            neighbor_rsrps = {c: float(powers[c - 1]) for c in all_cells if c != serving}
            timers, target = evaluate_a3(float(powers[serving - 1]), neighbor_rsrps, timers, a3)
            if target is not None:
                entries.append((serving, dwell))
                serving = target
                dwell = 1
                timers = {c: 0 for c in all_cells if c != serving}
            else:
                dwell += 1
            if log is not None:
                log.append(StepRecord(ue_id, step, (x, y), serving, False, target is not None))

        entries.append((serving, dwell))
        traces.append(MobilityTrace(ue_id=ue_id, entries=entries))

    return traces, log


# --- trace CSV -------------------------------------------------------------
#
# Cell traces: ue_id,seq_index,cell_id,dwell_steps (seq_index 0-based per
# trace segment; a 0 starts a new segment). Beam traces drop the dwell
# column: ue_id,seq_index,beam_id.

CELL_TRACE_HEADER = ["ue_id", "seq_index", "cell_id", "dwell_steps"]
BEAM_TRACE_HEADER = ["ue_id", "seq_index", "beam_id"]


def write_traces_csv(traces: Iterable[MobilityTrace], path, provenance: str | None = None) -> None:
    traces = list(traces)
    beam = any(t.kind == "beam" for t in traces)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if provenance:
            fh.write(f"# {provenance}\n")
        writer = csv.writer(fh)
        writer.writerow(BEAM_TRACE_HEADER if beam else CELL_TRACE_HEADER)
        for trace in traces:
            for idx, (ident, dwell) in enumerate(trace.entries):
                if beam:
                    writer.writerow([trace.ue_id, idx, ident])
                else:
                    writer.writerow([trace.ue_id, idx, ident, dwell])


def read_traces_csv(path) -> list[MobilityTrace]:
    """Read a trace CSV written by write_traces_csv.

    A seq_index of 0 opens a new trace segment. Beam-schema files yield
    beam-kind traces with dwell 1 per entry.
    """
    with open(path, encoding="utf-8") as fh:
        lines = [(n, ln.rstrip("\n")) for n, ln in enumerate(fh, start=1)]
    rows = [(n, ln) for n, ln in lines if ln and not ln.startswith("#")]
    if not rows:
        return []
    header_line_no, header = rows[0]
    cols = next(csv.reader([header]))
    if cols == CELL_TRACE_HEADER:
        beam = False
    elif cols == BEAM_TRACE_HEADER:
        beam = True
    else:
        raise ParseError(f"unrecognized trace header {cols!r}", line=header_line_no)
    traces: list[MobilityTrace] = []
    current: MobilityTrace | None = None
    for line_no, raw in rows[1:]:
        fields = next(csv.reader([raw]))
        if len(fields) != len(cols):
            raise ParseError(f"expected {len(cols)} fields, got {len(fields)}", line=line_no)
        try:
            ue_id = int(fields[0])
            seq_index = int(fields[1])
            ident = int(fields[2])
            dwell = 1 if beam else int(fields[3])
        except ValueError as exc:
            raise ParseError(str(exc), line=line_no) from exc
        if dwell < 1:
            raise ParseError(f"dwell must be >= 1, got {dwell}", line=line_no)
        if seq_index == 0:
            current = MobilityTrace(ue_id=ue_id, entries=[], kind="beam" if beam else "cell")
            traces.append(current)
        elif current is None or seq_index != len(current.entries) or ue_id != current.ue_id:
            raise ParseError(f"seq_index {seq_index} out of order", line=line_no)
        current.entries.append((ident, dwell))
    return traces
