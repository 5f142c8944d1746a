"""UE motion, the A3 state machine, and simulation traces."""

import numpy as np
import pytest

from hoseq import (
    A3Config,
    AreaConfig,
    BaseStation,
    Deployment,
    MobilityConfig,
    MobilityTrace,
    RadioConfig,
    UeState,
    best_cell,
    evaluate_a3,
    read_traces_csv,
    run_simulation,
    run_simulation_logged,
    step_ue,
    write_traces_csv,
)

AREA = AreaConfig(1000, 1000)


def _ue(pos=(0.0, 0.0), heading=0.0):
    return UeState(position=pos, heading_deg=heading, serving_cell=1, dwell_counter=1)


class TestStepUe:
    def test_straight_line_advance(self):
        rng = np.random.default_rng(0)
        ue = step_ue(_ue(), MobilityConfig(speed=5.0), AREA, rng)
        assert ue.position[0] == pytest.approx(5.0)
        assert ue.position[1] == pytest.approx(0.0)
        assert ue.heading_deg == 0.0

    def test_zero_speed_stays_put(self):
        rng = np.random.default_rng(0)
        ue = step_ue(_ue(pos=(3.0, 4.0), heading=77.0), MobilityConfig(speed=0.0), AREA, rng)
        assert ue.position == (3.0, 4.0)

    def test_relocation_lands_inside_and_is_seeded(self):
        start = _ue(pos=(999.0, 500.0), heading=0.0)  # moving out through the east wall
        a = step_ue(start, MobilityConfig(speed=5.0), AREA, np.random.default_rng(42))
        b = step_ue(start, MobilityConfig(speed=5.0), AREA, np.random.default_rng(42))
        assert AREA.contains(*a.position)
        assert a.position != start.position
        assert a.position == b.position and a.heading_deg == b.heading_deg


class TestEvaluateA3:
    def test_fires_on_second_qualifying_report(self):
        # hysteresis 3 dB, time-to-trigger 1 step: neighbor at -75 vs serving -80
        a3 = A3Config(hysteresis_db=3.0, time_to_trigger_steps=1)
        timers, target = evaluate_a3(-80.0, {2: -75.0}, {2: 0}, a3)
        assert target is None and timers == {2: 1}
        timers, target = evaluate_a3(-80.0, {2: -75.0}, timers, a3)
        assert target == 2
        assert all(t == 0 for t in timers.values())

    def test_timer_resets_when_condition_breaks(self):
        a3 = A3Config(hysteresis_db=3.0, time_to_trigger_steps=1)
        timers, target = evaluate_a3(-80.0, {2: -75.0}, {2: 0}, a3)
        assert timers == {2: 1}
        timers, target = evaluate_a3(-80.0, {2: -79.0}, timers, a3)
        assert target is None and timers == {2: 0}

    def test_unreachable_hysteresis_never_fires(self):
        a3 = A3Config(hysteresis_db=1e9, time_to_trigger_steps=0)
        timers = {2: 0, 3: 0}
        for _ in range(50):
            timers, target = evaluate_a3(-80.0, {2: -10.0, 3: -5.0}, timers, a3)
            assert target is None

    def test_strongest_neighbor_wins_simultaneous_triggers(self):
        a3 = A3Config(hysteresis_db=0.0, time_to_trigger_steps=0)
        _, target = evaluate_a3(-90.0, {2: -70.0, 3: -60.0, 4: -60.0}, {}, a3)
        assert target == 3  # strongest, tie with 4 broken by lower ID


def _grid_deployment(n_side=4, spacing=250.0, radio=None):
    radio = radio or RadioConfig(front_back_ratio_db=1e-9)  # near-isotropic gain
    stations = []
    for j in range(n_side):
        for i in range(n_side):
            stations.append(
                BaseStation(
                    cell_id=j * n_side + i + 1,
                    position=(spacing / 2 + i * spacing, spacing / 2 + j * spacing),
                    sector_orientations=(0.0,),
                )
            )
    return Deployment(area=AREA, radio=radio, stations=tuple(stations), seed=0)


class TestRunSimulation:
    def test_no_handover_single_entry(self):
        dep = _grid_deployment()
        a3 = A3Config(hysteresis_db=1e9, time_to_trigger_steps=0)
        traces = run_simulation(dep, 1, 10, MobilityConfig(speed=0.5), a3, seed=5)
        assert len(traces) == 1
        assert len(traces[0].entries) == 1
        assert traces[0].entries[0][1] == 10

    def test_two_station_line_crossing(self):
        # isotropic two-station deployment: handover exactly once, when the
        # UE crosses into the other half, and the dwells add up to n_steps
        radio = RadioConfig(front_back_ratio_db=1e-9)
        stations = (
            BaseStation(1, (250.0, 500.0), (0.0,)),
            BaseStation(2, (750.0, 500.0), (0.0,)),
        )
        dep = Deployment(area=AREA, radio=radio, stations=stations, seed=0)
        a3 = A3Config(hysteresis_db=0.0, time_to_trigger_steps=0)
        # scan seeds for a run that crosses the midline without relocating
        for seed in range(100):
            traces, log = run_simulation_logged(dep, 1, 60, MobilityConfig(5.0), a3, seed=seed)
            if any(r.relocated for r in log):
                continue
            if len(traces) == 1 and len(traces[0].entries) == 2:
                entries = traces[0].entries
                assert {entries[0][0], entries[1][0]} == {1, 2}
                assert entries[0][1] + entries[1][1] == 60
                # serving cell always equals the closer station
                for rec in log:
                    d1 = np.hypot(rec.position[0] - 250.0, rec.position[1] - 500.0)
                    d2 = np.hypot(rec.position[0] - 750.0, rec.position[1] - 500.0)
                    expected = 1 if d1 < d2 else 2
                    assert rec.serving_cell == expected
                return
        pytest.fail("no seed produced a clean single crossing")

    def test_dwell_sums_equal_steps(self):
        dep = _grid_deployment()
        traces = run_simulation(dep, 5, 400, MobilityConfig(5.0), A3Config(2.0, 1), seed=9)
        for ue in range(5):
            total = sum(d for t in traces if t.ue_id == ue for _, d in t.entries)
            assert total == 400

    def test_consecutive_entries_distinct(self):
        dep = _grid_deployment()
        traces = run_simulation(dep, 5, 400, MobilityConfig(5.0), A3Config(0.0, 0), seed=9)
        for t in traces:
            ids = t.ids()
            assert all(a != b for a, b in zip(ids, ids[1:]))

    def test_same_seed_bit_identical(self):
        dep = _grid_deployment()
        a = run_simulation(dep, 3, 300, MobilityConfig(5.0), A3Config(2.0, 1), seed=11)
        b = run_simulation(dep, 3, 300, MobilityConfig(5.0), A3Config(2.0, 1), seed=11)
        assert [(t.ue_id, t.entries) for t in a] == [(t.ue_id, t.entries) for t in b]

    def test_degenerate_a3_tracks_best_cell(self):
        dep = _grid_deployment()
        a3 = A3Config(hysteresis_db=0.0, time_to_trigger_steps=0)
        _, log = run_simulation_logged(dep, 2, 200, MobilityConfig(5.0), a3, seed=3)
        for rec in log:
            assert rec.serving_cell == best_cell(dep, rec.position)[0]

    def test_handover_requires_ttt_plus_one_reports(self):
        # instrumented check: count consecutive qualifying reports per target
        dep = _grid_deployment()
        a3 = A3Config(hysteresis_db=2.0, time_to_trigger_steps=3)
        from hoseq.radio import cell_powers

        _, log = run_simulation_logged(dep, 3, 400, MobilityConfig(5.0), a3, seed=21)
        by_ue = {}
        for rec in log:
            by_ue.setdefault(rec.ue_id, []).append(rec)
        for records in by_ue.values():
            streak: dict[int, int] = {}
            prev_serving = records[0].serving_cell
            for rec in records[1:]:
                if rec.relocated:
                    streak = {}
                    prev_serving = rec.serving_cell
                    continue
                powers = cell_powers(dep, rec.position)
                serving_power = powers[prev_serving - 1]
                for cell in range(1, dep.n_cells + 1):
                    if cell == prev_serving:
                        continue
                    if powers[cell - 1] > serving_power + a3.hysteresis_db:
                        streak[cell] = streak.get(cell, 0) + 1
                    else:
                        streak[cell] = 0
                if rec.handover:
                    assert streak.get(rec.serving_cell, 0) >= a3.time_to_trigger_steps + 1
                    streak = {}
                prev_serving = rec.serving_cell
            assert True

    def test_empty_deployment_propagates(self):
        with pytest.raises(Exception):
            Deployment(area=AREA, radio=RadioConfig(), stations=(), seed=0)


class TestTraceCsv:
    def test_cell_round_trip(self, tmp_path):
        traces = [
            MobilityTrace(0, [(1, 5), (2, 3)]),
            MobilityTrace(0, [(4, 2)]),
            MobilityTrace(1, [(2, 7), (5, 1), (2, 4)]),
        ]
        path = tmp_path / "traces.csv"
        write_traces_csv(traces, path, provenance="provenance: test")
        loaded = read_traces_csv(path)
        assert [(t.ue_id, t.entries, t.kind) for t in loaded] == [
            (t.ue_id, t.entries, t.kind) for t in traces
        ]

    def test_beam_schema_drops_dwell(self, tmp_path):
        traces = [MobilityTrace(3, [(9, 2), (5, 1)], kind="beam")]
        path = tmp_path / "beams.csv"
        write_traces_csv(traces, path)
        text = path.read_text()
        assert text.splitlines()[0] == "ue_id,seq_index,beam_id"
        loaded = read_traces_csv(path)
        assert loaded[0].kind == "beam"
        assert loaded[0].ids() == [9, 5]
