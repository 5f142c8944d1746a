"""Windowing, feature encoding, splitting, and beam trace handling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hoseq import (
    MobilityTrace,
    ParseError,
    SplitError,
    TaskKind,
    TaskSpec,
    VocabularyError,
    build_dataset,
    build_windows,
    encode_features,
    ingest_beam_trace,
    read_beam_log_csv,
    split_dataset,
    synth_beam_traces,
    write_beam_log_csv,
)
from hoseq.dataset import BeamTraceFile, encode_dataset, raw_dwell_labels


def _trace(ids, dwells=None, kind="cell"):
    dwells = dwells or [1] * len(ids)
    return MobilityTrace(0, list(zip(ids, dwells)), kind=kind)


CELL5 = TaskSpec(TaskKind.CELL_TO_CELL, history_len=3, horizon=1, vocab_size=5)


class TestBuildWindows:
    def test_enumerates_stride_one(self):
        windows = build_windows(_trace([1, 2, 3, 4, 5]), CELL5)
        assert [(w.history_ids, w.label_ids) for w in windows] == [
            ((1, 2, 3), (4,)),
            ((2, 3, 4), (5,)),
        ]

    def test_too_short_trace_yields_nothing(self):
        task = TaskSpec(TaskKind.CELL_TO_CELL, 3, 2, 5)
        assert build_windows(_trace([1, 2, 3, 4]), task) == []

    def test_two_step_horizon(self):
        task = TaskSpec(TaskKind.CELL_TO_CELL, 3, 2, 5)
        windows = build_windows(_trace([1, 2, 3, 4, 5]), task)
        assert len(windows) == 1
        assert windows[0].history_ids == (1, 2, 3)
        assert windows[0].label_ids == (4, 5)

    def test_out_of_vocabulary_id(self):
        with pytest.raises(VocabularyError):
            build_windows(_trace([1, 2, 9]), CELL5)

    @given(
        t=st.integers(min_value=0, max_value=40),
        n=st.integers(min_value=1, max_value=8),
        k=st.integers(min_value=1, max_value=4),
    )
    @settings(max_examples=120, deadline=None)
    def test_window_count_formula(self, t, n, k):
        ids = [(i % 5) + 1 for i in range(t)]
        # avoid consecutive repeats only for realism; formula holds anyway
        task = TaskSpec(TaskKind.CELL_TO_CELL, n, k, 5)
        windows = build_windows(_trace(ids), task)
        assert len(windows) == max(0, t - n - k + 1)

    def test_dwell_task_windows_carry_dwells(self):
        task = TaskSpec(TaskKind.CELL_DWELL_TO_DWELL, 2, 1, 5)
        windows = build_windows(_trace([1, 2, 3], dwells=[4, 6, 9]), task)
        assert windows[0].history_dwells == (4, 6)
        assert windows[0].label_dwells == (9,)
        assert windows[0].label_ids is None


class TestEncodeFeatures:
    def test_one_hot(self):
        task = TaskSpec(TaskKind.CELL_TO_CELL, 1, 1, 4)
        mat = encode_features([2], None, task)
        assert mat.tolist() == [[0.0, 1.0, 0.0, 0.0]]

    def test_one_hot_with_scaled_dwell(self):
        task = TaskSpec(TaskKind.CELL_DWELL_TO_CELL, 1, 1, 4)
        mat = encode_features([2], [7], task, dwell_scale=(0.0, 10.0))
        assert mat.tolist() == [[0.0, 1.0, 0.0, 0.0, 0.7]]

    def test_rejects_out_of_range_id(self):
        task = TaskSpec(TaskKind.CELL_TO_CELL, 1, 1, 4)
        with pytest.raises(VocabularyError):
            encode_features([5], None, task)

    def test_dwell_clamped_to_unit_interval(self):
        task = TaskSpec(TaskKind.CELL_DWELL_TO_CELL, 2, 1, 4)
        mat = encode_features([1, 2], [99, -5], task, dwell_scale=(0.0, 10.0))
        assert mat[0, 4] == 1.0
        assert mat[1, 4] == 0.0

    @given(st.lists(st.integers(min_value=1, max_value=6), min_size=1, max_size=10))
    @settings(max_examples=60, deadline=None)
    def test_rows_sum_to_one_and_argmax_decodes(self, ids):
        task = TaskSpec(TaskKind.CELL_TO_CELL, len(ids), 1, 6)
        mat = encode_features(ids, None, task)
        assert np.allclose(mat.sum(axis=1), 1.0)
        assert [int(i) + 1 for i in mat.argmax(axis=1)] == ids


class TestSplit:
    def _dataset(self, n_windows):
        ids = [(i % 4) + 1 for i in range(n_windows + 3)]
        return build_dataset([_trace(ids)], TaskSpec(TaskKind.CELL_TO_CELL, 3, 1, 4))

    def test_counts_80_20(self):
        ds = self._dataset(10)
        assert len(ds.windows) == 10
        train, val = split_dataset(ds, 0.8, seed=1)
        assert len(train.windows) == 8
        assert len(val.windows) == 2

    def test_same_seed_same_split(self):
        ds = self._dataset(20)
        a = split_dataset(ds, 0.7, seed=5)
        b = split_dataset(ds, 0.7, seed=5)
        assert a[0].windows == b[0].windows
        assert a[1].windows == b[1].windows

    def test_single_window_is_error(self):
        ds = self._dataset(1)
        with pytest.raises(SplitError):
            split_dataset(ds, 0.8, seed=0)

    @given(
        n=st.integers(min_value=2, max_value=60),
        frac=st.floats(min_value=0.05, max_value=0.95),
        seed=st.integers(min_value=0, max_value=2**16),
    )
    @settings(max_examples=80, deadline=None)
    def test_disjoint_covering_partition(self, n, frac, seed):
        ds = self._dataset(n)
        train, val = split_dataset(ds, frac, seed)
        assert len(train.windows) + len(val.windows) == n
        assert len(train.windows) >= 1 and len(val.windows) >= 1
        combined = sorted(
            (w.history_ids, w.label_ids) for w in train.windows + val.windows
        )
        original = sorted((w.history_ids, w.label_ids) for w in ds.windows)
        assert combined == original

    def test_dwell_scale_comes_from_train_only(self):
        task = TaskSpec(TaskKind.CELL_DWELL_TO_DWELL, 1, 1, 4)
        ids = [1, 2, 3, 4, 1, 2, 3, 4]
        dwells = [1, 2, 3, 4, 5, 6, 7, 8]
        ds = build_dataset([_trace(ids, dwells)], task)
        train, val = split_dataset(ds, 0.6, seed=3)
        values = [d for w in train.windows for d in (w.history_dwells + w.label_dwells)]
        assert train.dwell_scale == (min(values), max(values))
        assert val.dwell_scale == train.dwell_scale


class TestBeamLog:
    def test_collapses_consecutive_duplicates(self, tmp_path):
        path = tmp_path / "log.csv"
        path.write_text(
            "timestamp,ue_id,beam_id\n1.0,1,5\n2.0,1,5\n3.0,1,9\n"
        )
        traces = ingest_beam_trace(read_beam_log_csv(path, n_beams=68))
        assert len(traces) == 1
        assert traces[0].entries == [(5, 2), (9, 1)]
        assert traces[0].kind == "beam"

    def test_empty_file_empty_collection(self, tmp_path):
        path = tmp_path / "log.csv"
        path.write_text("")
        assert ingest_beam_trace(read_beam_log_csv(path, n_beams=68)) == []

    def test_beam_out_of_range_is_parse_error_with_line(self, tmp_path):
        path = tmp_path / "log.csv"
        path.write_text("timestamp,ue_id,beam_id\n1.0,1,69\n")
        with pytest.raises(ParseError) as err:
            read_beam_log_csv(path, n_beams=68)
        assert err.value.line == 2

    def test_malformed_row_reports_line(self, tmp_path):
        path = tmp_path / "log.csv"
        path.write_text("timestamp,ue_id,beam_id\n1.0,1,5\nnot,a\n")
        with pytest.raises(ParseError) as err:
            read_beam_log_csv(path, n_beams=68)
        assert err.value.line == 3

    def test_unsorted_rows_are_time_ordered_per_ue(self):
        log = BeamTraceFile(rows=((3.0, 1, 9), (1.0, 1, 5), (2.0, 1, 5)), n_beams=68)
        traces = ingest_beam_trace(log)
        assert traces[0].entries == [(5, 2), (9, 1)]

    def test_export_then_ingest_is_identity(self, tmp_path):
        traces = [
            MobilityTrace(1, [(5, 3), (9, 1), (5, 2)], kind="beam"),
            MobilityTrace(2, [(7, 1), (8, 4)], kind="beam"),
        ]
        path = tmp_path / "log.csv"
        write_beam_log_csv(traces, path)
        back = ingest_beam_trace(read_beam_log_csv(path, n_beams=68))
        assert [(t.ue_id, t.entries) for t in back] == [(t.ue_id, t.entries) for t in traces]


class TestSynthBeams:
    def test_deterministic_per_seed(self):
        a = synth_beam_traces(4, 100, 68, drift=0.0, seed=9)
        b = synth_beam_traces(4, 100, 68, drift=0.0, seed=9)
        assert [(t.ue_id, t.entries) for t in a] == [(t.ue_id, t.entries) for t in b]

    def test_zero_noise_gives_one_canonical_path(self):
        traces = synth_beam_traces(3, 68, 68, drift=0.0, seed=2, noise=0.0)
        paths = {tuple(t.ids()) for t in traces}
        assert len(paths) == 1
        assert sorted(traces[0].ids()) == list(range(1, 69))  # a full permutation

    def test_drift_grows_transition_distance(self):
        # empirical transition-matrix total-variation distance from the
        # drift-free process must increase with the drift parameter
        def transition_matrix(traces, p):
            counts = np.zeros((p, p))
            for t in traces:
                ids = t.ids()
                for a, b in zip(ids, ids[1:]):
                    counts[a - 1, b - 1] += 1
            rows = counts.sum(axis=1, keepdims=True)
            rows[rows == 0] = 1
            return counts / rows

        p = 68
        base = transition_matrix(synth_beam_traces(30, 300, p, 0.0, seed=4), p)
        small = transition_matrix(synth_beam_traces(30, 300, p, 0.15, seed=4), p)
        large = transition_matrix(synth_beam_traces(30, 300, p, 0.9, seed=4), p)
        tv_small = 0.5 * np.abs(base - small).sum(axis=1).mean()
        tv_large = 0.5 * np.abs(base - large).sum(axis=1).mean()
        assert tv_large > tv_small > 0


class TestEncodeDataset:
    def test_classification_arrays(self):
        ds = build_dataset([_trace([1, 2, 3, 4, 1, 2])], CELL5)
        x, y = encode_dataset(ds)
        assert x.shape == (3, 3, 5)
        assert y.tolist() == [[3], [0], [1]]  # zero-based targets

    def test_dwell_arrays_scaled_and_recoverable(self):
        task = TaskSpec(TaskKind.CELL_DWELL_TO_DWELL, 2, 1, 5)
        ds = build_dataset([_trace([1, 2, 3, 4], dwells=[2, 4, 6, 10])], task)
        x, y = encode_dataset(ds)
        assert x.shape == (2, 2, 6)
        lo, hi = ds.dwell_scale
        raw = raw_dwell_labels(ds)
        assert np.allclose(y * (hi - lo) + lo, np.clip(raw, lo, hi))
