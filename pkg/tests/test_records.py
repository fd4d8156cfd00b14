"""Tests for src.algorithms.records module."""

import pytest

from src.algorithms.records import LOG_COLUMNS, RoundLog, RunRecord, mean_and_se, records_frame


def make_record(utilities, run_id=0, policy='zooming'):
    record = RunRecord(run_id=run_id, policy=policy, horizon=len(utilities), m=1)
    for t, u in enumerate(utilities, start=1):
        record.append(RoundLog(t=t, cell='0:(0)', anchor='+', increments=(0.5,),
                               outcome=int(u > 0), value=max(u, 0.0) + 0.5,
                               payment=0.5, utility=u, zoomed=False, active_cell_count=1))
    return record


class TestRunRecord:
    def test_averages(self):
        record = make_record([1.0, 0.0, 0.5, 0.5])
        assert record.cumulative_utility == pytest.approx(2.0)
        assert record.time_averaged_utility == pytest.approx(0.5)

    def test_empty_record(self):
        assert make_record([]).time_averaged_utility == 0.0

    def test_running_average_skips_unplayed_checkpoints(self):
        record = make_record([1.0, 0.0, 0.5, 0.5])
        assert record.running_average([1, 2, 4, 10]) == {1: 1.0, 2: 0.5, 4: 0.5}

    def test_window_average(self):
        record = make_record([0.0] * 9 + [1.0])
        assert record.window_average(0.1) == pytest.approx(1.0)
        assert record.window_average(0.2) == pytest.approx(0.5)

    def test_posted_increments_shape(self):
        assert make_record([0.1, 0.2]).posted_increments().shape == (2, 1)

    def test_frame_schema(self):
        frame = make_record([0.1, 0.2], policy='ucb1').to_frame()
        assert list(frame.columns) == LOG_COLUMNS
        assert frame['policy'].tolist() == ['ucb1', 'ucb1']
        assert frame['zoomed'].tolist() == [0, 0]

    def test_summary(self):
        summary = make_record([0.25, 0.75]).summary()
        assert summary['rounds'] == 2
        assert summary['time_averaged_utility'] == pytest.approx(0.5)


class TestHelpers:
    def test_mean_and_se(self):
        mean, se = mean_and_se([1.0, 3.0])
        assert mean == 2.0
        assert se == pytest.approx(1.0)

    def test_single_value_has_zero_se(self):
        assert mean_and_se([4.0]) == (4.0, 0.0)

    def test_records_frame_sorted_by_run(self):
        frame = records_frame([make_record([0.1], run_id=2), make_record([0.2], run_id=1)],
                              {'delta': 0.08})
        assert frame['run_id'].tolist() == [1, 2]
        assert (frame['delta'] == 0.08).all()

    def test_records_frame_empty(self):
        assert list(records_frame([]).columns) == LOG_COLUMNS
