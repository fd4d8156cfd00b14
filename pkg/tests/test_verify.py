"""Tests for src.experiments.verify module."""

import copy
import json

import pytest

import src.algorithms.zooming as zooming
from src.experiments.verify import (
    GOLDEN_FILE,
    SUITES,
    VerifyContext,
    cmd_verify,
    golden_digest,
    suite_high_low_identity,
    suite_nonmonotone,
    suite_ucb_sanity,
    v_low_zero_markets,
)
from src.utils.helpers import load_config


# ── Selection ────────────────────────────────────────────────────────

class TestSelection:
    @pytest.fixture(autouse=True)
    def setup(self, sample_config, tmp_path):
        self.config = sample_config
        self.out = tmp_path

    def test_empty_selection(self):
        with pytest.raises(ValueError, match="no suites selected"):
            cmd_verify([], self.config, str(self.out))

    def test_unknown_suite(self):
        with pytest.raises(ValueError, match="Unknown suites: warp"):
            cmd_verify(['nonmonotone', 'warp'], self.config, str(self.out))

    def test_suite_order(self):
        assert list(SUITES)[0] == 'width_bound'
        assert list(SUITES)[-1] == 'golden'
        assert len(SUITES) == 13

    def test_verdicts_written(self):
        report = cmd_verify(['nonmonotone', 'high_low_identity'], self.config, str(self.out))
        assert report.passed
        verdicts = json.loads((self.out / 'verify' / 'verdicts.json').read_text())
        assert verdicts['passed'] is True
        assert [s['name'] for s in verdicts['suites']] == ['nonmonotone', 'high_low_identity']


# ── Individual suites ────────────────────────────────────────────────

class TestSuites:
    @pytest.fixture(autouse=True)
    def setup(self, sample_config, tmp_path):
        self.ctx = VerifyContext(sample_config, str(tmp_path))

    def test_nonmonotone(self):
        verdict = suite_nonmonotone(self.ctx)
        assert verdict.passed
        assert verdict.details['gap'] == pytest.approx(0.1, abs=0.01)

    def test_high_low_identity(self):
        verdict = suite_high_low_identity(self.ctx)
        assert verdict.passed
        assert verdict.details['tolerance'] == 1.0e-9

    def test_ucb_sanity(self):
        verdict = suite_ucb_sanity(self.ctx)
        assert verdict.passed
        assert verdict.details['mean_regret'] < verdict.details['bound']

    def test_v_low_zero_markets(self, sample_config):
        markets = v_low_zero_markets(sample_config)
        assert len(markets) == 3
        assert all(env.outcomes.values[1] == 0.0 for env in markets)

    def test_relative_golden_dir_is_rooted_at_the_project(self, sample_config):
        ctx = VerifyContext(sample_config)
        assert ctx.golden_dir.is_absolute()
        assert ctx.golden_dir.parts[-2:] == ('tests', 'golden')


# ── Golden run ───────────────────────────────────────────────────────

class TestGolden:
    @pytest.fixture(autouse=True)
    def setup(self, sample_config, tmp_path):
        self.config = sample_config
        self.out = tmp_path / 'results'
        self.golden = tmp_path / 'golden'

    def verify(self):
        report = cmd_verify(['golden'], self.config, str(self.out), str(self.golden))
        return report.verdicts[0]

    def test_digest_is_stable(self):
        assert golden_digest(self.config) == golden_digest(self.config)

    def test_record_then_compare(self):
        first = self.verify()
        assert first.passed and first.details['recorded']
        assert (self.golden / GOLDEN_FILE).read_text().strip() == first.details['digest']
        second = self.verify()
        assert second.passed and not second.details['recorded']

    def test_clamped_width_estimate_is_caught(self, monkeypatch):
        self.verify()
        original = zooming.virtual_width_estimate
        monkeypatch.setattr(zooming, 'virtual_width_estimate',
                            lambda stats, anchors, cfg: min(original(stats, anchors, cfg), 0.05))
        verdict = self.verify()
        assert not verdict.passed
        assert verdict.details['digest'] != verdict.details['expected']


# ── Full battery ─────────────────────────────────────────────────────

@pytest.mark.slow
class TestFullBattery:
    @pytest.fixture(autouse=True)
    def setup(self, sample_config, tmp_path):
        # small sizes everywhere except the delta sweep, which runs at the configured scale
        self.config = copy.deepcopy(sample_config)
        defaults = load_config()['verify']
        for key in ('sweep_runs', 'sweep_horizon', 'sweep_deltas'):
            self.config['verify'][key] = defaults[key]
        self.tmp = tmp_path

    def test_all_suites_pass(self):
        report = cmd_verify(None, self.config, str(self.tmp / 'results'), str(self.tmp / 'golden'))
        failed = {v.name for v in report.verdicts if not v.passed}
        assert failed == set()
        assert len(report.verdicts) == len(SUITES)

        sweep = next(v for v in report.verdicts if v.name == 'delta_sweep')
        rows = {row['delta']: row for row in sweep.details['rows']}
        assert sorted(rows) == [0.02, 0.08, 0.2]
        assert rows[0.02]['zooming_mean'] > rows[0.02]['ucb1_constant_mean']
        assert rows[0.08]['zooming_mean'] > 0.3

    @pytest.mark.parametrize("name", ['width_bound', 'inventory_width', 'discretization',
                                      'invariants', 'regret_identity', 'census',
                                      'width_spot'])
    def test_suite(self, name, sample_config, tmp_path):
        report = cmd_verify([name], sample_config, str(tmp_path))
        assert report.passed
