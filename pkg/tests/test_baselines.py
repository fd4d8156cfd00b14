"""Tests for src.algorithms.baselines module."""

import math

import numpy as np
import pytest

from src.algorithms.baselines import (
    ArmStats,
    BanditPolicy,
    GaussianPrior,
    nonadaptive_run,
    run_policy,
    thompson_draw,
    ucb1_index,
)
from src.algorithms.records import mean_and_se
from src.mesh.candidates import FullSpace, UniformMesh


# ── Indices ──────────────────────────────────────────────────────────

class TestIndices:
    def test_ucb1(self):
        # mean 0.5, bonus sqrt(2 ln 10 / 2)
        assert ucb1_index(2, 1.0, 10) == pytest.approx(0.5 + math.sqrt(math.log(10)))

    def test_ucb1_constant(self):
        values = ucb1_index([2, 4], [1.0, 0.0], 7, 'ucb1_constant', c=1.0)
        np.testing.assert_allclose(values, [0.5 + 1 / math.sqrt(2), 0.5])

    def test_unpulled_arm_is_infinite(self):
        assert ucb1_index([0, 3], [0.0, 1.0], 3)[0] == math.inf

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            ucb1_index(1, 1.0, 2, 'kl_ucb')

    def test_gaussian_posterior(self):
        mean, variance = GaussianPrior(0.5, 1.0, 1.0).posterior(1, 1.5)
        assert mean == pytest.approx(1.0)
        assert variance == pytest.approx(0.5)

    def test_thompson_draw_shape(self):
        draws = thompson_draw(np.zeros(4), np.zeros(4), np.random.default_rng(0))
        assert draws.shape == (4,)
        assert isinstance(thompson_draw(0, 0.0, np.random.default_rng(0)), float)

    def test_arm_stats(self):
        stats = ArmStats(2)
        stats.update(1, 0.5)
        assert stats.t == 1
        assert stats.pulls.tolist() == [0, 1]


# ── Policies ─────────────────────────────────────────────────────────

class TestBanditPolicy:
    @pytest.fixture(autouse=True)
    def setup(self, sample_config):
        self.config = sample_config

    def test_unknown_policy(self):
        with pytest.raises(ValueError, match="Unknown policy"):
            BanditPolicy('epsilon_greedy', 3, self.config)

    def test_needs_an_arm(self):
        with pytest.raises(ValueError):
            BanditPolicy('ucb1', 0, self.config)

    def test_initialization_sweep(self):
        policy = BanditPolicy('ucb1', 3, self.config)
        chosen = run_policy(policy, lambda arm, rng: 0.0, 3, np.random.default_rng(0))
        assert chosen.tolist() == [0, 1, 2]

    @pytest.mark.parametrize("name", ['ucb1', 'ucb1_constant', 'thompson'])
    def test_finds_the_better_arm(self, name):
        policy = BanditPolicy(name, 2, self.config)
        rng = np.random.default_rng(1)
        chosen = run_policy(policy, lambda arm, r: float(r.random() < (0.8 if arm else 0.2)),
                            2000, rng)
        assert np.mean(chosen[-500:] == 1) > 0.8


# ── nonadaptive_run ──────────────────────────────────────────────────

class TestNonadaptiveRun:
    @pytest.fixture(autouse=True)
    def setup(self, sample_config, identity_pricing):
        self.config = sample_config
        self.env = identity_pricing

    def test_record(self):
        record = nonadaptive_run(self.env, UniformMesh(0.1), 'ucb1', 100, seed=0,
                                 custom_config=self.config)
        assert len(record.logs) == 100
        assert record.metadata['arms'] == 11
        assert {log.anchor for log in record.logs} == {'arm'}
        # the first sweep plays every arm once
        assert len({log.increments for log in record.logs[:11]}) == 11

    def test_deterministic(self):
        a = nonadaptive_run(self.env, UniformMesh(0.1), 'thompson', 80, seed=3,
                            custom_config=self.config)
        b = nonadaptive_run(self.env, UniformMesh(0.1), 'thompson', 80, seed=3,
                            custom_config=self.config)
        assert a.to_frame().equals(b.to_frame())

    def test_infinite_candidates_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            nonadaptive_run(self.env, FullSpace(depth_cap=5), 'ucb1', 10,
                            custom_config=self.config)

    def test_converges_near_opt(self):
        record = nonadaptive_run(self.env, UniformMesh(0.25), 'ucb1_constant', 3000, seed=2,
                                 custom_config=self.config)
        assert record.window_average(0.3) == pytest.approx(0.25, abs=0.05)

    @pytest.mark.parametrize("policy", ['ucb1_constant', 'thompson'])
    def test_seed_families_agree(self, policy):
        def family(start):
            return [nonadaptive_run(self.env, UniformMesh(0.1), policy, 150, seed=s,
                                    custom_config=self.config)
                    for s in range(start, start + 50)]

        first, second = family(0), family(1000)
        # each seed deals the arms in its own order
        assert len({r.logs[0].increments for r in first}) > 3
        m1, se1 = mean_and_se([r.time_averaged_utility for r in first])
        m2, se2 = mean_and_se([r.time_averaged_utility for r in second])
        assert abs(m1 - m2) <= 3 * math.hypot(se1, se2)
