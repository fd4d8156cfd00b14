"""Tests for src.envs.markets module."""

import numpy as np
import pytest

from src.envs.markets import (
    build_environment,
    linear_demand,
    make_homogeneous_market,
    make_nonmonotone_example,
    make_piecewise_uniform_taskpricing,
    make_staircase_instance,
    make_two_type_market,
    staircase_knots,
)
from src.envs.supply import FiniteMixture, HighLowParametric, InventoryDemand, TaskPricingCurve
from src.model.contracts import Contract
from src.model.worker import validate_type


# ── High-low markets ─────────────────────────────────────────────────

class TestHighLowMarkets:
    @pytest.fixture(autouse=True)
    def setup(self, sample_config):
        self.config = sample_config

    def test_homogeneous(self):
        env = make_homogeneous_market(0.3, self.config)
        assert isinstance(env, FiniteMixture)
        assert len(env.types) == 1
        assert env.outcomes.values == (0.0, 0.3, 1.0)

    def test_homogeneous_cost_out_of_range(self):
        with pytest.raises(ValueError):
            make_homogeneous_market(1.5, self.config)

    def test_two_type_weights(self):
        env = make_two_type_market(0.2, 0.7, self.config)
        np.testing.assert_allclose(env.weights, [0.5, 0.5])
        assert [w.costs[2] for w in env.types] == [0.2, 0.7]


# ── Task pricing ─────────────────────────────────────────────────────

class TestTaskPricing:
    @pytest.fixture(autouse=True)
    def setup(self, sample_config):
        self.config = sample_config

    def test_piecewise_uniform_cdf(self):
        env = make_piecewise_uniform_taskpricing([0.0, 0.5, 1.0], [1.5, 0.5],
                                                 custom_config=self.config)
        assert float(env.curve(0.5)) == pytest.approx(0.75)
        assert float(env.curve(0.75)) == pytest.approx(0.875)

    def test_densities_must_integrate_to_one(self):
        with pytest.raises(ValueError, match="integrate"):
            make_piecewise_uniform_taskpricing([0.0, 0.5, 1.0], [1.0, 0.5],
                                               custom_config=self.config)

    def test_lambda_bound(self):
        with pytest.raises(ValueError, match="lambda"):
            make_piecewise_uniform_taskpricing([0.0, 0.5, 1.0], [1.5, 0.5], lam=1.5,
                                               custom_config=self.config)

    def test_breakpoints_must_span_unit_interval(self):
        with pytest.raises(ValueError):
            make_piecewise_uniform_taskpricing([0.1, 1.0], [1.0], custom_config=self.config)


# ── Staircase ────────────────────────────────────────────────────────

class TestStaircase:
    @pytest.fixture(autouse=True)
    def setup(self, sample_config):
        self.config = sample_config

    def test_comb_and_peak(self):
        env = make_staircase_instance(0.01, self.config)
        _, _, p_star = staircase_knots(0.01)
        assert p_star == pytest.approx(0.485)
        assert env.exact_breakdown(Contract((0.4,))).utility == pytest.approx(0.25)
        assert env.exact_breakdown(Contract((p_star,))).utility == pytest.approx(0.2525)

    def test_curve_is_non_decreasing(self):
        xs, ys, _ = staircase_knots(0.02)
        assert np.all(np.diff(xs) > 0)
        assert np.all(np.diff(ys) >= 0)

    def test_delta_out_of_range(self):
        with pytest.raises(ValueError, match="1/20"):
            make_staircase_instance(0.1, self.config)


# ── Non-monotone example ─────────────────────────────────────────────

class TestNonmonotone:
    def test_type_is_valid(self, sample_config):
        env = make_nonmonotone_example(0.2, custom_config=sample_config)
        assert validate_type(env.types[0]).ok
        assert env.types[0].tiebreak_order == (2, 1, 0)

    def test_cost_bound(self, sample_config):
        with pytest.raises(ValueError, match="cost_h"):
            make_nonmonotone_example(0.4, custom_config=sample_config)


# ── build_environment ────────────────────────────────────────────────

class TestBuildEnvironment:
    @pytest.fixture(autouse=True)
    def setup(self, sample_config):
        self.config = sample_config

    def test_uniform(self):
        env = build_environment({'market': 'uniform'}, custom_config=self.config)
        assert isinstance(env, HighLowParametric)
        assert env.theta_h == 0.8

    def test_uniform_with_theta_distribution(self):
        env = build_environment({'market': 'uniform', 'theta_dist': [0.5, 1.0]},
                                custom_config=self.config)
        assert env.theta_dist is not None

    def test_null_cost_is_drawn(self):
        rng = np.random.default_rng(0)
        env = build_environment({'market': 'homogeneous', 'cost_h': None}, rng, self.config)
        assert 0 <= env.types[0].costs[2] <= 1

    def test_null_cost_needs_rng(self):
        with pytest.raises(ValueError, match="market stream"):
            build_environment({'market': 'homogeneous'}, None, self.config)

    def test_same_stream_same_market(self):
        spec = {'market': 'two_type'}
        a = build_environment(spec, np.random.default_rng(9), self.config)
        b = build_environment(spec, np.random.default_rng(9), self.config)
        assert [w.costs[2] for w in a.types] == [w.costs[2] for w in b.types]

    def test_named_kinds(self):
        assert isinstance(build_environment({'market': 'taskpricing'}, custom_config=self.config),
                          TaskPricingCurve)
        assert isinstance(build_environment({'market': 'staircase', 'delta': 0.02},
                                            custom_config=self.config), TaskPricingCurve)
        assert isinstance(build_environment({'market': 'inventory'}, custom_config=self.config),
                          InventoryDemand)
        assert isinstance(build_environment({'market': 'nonmonotone'}, custom_config=self.config),
                          FiniteMixture)

    def test_model_document(self):
        document = {'values': [0, 1],
                    'types': [{'weight': 1.0, 'costs': [0, 0.2], 'production': [[1, 0], [0, 1]]}]}
        env = build_environment(document, custom_config=self.config)
        assert env.exact_breakdown(Contract((0.5,))).utility == pytest.approx(0.5)

    def test_unknown_market(self):
        with pytest.raises(ValueError, match="Unknown market"):
            build_environment({'market': 'bazaar'}, custom_config=self.config)

    def test_linear_demand(self):
        assert float(linear_demand()(0.25)) == pytest.approx(0.75)
