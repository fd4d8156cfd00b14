"""Tests for src.envs.supply module."""

import numpy as np
import pytest
from scipy import stats

from src.envs.supply import (
    FiniteMixture,
    HighLowParametric,
    InventoryDemand,
    PiecewiseLinearCurve,
    RoundOutcome,
    TaskPricingCurve,
    exact_utility,
    play_round,
    uniform_cost,
)
from src.model.contracts import Contract, OutcomeSpace
from src.model.worker import high_low_type


# ── PiecewiseLinearCurve ─────────────────────────────────────────────

class TestPiecewiseLinearCurve:
    def test_interpolates(self):
        curve = PiecewiseLinearCurve([0.0, 0.5, 1.0], [0.0, 0.2, 1.0])
        assert curve(0.25) == pytest.approx(0.1)
        assert curve(0.75) == pytest.approx(0.6)

    def test_non_increasing_knots_raise(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            PiecewiseLinearCurve([0.0, 0.5, 0.5], [0.0, 0.1, 0.2])

    def test_length_mismatch_raises(self):
        with pytest.raises(ValueError):
            PiecewiseLinearCurve([0.0, 1.0], [0.0])


# ── RoundOutcome ─────────────────────────────────────────────────────

class TestRoundOutcome:
    def test_visible_strips_telemetry(self):
        result = RoundOutcome(2, 1.0, 0.5, 0.5, type_id=1, effort=2).visible()
        assert result.type_id is None
        assert result.effort is None
        assert result.utility == 0.5


# ── FiniteMixture ────────────────────────────────────────────────────

class TestFiniteMixture:
    @pytest.fixture(autouse=True)
    def setup(self, sample_config, three_outcomes):
        self.config = sample_config
        self.outcomes = three_outcomes
        self.workers = [high_low_type(0.1, 0.8), high_low_type(0.6, 0.8)]
        self.env = FiniteMixture(three_outcomes, self.workers, [0.5, 0.5], sample_config)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to"):
            FiniteMixture(self.outcomes, self.workers, [0.5, 0.6], self.config)

    def test_negative_weight_raises(self):
        with pytest.raises(ValueError, match="non-negative"):
            FiniteMixture(self.outcomes, self.workers, [1.5, -0.5], self.config)

    def test_type_dimension_checked(self):
        with pytest.raises(ValueError):
            FiniteMixture(OutcomeSpace((0.0, 1.0)), self.workers, [0.5, 0.5], self.config)

    def test_exact_breakdown(self):
        # p = 0.5: the cheap type works (0.4 >= 0.1), the dear one does not
        breakdown = self.env.exact_breakdown(Contract((0.0, 0.5)))
        assert breakdown.value == pytest.approx(0.4)
        assert breakdown.payment == pytest.approx(0.2)
        assert breakdown.utility == pytest.approx(0.2)

    def test_batch_matches_exact(self):
        contracts = [Contract((0.0, 0.5)), Contract((0.1, 0.8)), Contract((0.3, 0.0))]
        utilities = self.env.utility_batch(np.array([c.payments for c in contracts]))
        for contract, utility in zip(contracts, utilities):
            assert utility == pytest.approx(exact_utility(self.env, contract).utility)

    def test_play_round_hides_telemetry(self):
        result = play_round(self.env, Contract((0.0, 0.5)), np.random.default_rng(0))
        assert result.type_id is None
        assert result.utility == pytest.approx(result.value - result.payment)

    def test_debug_round_keeps_telemetry(self):
        result = self.env.play_round(Contract((0.0, 0.5)), np.random.default_rng(0), debug=True)
        assert result.type_id in (0, 1)
        assert result.effort in (1, 2)

    def test_dimension_mismatch_raises(self):
        with pytest.raises(ValueError):
            self.env.play_round(Contract((0.5,)), np.random.default_rng(0))

    def test_sample_mean_matches_oracle(self):
        rng = np.random.default_rng(3)
        contract = Contract((0.1, 0.5))
        mean = np.mean([self.env.play_round(contract, rng).utility for _ in range(4000)])
        assert mean == pytest.approx(self.env.exact_breakdown(contract).utility, abs=0.03)


# ── HighLowParametric ────────────────────────────────────────────────

class TestHighLowParametric:
    @pytest.fixture(autouse=True)
    def setup(self, sample_config):
        self.config = sample_config

    def test_needs_exactly_one_theta(self):
        with pytest.raises(ValueError, match="exactly one"):
            HighLowParametric(uniform_cost(), custom_config=self.config)
        with pytest.raises(ValueError, match="exactly one"):
            HighLowParametric(uniform_cost(), theta_h=0.8, theta_dist=stats.uniform(0.5, 0.5),
                              custom_config=self.config)

    def test_high_probability_fixed_theta(self):
        env = HighLowParametric(uniform_cost(), theta_h=0.8, values=(0, 0, 1),
                                custom_config=self.config)
        assert env.high_probability(0.5)[0] == pytest.approx(0.32)

    def test_utility_with_zero_low_value(self):
        env = HighLowParametric(uniform_cost(), theta_h=0.8, values=(0, 0, 1),
                                custom_config=self.config)
        assert env.exact_breakdown(Contract((0.0, 0.5))).utility == pytest.approx(0.16)

    def test_base_payment_is_always_paid(self, uniform_market):
        # S(0.5) = 0.32 on values (0, 0.3, 1)
        breakdown = uniform_market.exact_breakdown(Contract((0.1, 0.5)))
        assert breakdown.value == pytest.approx(0.3 + 0.7 * 0.32)
        assert breakdown.payment == pytest.approx(0.1 + 0.32 * 0.5)

    def test_theta_distribution_integrates(self):
        # theta ~ U[0.5, 1], c ~ U[0, 1], p = 0.5: E[theta * theta p] = p * 7/12
        env = HighLowParametric(uniform_cost(), theta_dist=stats.uniform(0.5, 0.5),
                                custom_config=self.config)
        assert env.high_probability(0.5)[0] == pytest.approx(0.5 * 7 / 12, abs=1e-7)

    def test_sampled_share_matches(self, uniform_market):
        rng = np.random.default_rng(5)
        contract = Contract((0.0, 0.5))
        highs = np.mean([uniform_market.play_round(contract, rng).outcome == 2
                         for _ in range(5000)])
        assert highs == pytest.approx(0.32, abs=0.03)

    def test_debug_round_reports_cost_decile(self, uniform_market):
        rng = np.random.default_rng(9)
        contract = Contract((0.0, 0.5))
        results = [uniform_market.play_round(contract, rng, debug=True) for _ in range(2000)]
        buckets = np.array([r.type_id for r in results])
        efforts = np.array([r.effort for r in results])
        assert set(buckets) <= set(range(10))
        counts = np.bincount(buckets, minlength=10)
        assert counts.min() > 120 and counts.max() < 280
        # high effort iff 0.8 * 0.5 >= c_h, i.e. exactly the four cheapest deciles
        assert np.all((efforts == 2) == (buckets < 4))
        assert uniform_market.play_round(contract, rng).type_id is None


# ── TaskPricingCurve / InventoryDemand ───────────────────────────────

class TestTaskPricing:
    def test_utility(self, identity_pricing):
        # U(p) = p (1 - p)
        assert identity_pricing.exact_breakdown(Contract((0.5,))).utility == pytest.approx(0.25)
        assert identity_pricing.exact_breakdown(Contract((0.2,))).utility == pytest.approx(0.16)

    def test_decreasing_curve_rejected(self, sample_config):
        with pytest.raises(ValueError, match="non-decreasing"):
            TaskPricingCurve(PiecewiseLinearCurve([0.0, 1.0], [1.0, 0.0]),
                             custom_config=sample_config)

    def test_outcomes(self, identity_pricing):
        rng = np.random.default_rng(0)
        outcomes = {identity_pricing.play_round(Contract((0.5,)), rng).outcome for _ in range(50)}
        assert outcomes == {0, 1}


class TestInventoryDemand:
    @pytest.fixture(autouse=True)
    def setup(self, sample_config):
        self.env = InventoryDemand(PiecewiseLinearCurve([0.0, 1.0], [1.0, 0.0]), sample_config)

    def test_revenue(self):
        breakdown = self.env.exact_breakdown(Contract((0.5,)))
        assert breakdown.value == 0.0
        assert breakdown.payment == pytest.approx(-0.25)
        assert breakdown.utility == pytest.approx(0.25)

    def test_sale_is_paid_negative_price(self):
        rng = np.random.default_rng(4)
        results = [self.env.play_round(Contract((0.3,)), rng) for _ in range(50)]
        sales = [r for r in results if r.outcome == 1]
        assert sales
        assert all(r.payment == pytest.approx(-0.3) and r.utility == pytest.approx(0.3)
                   for r in sales)
        assert all(r.utility == 0.0 for r in results if r.outcome == 0)

    def test_sale_rate_falls_with_price(self):
        rng = np.random.default_rng(12)
        prices = np.linspace(0.1, 0.9, 5)
        rates = np.array([
            np.mean([self.env.play_round(Contract((float(p),)), rng).outcome == 1
                     for _ in range(2000)])
            for p in prices
        ])
        assert np.all(np.diff(rates) < 0)
        np.testing.assert_allclose(rates, 1 - prices, atol=0.04)

    def test_increasing_curve_rejected(self, sample_config):
        with pytest.raises(ValueError, match="non-increasing"):
            InventoryDemand(PiecewiseLinearCurve([0.0, 1.0], [0.0, 1.0]), sample_config)
