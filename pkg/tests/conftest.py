"""
Shared fixtures for Dynamic Contract Lab tests.
"""

import os
import sys

import numpy as np
import pytest

# Ensure the project root is on the path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.envs.markets import make_uniform_market  # noqa: E402
from src.envs.supply import PiecewiseLinearCurve, TaskPricingCurve  # noqa: E402
from src.model.contracts import OutcomeSpace  # noqa: E402
from src.model.worker import high_low_type  # noqa: E402


@pytest.fixture
def sample_config() -> dict:
    """Provide a deterministic test configuration (matches default config.yaml, small verify sizes)."""
    return {
        'model': {
            'indifference_band': 1.0e-12,
            'row_tolerance': 1.0e-12,
            'weight_tolerance': 1.0e-12,
        },
        'mesh': {'depth_cap': 20, 'census_guard': 1_000_000},
        'zooming': {
            'mode': 'constant',
            'c_rad': 16,
            'c_select': 1.0,
            'c_zoom': 0.6,
            'width_multiplier': 5,
            'constant_width_multiplier': 1,
            'width_estimator': 'general',
            'coin_flag_sigmas': 5,
        },
        'baselines': {
            'ucb_constant': 1.0,
            'thompson': {'prior_mean': 0.5, 'prior_variance': 1.0, 'noise_variance': 1.0},
        },
        'quadrature': {'abs_tol': 1.0e-8},
        'analysis': {
            'beta': 1.0,
            'eps_exponents': [3, 4, 5],
            'width_grid_divisions': 8,
            'identity_tolerance': 1.0e-9,
            'slope_bound': 0.75,
        },
        'markets': {'theta_h': 0.8, 'values': [0.0, 0.3, 1.0]},
        'experiments': {
            'runs': 2,
            'base_seed': 11,
            'horizon': 200,
            'limit_horizon': 400,
            'window_fraction': 0.1,
            'deltas': [0.08, 0.2],
            'checkpoint_bases': [1, 2],
            'checkpoint_start': 10,
            'workers': 1,
            'output_dir': 'results',
            'per_round_logs': False,
            'debug_asserts': False,
        },
        'verify': {
            'width_trials': 5,
            'width_cells': 4,
            'identity_contracts': 50,
            'discretization_deltas': [0.1, 0.05],
            'discretization_fine_divisor': 10,
            'invariant_runs': 2,
            'invariant_delta': 0.08,
            'invariant_horizon': 300,
            'sweep_runs': 3,
            'sweep_horizon': 300,
            'sweep_deltas': [0.08, 0.2],
            'inventory_curves': 5,
            'inventory_cells': 4,
            'census_max_depth': 4,
            'ucb_horizon': 2000,
            'ucb_seeds': 3,
            'golden_horizon': 100,
            'golden_seed': 7,
            'golden_dir': 'tests/golden',
        },
        'logging': {'level': 'INFO', 'dir': 'logs', 'prefix': 'contract_lab'},
    }


@pytest.fixture
def high_low_worker():
    """High-low worker with cost 0.3 and high-output probability 0.8."""
    return high_low_type(0.3, 0.8, name='hl')


@pytest.fixture
def three_outcomes() -> OutcomeSpace:
    """Null, low and high outcomes with v(low) = 0."""
    return OutcomeSpace((0.0, 0.0, 1.0))


@pytest.fixture
def uniform_market(sample_config):
    """Uniform-cost high-low market on values (0, 0.3, 1)."""
    return make_uniform_market(custom_config=sample_config)


@pytest.fixture
def identity_pricing(sample_config):
    """Task pricing with supply S(p) = p and value 1."""
    curve = PiecewiseLinearCurve(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    return TaskPricingCurve(curve, value=1.0, custom_config=sample_config)
