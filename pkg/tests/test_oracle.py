"""Tests for src.analysis.oracle module."""

import numpy as np
import pytest

from src.analysis.oracle import (
    cell_grid,
    exact_virtual_width,
    exact_width,
    opt_search,
    opt_search_payments,
    virtual_width_batch,
)
from src.envs.markets import linear_demand, make_inventory_env, make_nonmonotone_example
from src.mesh.candidates import ExplicitList, FullSpace, UniformMesh
from src.mesh.cells import Cell
from src.model.contracts import Contract


# ── opt_search ───────────────────────────────────────────────────────

class TestOptSearch:
    def test_identity_pricing(self, identity_pricing):
        result = opt_search(identity_pricing, UniformMesh(0.1))
        assert result.utility == pytest.approx(0.25)
        assert result.contract == Contract((0.5,))
        assert result.evaluated == 11
        assert result.grid_step == 0.1

    def test_explicit_list(self, identity_pricing):
        candidates = ExplicitList([Contract((0.1,)), Contract((0.3,))])
        result = opt_search(identity_pricing, candidates)
        assert result.utility == pytest.approx(0.21)

    def test_full_space_uses_grid(self, identity_pricing):
        result = opt_search(identity_pricing, FullSpace(depth_cap=10), grid_step=0.01)
        assert result.utility == pytest.approx(0.25)
        assert result.grid_step == 0.01

    def test_full_space_without_grid_raises(self, identity_pricing):
        with pytest.raises(ValueError, match="grid_step"):
            opt_search(identity_pricing, FullSpace(depth_cap=10))

    def test_uniform_market_zero_base(self, uniform_market):
        # with v(low) = 0.3 the base payment never pays for itself
        result = opt_search(uniform_market, UniformMesh(0.05))
        assert result.payments[1] == 0.0


class TestNonMonotone:
    def test_unrestricted_beats_monotone(self, sample_config):
        env = make_nonmonotone_example(0.2, custom_config=sample_config)
        unrestricted = opt_search_payments(env, 0.1)
        monotone = opt_search(env, UniformMesh(0.1))
        assert unrestricted.utility == pytest.approx(0.6)
        assert not unrestricted.monotone
        assert unrestricted.contract is None
        np.testing.assert_allclose(unrestricted.payments, [0.0, 0.0, 0.4, 0.0])
        assert monotone.utility == pytest.approx(0.5)


# ── widths ───────────────────────────────────────────────────────────

class TestWidths:
    def test_task_pricing_virtual_width(self, identity_pricing):
        width = exact_virtual_width(identity_pricing, Cell(2, (1,)), UniformMesh(0.25))
        assert width == pytest.approx(0.4375)

    def test_inventory_virtual_width(self, sample_config):
        env = make_inventory_env(linear_demand(), sample_config)
        width = exact_virtual_width(env, Cell(2, (1,)), UniformMesh(0.25))
        assert width == pytest.approx(0.25)

    def test_atomic_cell_has_no_virtual_width(self, identity_pricing):
        with pytest.raises(ValueError, match="atomic"):
            exact_virtual_width(identity_pricing, Cell(3, (1,)), UniformMesh(0.25))

    def test_virtual_width_bounds_width(self, uniform_market):
        cell = Cell(1, (0, 0))
        virtual = exact_virtual_width(uniform_market, cell, FullSpace(depth_cap=8))
        assert exact_width(uniform_market, cell, cell.side / 8) <= virtual + 1e-9

    def test_batch_matches_scalar(self, identity_pricing):
        lower = np.array([[0.25], [0.0]])
        upper = np.array([[0.5], [0.5]])
        widths = virtual_width_batch(identity_pricing, lower, upper)
        assert widths[0] == pytest.approx(0.4375)
        assert widths[1] == pytest.approx(0.75)

    def test_exact_width(self, identity_pricing):
        assert exact_width(identity_pricing, Cell(2, (1,)), 1 / 32) == pytest.approx(0.0625)

    def test_exact_width_grid_too_coarse(self, identity_pricing):
        with pytest.raises(ValueError, match="too coarse"):
            exact_width(identity_pricing, Cell(2, (1,)), 0.1)

    def test_cell_grid_includes_corners(self):
        grid = cell_grid(Cell(1, (1, 0)), 0.125)
        assert grid.shape == (25, 2)
        np.testing.assert_allclose(grid[0], [0.5, 0.0])
        np.testing.assert_allclose(grid[-1], [1.0, 0.5])
