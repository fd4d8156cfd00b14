"""Tests for src.analysis.census module."""

import math

import pytest

from src.analysis.census import cell_census, feasible_cells, fit_width_dimension
from src.analysis.oracle import opt_search
from src.mesh.candidates import FullSpace, UniformMesh


# ── feasible_cells ───────────────────────────────────────────────────

class TestFeasibleCells:
    def test_levels_on_quarter_mesh(self):
        levels = feasible_cells(UniformMesh(0.25), 1, 3, guard=100)
        # eighth-width intervals hold a single quarter-mesh point
        assert {d: len(cells) for d, cells in levels.items()} == {0: 1, 1: 2, 2: 4}

    def test_max_depth_stops_enumeration(self):
        levels = feasible_cells(UniformMesh(0.25), 1, 1, guard=100)
        assert sorted(levels) == [0, 1]

    def test_guard(self):
        with pytest.raises(ValueError, match="more than 2 cells"):
            feasible_cells(UniformMesh(0.25), 1, 3, guard=2)

    def test_atomic_root_has_no_composite_cells(self):
        assert feasible_cells(FullSpace(depth_cap=0), 2, 3, guard=100) == {}


# ── fit_width_dimension ──────────────────────────────────────────────

class TestFitWidthDimension:
    def test_exact_power_law(self):
        fit = fit_width_dimension({0.5: 2, 0.25: 4, 0.125: 8})
        assert fit['slope'] == pytest.approx(1.0)
        assert fit['r2'] == pytest.approx(1.0)
        assert fit['eps_list'] == [0.125, 0.25, 0.5]

    def test_zero_counts_dropped(self):
        fit = fit_width_dimension({0.5: 3, 0.25: 3, 0.125: 0})
        assert fit['slope'] == pytest.approx(0.0)

    def test_too_few_points(self):
        fit = fit_width_dimension({0.5: 3, 0.25: 0})
        assert math.isnan(fit['slope'])


# ── cell_census ──────────────────────────────────────────────────────

class TestCellCensus:
    @pytest.fixture(autouse=True)
    def setup(self, sample_config):
        self.config = sample_config

    def test_finite_mesh(self, identity_pricing):
        result = cell_census(identity_pricing, UniformMesh(0.25), 3, eps_list=[0.25, 0.5],
                             beta=1.0, custom_config=self.config)
        assert len(result.rows) == 7
        assert result.opt == pytest.approx(0.25)
        assert result.opt_step is None
        assert result.rows[0].cell == '0:(0)'
        assert result.rows[0].badness == pytest.approx(0.0)
        assert all(r.badness >= -1e-12 for r in result.rows)
        assert result.worst_margin >= -1e-9
        assert list(result.counts) == [0.25, 0.5]

    def test_frames(self, identity_pricing):
        result = cell_census(identity_pricing, UniformMesh(0.25), 2, eps_list=[0.25, 0.5],
                             custom_config=self.config)
        assert list(result.counts_frame().columns) == ['eps', 'count']
        frame = result.to_frame()
        assert len(frame) == len(result.rows)
        assert {'cell', 'depth', 'virtual_width', 'width', 'badness'} <= set(frame.columns)

    def test_default_eps_from_config(self, identity_pricing):
        result = cell_census(identity_pricing, UniformMesh(0.25), 2, custom_config=self.config)
        assert list(result.counts) == [2.0 ** -5, 2.0 ** -4, 2.0 ** -3]
        assert result.beta == 1.0

    def test_full_space(self, uniform_market):
        result = cell_census(uniform_market, FullSpace(depth_cap=20), 2,
                             custom_config=self.config, opt_step=1 / 16)
        assert result.opt_step == pytest.approx(1 / 16)
        assert result.opt == pytest.approx(opt_search(uniform_market, UniformMesh(1 / 16)).utility)
        assert {r.depth for r in result.rows} == {0, 1, 2}
        assert result.worst_margin >= -1e-9

    def test_guard_from_config(self, identity_pricing):
        self.config['mesh']['census_guard'] = 2
        with pytest.raises(ValueError, match="lower max_depth"):
            cell_census(identity_pricing, UniformMesh(0.25), 3, custom_config=self.config)
