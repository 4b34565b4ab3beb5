"""
Tests for data models

**Purpose**: Focused testing of Pydantic models and validation
**Key Components**:
- SurfacePose angle wrapping and coercion
- ArraySpec layout invariants and the UPA builder
- Config models: defaults, alpha grid, cross-field checks
- Harness records and error documents
"""
import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.models import (
    ArraySpec,
    DeploymentRegion,
    ErrorResponse,
    HarnessConfig,
    OptimizerConfig,
    RegionShape,
    ResultRecord,
    ScenarioConfig,
    SchemeKind,
    SurfacePose,
    SweepParameter,
    SweepSpec,
    default_min_distance,
    dbm_to_watts,
    wrap_angles,
)


class TestSurfacePose:
    def test_rotation_wrapped_into_range(self):
        """Angles outside [0, 2pi) are wrapped"""
        pose = SurfacePose(position=(0, 0, 0), rotation=(-0.5, 2 * math.pi + 0.25, 7.0))
        assert pose.rotation[0] == pytest.approx(2 * math.pi - 0.5)
        assert pose.rotation[1] == pytest.approx(0.25)
        assert pose.rotation[2] == pytest.approx(7.0 - 2 * math.pi)
        assert all(0.0 <= a < 2 * math.pi for a in pose.rotation)

    def test_accepts_numpy_arrays(self):
        pose = SurfacePose(position=np.array([1.0, 2.0, 3.0]), rotation=np.zeros(3))
        assert pose.position == (1.0, 2.0, 3.0)
        np.testing.assert_array_equal(pose.q, [1.0, 2.0, 3.0])

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValidationError):
            SurfacePose(position=(1.0, 2.0))

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            SurfacePose(position=(1.0, math.nan, 0.0))

    def test_wrap_tiny_negative_stays_in_range(self):
        assert wrap_angles(-1e-18)[0] < 2 * math.pi


class TestArraySpec:
    def test_upa_four_elements_is_square(self):
        array = ArraySpec.upa(4, 0.125)
        positions = np.asarray(array.local_positions)
        assert array.antenna_count == 4
        np.testing.assert_allclose(positions.mean(axis=0), 0.0, atol=1e-15)
        np.testing.assert_allclose(sorted(set(np.round(positions[:, 0], 12))), [-0.03125, 0.03125])
        np.testing.assert_allclose(sorted(set(np.round(positions[:, 1], 12))), [-0.03125, 0.03125])
        np.testing.assert_allclose(positions[:, 2], 0.0)

    def test_upa_prime_count_is_a_line(self):
        positions = np.asarray(ArraySpec.upa(3, 0.125).local_positions)
        np.testing.assert_allclose(positions[:, 1], 0.0)
        np.testing.assert_allclose(np.diff(positions[:, 0]), 0.0625)

    def test_rejects_off_centre_positions(self):
        with pytest.raises(ValidationError):
            ArraySpec(local_positions=[(0.1, 0.0, 0.0), (0.2, 0.0, 0.0)])

    def test_rejects_positions_out_of_plane(self):
        with pytest.raises(ValidationError):
            ArraySpec(local_positions=[(0.0, 0.0, 0.1), (0.0, 0.0, -0.1)])

    def test_normal_is_normalised(self):
        array = ArraySpec(local_positions=[(0.0, 0.0, 0.0)], local_normal=(0.0, 0.0, 5.0))
        assert array.local_normal == (0.0, 0.0, 1.0)


class TestRegion:
    def test_box_requires_half_widths(self):
        with pytest.raises(ValidationError):
            DeploymentRegion(shape=RegionShape.BOX)

    def test_box_extent_is_smallest_horizontal_half_width(self):
        region = DeploymentRegion(shape=RegionShape.BOX, half_widths=(2.0, 1.5, 0.5))
        assert region.horizontal_extent == 1.5

    def test_default_is_unit_ball(self):
        region = DeploymentRegion()
        assert region.shape == RegionShape.BALL
        assert region.radius == 1.0


class TestOptimizerConfig:
    def test_default_alpha_grid(self):
        grid = OptimizerConfig().alpha_grid
        assert len(grid) == 10
        assert grid[0] == 0.5
        assert grid[-1] == 0.95
        assert grid[1] == 0.55

    def test_single_point_grid(self):
        assert OptimizerConfig(alpha_min=0.7, alpha_max=0.7).alpha_grid == (0.7,)

    def test_alpha_bounds_ordered(self):
        with pytest.raises(ValidationError):
            OptimizerConfig(alpha_min=0.9, alpha_max=0.6)

    @pytest.mark.parametrize("field", ["rho_pos", "rho_rot", "fd_step_pos", "delta"])
    def test_positive_fields(self, field):
        with pytest.raises(ValidationError):
            OptimizerConfig(**{field: 0.0})


class TestScenarioConfig:
    def test_default_minimum_distance(self):
        assert ScenarioConfig().min_distance == pytest.approx(0.11963835, abs=1e-8)
        assert default_min_distance(0.125) == pytest.approx(0.11963835, abs=1e-8)

    def test_explicit_minimum_distance_wins(self):
        assert ScenarioConfig(d_min=0.3).min_distance == 0.3

    def test_distance_range_ordered(self):
        with pytest.raises(ValidationError):
            ScenarioConfig(distance_range=(200.0, 20.0))

    def test_mean_users_positive(self):
        with pytest.raises(ValidationError):
            ScenarioConfig(mean_users=0.0)


class TestHarnessModels:
    def test_p_max_required(self):
        with pytest.raises(ValidationError) as info:
            HarnessConfig()
        assert info.value.errors()[0]["loc"] == ("p_max_w",)

    def test_noise_conversion(self):
        assert dbm_to_watts(-90.0) == pytest.approx(1e-12)
        scenario = HarnessConfig(p_max_w=10).to_scenario_config()
        assert scenario.noise_power == pytest.approx(1e-12)

    def test_box_region_from_flat_string(self):
        config = HarnessConfig(p_max_w=1, region_shape="box", region_half_widths_m="1,1,0.5")
        region = config.to_scenario_config().region
        assert region.shape == RegionShape.BOX
        assert region.half_widths == (1.0, 1.0, 0.5)

    def test_unknown_field_forbidden(self):
        with pytest.raises(ValidationError):
            HarnessConfig(p_max_w=1, rho=3)

    def test_result_record_row(self):
        record = ResultRecord(
            scheme=SchemeKind.FPA, seed=3, k_d=2, k_e=1, ssr_bps_hz=1.5, alpha=0.9,
            outer_iters=2, runtime_ms=1.0,
        )
        row = record.csv_row()
        assert row["scheme"] == "fpa"
        assert row["status"] == "ok"

    def test_result_record_rejects_negative_ssr(self):
        with pytest.raises(ValidationError):
            ResultRecord(scheme=SchemeKind.FPA, seed=0, k_d=1, k_e=0, ssr_bps_hz=-0.1, runtime_ms=0)

    def test_sweep_spec_needs_values(self):
        with pytest.raises(ValidationError):
            SweepSpec(parameter=SweepParameter.MEAN_EVES, values=(), trials=1, schemes=(SchemeKind.FPA,))

    def test_error_response(self):
        response = ErrorResponse(error="p_max_w: Field required", details="ConfigError")
        assert "p_max_w" in response.model_dump_json()
