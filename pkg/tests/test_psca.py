"""
Tests for the alternating pose / beamformer optimisation

**Purpose**: Finite differences, the safeguarded per-surface updates and the
outer loop contracts (monotone trace, exact feasibility, scheme restrictions)
"""
import math

import numpy as np
import pytest

from src.beamform import power_split_search
from src.errors import InfeasibleLayoutError, NonFiniteObjectiveError
from src.geometry import (
    check_constraints,
    linearize_rotation_constraints,
    position_halfspaces,
    surface_normal,
)
from src.models import OptimizerConfig, ScenarioConfig, SchemeKind, SurfacePose, wrap_angles
from src.psca import (
    EMPTY_NULL_SPACE,
    CircularTrack,
    MotionPolicy,
    PoseState,
    QpProblem,
    _safeguarded_step,
    finite_diff_gradient,
    optimize,
    solve_proximal_qp,
    update_azimuth,
    update_position,
    update_rotation,
)
from src.scenario import layout_track
from src.secrecy import BeamformerSet

from .conftest import USERS, layout, make_scenario

FROZEN = MotionPolicy(move_positions=False, move_rotations=False)


def state_for(scenario, poses):
    beams, _ = power_split_search(scenario, poses, OptimizerConfig().alpha_grid)
    return PoseState(scenario, poses, beams)


def capped(start, target, max_step):
    direction = target - start
    length = np.linalg.norm(direction)
    return direction if length <= max_step else direction * (max_step / length)


def on_segment(point, start, direction, config):
    """point == start + shrink**k * direction for some k"""
    for k in range(config.max_backtracks + 1):
        if np.allclose(point, start + config.backtrack_shrink ** k * direction, atol=1e-12):
            return True
    return np.allclose(point, start, atol=1e-12)


class TestFiniteDiffGradient:
    def test_quadratic(self):
        grad = finite_diff_gradient(lambda x: float(x @ x), np.array([1.0, 2.0, 3.0]), 1e-6)
        np.testing.assert_allclose(grad, [2, 4, 6], atol=1e-5)

    def test_constant(self):
        np.testing.assert_array_equal(finite_diff_gradient(lambda x: 4.2, np.zeros(3), 1e-5), 0.0)

    def test_affine_is_exact(self):
        a = np.array([0.5, -1.5, 2.0])
        np.testing.assert_allclose(finite_diff_gradient(lambda x: float(a @ x) + 1.0, np.ones(3), 1e-5), a, atol=1e-9)

    def test_non_finite_value(self):
        with pytest.raises(NonFiniteObjectiveError):
            finite_diff_gradient(lambda x: math.inf if x[1] > 0 else 0.0, np.zeros(3), 1e-5)

    def test_non_positive_step(self):
        with pytest.raises(ValueError):
            finite_diff_gradient(lambda x: 0.0, np.zeros(3), 0.0)


class TestPoseState:
    def test_objective_with_leaves_state_untouched(self, toy_scenario, toy_poses):
        state = state_for(toy_scenario, toy_poses)
        before = state.objective()
        state.objective_with(0, position=state.positions[0] + 0.01)
        assert state.objective() == before

    def test_commit_matches_fresh_state(self, toy_scenario, toy_poses):
        state = state_for(toy_scenario, toy_poses)
        moved = state.positions[1] + np.array([0.0, 0.0, 0.05])
        expected = state.objective_with(1, position=moved)
        state.commit(1, position=moved)
        fresh = PoseState(toy_scenario, state.poses, state.beams)
        assert state.objective() == pytest.approx(expected, rel=1e-12)
        assert fresh.objective() == pytest.approx(expected, rel=1e-12)


class TestUpdatePosition:
    def test_zero_gradient_keeps_point(self, toy_scenario, toy_poses):
        zero = BeamformerSet(transmit=np.zeros((4, 2), dtype=complex), an_vector=np.zeros(4, dtype=complex), alpha=0.9)
        state = PoseState(toy_scenario, toy_poses, zero)
        step = update_position(0, state, OptimizerConfig())
        np.testing.assert_array_equal(step.point, toy_poses[0].q)
        assert not step.accepted

    def test_single_surface_follows_projection(self):
        scenario = make_scenario(surfaces=1)
        poses = layout(1)
        state = state_for(scenario, poses)
        config = OptimizerConfig()
        q_prev = state.positions[0].copy()
        grad = finite_diff_gradient(lambda q: state.objective_with(0, position=q), q_prev, config.fd_step_pos)
        target = solve_proximal_qp(
            QpProblem(grad, q_prev, config.rho_pos, position_halfspaces(poses, scenario.array, 0), scenario.region)
        )
        step = update_position(0, state, config)
        direction = capped(q_prev, target, config.step_cap_pos * scenario.wavelength)
        assert on_segment(step.point, q_prev, direction, config)
        if step.accepted and step.backtracks == 0:
            np.testing.assert_allclose(step.point, q_prev + direction)

    def test_accepted_points_are_feasible(self):
        scenario = make_scenario(surfaces=4)
        state = state_for(scenario, layout(4))
        config = OptimizerConfig(rho_pos=1.0)
        for _ in range(2):
            for b in range(4):
                step = update_position(b, state, config)
                if step.accepted:
                    assert step.objective >= state.objective()
                    state.commit(b, position=step.point)
        report = check_constraints(state.poses, scenario.array, scenario.region, scenario.d_min)
        assert report.is_feasible(1e-9)
        for i, j in report.min_distance:
            assert np.linalg.norm(state.positions[i] - state.positions[j]) >= scenario.d_min - 1e-9


class TestUpdateRotation:
    def test_zero_gradient_keeps_angles(self, toy_scenario, toy_poses):
        zero = BeamformerSet(transmit=np.zeros((4, 2), dtype=complex), an_vector=np.zeros(4, dtype=complex), alpha=0.9)
        state = PoseState(toy_scenario, toy_poses, zero)
        step = update_rotation(1, state, OptimizerConfig())
        np.testing.assert_allclose(step.point, toy_poses[1].u)

    def test_single_surface_follows_projection(self):
        scenario = make_scenario(surfaces=1)
        poses = layout(1)
        state = state_for(scenario, poses)
        config = OptimizerConfig()
        u_prev = state.rotations[0].copy()
        grad = finite_diff_gradient(lambda u: state.objective_with(0, rotation=u), u_prev, config.fd_step_rot)
        halfspaces = linearize_rotation_constraints(u_prev, poses, 0, scenario.array)
        target = solve_proximal_qp(QpProblem(grad, u_prev, config.rho_rot, halfspaces))
        step = update_rotation(0, state, config)
        direction = capped(u_prev, target, config.step_cap_rot)
        candidates = [
            wrap_angles(u_prev + config.backtrack_shrink ** k * direction)
            for k in range(config.max_backtracks + 1)
        ] + [wrap_angles(u_prev)]
        assert any(np.allclose(step.point, c, atol=1e-12) for c in candidates)

    def test_angles_are_wrapped(self):
        scenario = make_scenario(surfaces=3)
        state = state_for(scenario, layout(3))
        config = OptimizerConfig(rho_rot=0.5)
        for b in range(3):
            step = update_rotation(b, state, config)
            assert np.all((step.point >= 0) & (step.point < 2 * math.pi))
            if step.accepted:
                state.commit(b, rotation=step.point)
        report = check_constraints(state.poses, scenario.array, scenario.region, scenario.d_min)
        assert report.is_feasible(1e-9)


class TestUpdateAzimuth:
    def test_stays_on_track(self):
        scenario = make_scenario(surfaces=3)
        track = layout_track(ScenarioConfig(surfaces=3, antennas_per_surface=2))
        state = state_for(scenario, layout(3))
        config = OptimizerConfig(rho_rot=0.5)
        for b in range(3):
            step = update_azimuth(b, state, config, track)
            assert 0 <= step.point[0] < 2 * math.pi
            if step.accepted:
                pose = track.pose(float(step.point[0]))
                state.commit(b, position=pose.q, rotation=pose.u)
        for q in state.positions:
            assert np.hypot(q[0], q[1]) == pytest.approx(track.radius)
            assert q[2] == pytest.approx(track.height)
        report = check_constraints(state.poses, scenario.array, scenario.region, scenario.d_min)
        assert report.is_feasible(1e-9)

    def test_track_round_trip(self):
        track = CircularTrack(radius=0.7, height=0.0, downtilt=math.radians(15))
        assert track.azimuth_of(track.pose(5.0).q) == pytest.approx(5.0)


class TestStepCap:
    def test_first_trial_sits_on_the_cap(self):
        objective = lambda x: -float((x[0] - 0.1) ** 2)  # noqa: E731
        start = np.zeros(3)
        step = _safeguarded_step(
            start, np.array([10.0, 0.0, 0.0]), objective, lambda x: True, objective(start), OptimizerConfig(), 0.1
        )
        assert step.accepted
        assert step.backtracks == 0
        np.testing.assert_allclose(step.point, [0.1, 0.0, 0.0])

    def test_short_steps_are_not_stretched(self):
        objective = lambda x: -float((x[0] - 0.1) ** 2)  # noqa: E731
        start = np.zeros(3)
        step = _safeguarded_step(
            start, np.array([0.05, 0.0, 0.0]), objective, lambda x: True, objective(start), OptimizerConfig(), 0.1
        )
        np.testing.assert_allclose(step.point, [0.05, 0.0, 0.0])

    def test_position_step_within_wavelength_fraction(self):
        scenario = make_scenario(surfaces=1)
        state = state_for(scenario, layout(1))
        config = OptimizerConfig(rho_pos=1e-3)
        q_prev = state.positions[0].copy()
        step = update_position(0, state, config)
        assert np.linalg.norm(step.point - q_prev) <= config.step_cap_pos * scenario.wavelength + 1e-12

    def test_rotation_step_within_cap(self):
        scenario = make_scenario(surfaces=1)
        state = state_for(scenario, layout(1))
        config = OptimizerConfig(rho_rot=1e-3)
        u_prev = state.rotations[0].copy()
        step = update_rotation(0, state, config)
        moved = np.angle(np.exp(1j * (step.point - u_prev)))
        assert np.linalg.norm(moved) <= config.step_cap_rot + 1e-12


class TestOptimize:
    def test_no_outer_iterations(self, toy_scenario, toy_poses):
        trace = optimize(toy_scenario, toy_poses, OptimizerConfig(t1_max=0))
        assert len(trace.outer_ssr) == 1
        assert trace.outer_iterations == 0
        assert trace.poses == toy_poses

    def test_single_user_without_eavesdroppers(self, toy_poses, fast_config):
        scenario = make_scenario(users=USERS[:1], eves=())
        trace = optimize(scenario, toy_poses, fast_config)
        assert trace.report.ssr == pytest.approx(trace.report.user_rate.sum())
        assert trace.beams.alpha == fast_config.alpha_max
        assert trace.is_monotone()

    def test_not_worse_than_frozen_poses(self, toy_scenario, toy_poses, fast_config):
        moving = optimize(toy_scenario, toy_poses, fast_config)
        frozen = optimize(toy_scenario, toy_poses, fast_config, FROZEN)
        assert moving.outer_ssr[-1] >= frozen.outer_ssr[-1]
        assert frozen.poses == toy_poses

    def test_infeasible_start(self, toy_scenario):
        facing = [
            SurfacePose(position=(0.5, 0, 0), rotation=(0, math.pi / 2, math.pi)),
            SurfacePose(position=(-0.5, 0, 0), rotation=(0, math.pi / 2, 0)),
        ]
        with pytest.raises(InfeasibleLayoutError) as info:
            optimize(toy_scenario, facing, OptimizerConfig())
        assert info.value.report is not None

    def test_deterministic(self, toy_scenario, toy_poses, fast_config):
        first = optimize(toy_scenario, toy_poses, fast_config)
        second = optimize(toy_scenario, toy_poses, fast_config)
        assert first.outer_ssr == second.outer_ssr
        assert first.poses == second.poses
        np.testing.assert_array_equal(first.beams.transmit, second.beams.transmit)

    def test_final_state_contracts(self, toy_scenario, toy_poses, fast_config):
        trace = optimize(toy_scenario, toy_poses, fast_config)
        report = check_constraints(trace.poses, toy_scenario.array, toy_scenario.region, toy_scenario.d_min)
        assert report.max_violation() <= 1e-9
        assert trace.beams.within_budget(toy_scenario.p_max)
        assert trace.is_monotone()
        assert trace.report.ssr >= 0
        assert len(trace.inner_ssr) == trace.outer_iterations

    def test_rotation_only_keeps_positions(self, toy_scenario, toy_poses, fast_config):
        trace = optimize(toy_scenario, toy_poses, fast_config, MotionPolicy(move_positions=False))
        for before, after in zip(toy_poses, trace.poses):
            assert after.position == before.position
        assert {s.kind for s in trace.steps} <= {"rotation"}

    def test_circular_keeps_track_and_downtilt(self, toy_scenario, toy_poses, fast_config):
        track = layout_track(ScenarioConfig(surfaces=2, antennas_per_surface=2))
        motion = MotionPolicy(move_positions=False, move_rotations=False, circular=track)
        trace = optimize(toy_scenario, toy_poses, fast_config, motion)
        for pose in trace.poses:
            assert np.hypot(pose.position[0], pose.position[1]) == pytest.approx(track.radius)
            normal = surface_normal(pose.rotation, toy_scenario.array)
            assert normal[2] == pytest.approx(-math.sin(track.downtilt))
            # broadside points radially outward
            assert normal[:2] @ pose.q[:2] > 0

    def test_trace_dump(self, toy_scenario, toy_poses, fast_config):
        trace = optimize(toy_scenario, toy_poses, fast_config)
        dump = trace.dump(SchemeKind.PROPOSED)
        assert dump.ssr_bps_hz == trace.report.ssr
        assert dump.outer_ssr == trace.outer_ssr
        assert dump.transmit_power_w + dump.an_power_w <= toy_scenario.p_max + 1e-9

    def test_empty_null_space_is_reported(self, fast_config):
        # one 2-antenna surface and two users leave no room for artificial noise
        scenario = make_scenario(surfaces=1)
        trace = optimize(scenario, layout(1), fast_config)
        assert trace.beams.degenerate_an
        assert trace.warnings == [EMPTY_NULL_SPACE]
        assert trace.dump(SchemeKind.PROPOSED).warnings == [EMPTY_NULL_SPACE]
        np.testing.assert_array_equal(trace.beams.an_vector, 0.0)

    def test_no_warnings_with_spare_antennas(self, toy_scenario, toy_poses, fast_config):
        trace = optimize(toy_scenario, toy_poses, fast_config)
        assert not trace.beams.degenerate_an
        assert trace.dump(SchemeKind.PROPOSED).warnings == []


class TestGradientSanity:
    @pytest.mark.parametrize("surface", [0, 1])
    def test_position_gradient_matches_central_differences(self, toy_scenario, toy_poses, surface):
        state = state_for(toy_scenario, toy_poses)
        f = lambda q: state.objective_with(surface, position=q)  # noqa: E731
        x = state.positions[surface].copy()
        h = 1e-6
        forward = finite_diff_gradient(f, x, h)
        central = np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(3)])
        assert np.linalg.norm(forward - central) <= max(1e-4 * np.linalg.norm(central), 1e-8)

    @pytest.mark.parametrize("surface", [0, 1])
    def test_rotation_gradient_matches_central_differences(self, toy_scenario, toy_poses, surface):
        state = state_for(toy_scenario, toy_poses)
        f = lambda u: state.objective_with(surface, rotation=u)  # noqa: E731
        x = state.rotations[surface].copy()
        h = 1e-5
        forward = finite_diff_gradient(f, x, h)
        central = np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(3)])
        assert np.linalg.norm(forward - central) <= max(1e-4 * np.linalg.norm(central), 1e-8)
