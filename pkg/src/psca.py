"""
Alternating pose / beamformer optimisation

PURPOSE: Maximises the sum secrecy rate over surface positions, rotations,
transmit beamformers and artificial noise by alternating a proximal successive
convex approximation of the poses with the closed-form beamformer design

KEY COMPONENTS:
- finite_diff_gradient: forward-difference gradient of a scalar objective
- PoseState: current poses with cached per-surface channel blocks
- update_position / update_rotation / update_azimuth: one safeguarded
  proximal step for one surface
- MotionPolicy / CircularTrack: which pose variables a scheme may move
- optimize: the outer/inner loop, returning a SolveTrace
- solve_proximal_qp / QpProblem: re-exported from the QP module

CODE STRUCTURE:
1. Gradient
2. Pose state
3. Safeguarded surface updates
4. Outer loop and trace

**Key Components**:

    state = PoseState(scenario, poses, beams)
    step = update_position(b, state, config)
    if step.accepted:
        state.commit(b, position=step.point)

Every accepted step is re-checked against the exact placement constraints and
the exact objective; a failed check halves the step towards the previous point.
The first trial point is clipped to step_cap_pos wavelengths for positions and
step_cap_rot radians for angles.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .beamform import mmse_transmit, power_split_search, scenario_noise
from .channel import surface_channel_block, terminal_path_gains
from .errors import GeometryError, InfeasibleLayoutError, NonFiniteObjectiveError, SolverError
from .geometry import (
    Halfspace,
    check_constraints,
    linearize_min_distance,
    linearize_rotation_constraints,
    outward_pose,
    position_halfspaces,
)
from .models import (
    OptimizerConfig,
    Scenario,
    SchemeKind,
    StepLog,
    SurfacePose,
    TraceDump,
    wrap_angles,
)
from .qp import QpProblem, solve_proximal_qp
from .secrecy import BeamformerSet, RateReport, sum_secrecy_rate

logger = logging.getLogger(__name__)

ACCEPT_TOL = 1e-10
MONOTONE_SLACK = 1e-6
EMPTY_NULL_SPACE = "artificial noise disabled: empty null space"

__all__ = [
    "ACCEPT_TOL",
    "EMPTY_NULL_SPACE",
    "CircularTrack",
    "MotionPolicy",
    "PoseState",
    "QpProblem",
    "SolveTrace",
    "StepResult",
    "finite_diff_gradient",
    "optimize",
    "solve_proximal_qp",
    "update_azimuth",
    "update_position",
    "update_rotation",
]


def finite_diff_gradient(objective: Callable[[np.ndarray], float], x, eps: float) -> np.ndarray:
    """Forward differences (f(x + eps e_j) - f(x)) / eps"""
    if not eps > 0:
        raise ValueError("finite-difference step must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    base = objective(x)
    if not math.isfinite(base):
        raise NonFiniteObjectiveError(f"objective is {base} at the expansion point")
    grad = np.empty_like(x)
    for j in range(x.shape[0]):
        shifted = x.copy()
        shifted[j] += eps
        value = objective(shifted)
        if not math.isfinite(value):
            raise NonFiniteObjectiveError(f"objective is {value} along coordinate {j}")
        grad[j] = (value - base) / eps
    return grad


@dataclass(frozen=True)
class CircularTrack:
    """Horizontal circle the surfaces slide along, broadside radially outward"""
    radius: float
    height: float
    downtilt: float

    def pose(self, azimuth: float) -> SurfacePose:
        return outward_pose(azimuth, self.radius, self.height, self.downtilt)

    def azimuth_of(self, position) -> float:
        return float(wrap_angles(math.atan2(position[1], position[0]))[0])


@dataclass(frozen=True)
class MotionPolicy:
    move_positions: bool = True
    move_rotations: bool = True
    circular: Optional[CircularTrack] = None

    @property
    def moves_anything(self) -> bool:
        return self.circular is not None or self.move_positions or self.move_rotations


class PoseState:
    """Pose set of one run with per-surface channel blocks cached

    Blocks are K x N with users first, then eavesdroppers, so the horizontal
    stack of all blocks is [H; H_eve].
    """

    def __init__(self, scenario: Scenario, poses: Sequence[SurfacePose], beams: Optional[BeamformerSet] = None):
        self.scenario = scenario
        self.array = scenario.array
        self.k_d = len(scenario.users)
        self._targets = np.array([t.position for t in scenario.terminals])
        self._gains = terminal_path_gains(self._targets, scenario.wavelength)
        self.user_noise, self.eve_noise = scenario_noise(scenario)
        self.beams = beams
        self.reset(
            np.array([p.position for p in poses], dtype=float),
            np.array([p.rotation for p in poses], dtype=float),
        )

    def reset(self, positions: np.ndarray, rotations: np.ndarray) -> None:
        self.positions = np.array(positions, dtype=float)
        self.rotations = np.array(rotations, dtype=float)
        self._blocks = [self._block(q, u) for q, u in zip(self.positions, self.rotations)]

    def _block(self, position, rotation) -> np.ndarray:
        return surface_channel_block(
            position, rotation, self.array, self._targets, self.scenario.wavelength, self._gains
        )

    @property
    def surfaces(self) -> int:
        return self.positions.shape[0]

    @property
    def poses(self) -> List[SurfacePose]:
        return [SurfacePose(position=q, rotation=u) for q, u in zip(self.positions, self.rotations)]

    def channels(self, blocks: Optional[List[np.ndarray]] = None) -> Tuple[np.ndarray, np.ndarray]:
        full = np.hstack(self._blocks if blocks is None else blocks)
        return full[: self.k_d], full[self.k_d:]

    def rate_report(self, beams: Optional[BeamformerSet] = None, clamp: bool = False, blocks=None) -> RateReport:
        H, H_eve = self.channels(blocks)
        beams = self.beams if beams is None else beams
        return sum_secrecy_rate(H, H_eve, beams, self.user_noise, self.eve_noise, clamp=clamp)

    def objective(self, beams: Optional[BeamformerSet] = None) -> float:
        """Raw SSR at the current poses"""
        return self.rate_report(beams).raw_objective

    def _candidate(self, surface: int, position=None, rotation=None):
        q = self.positions[surface] if position is None else np.asarray(position, dtype=float)
        u = self.rotations[surface] if rotation is None else np.asarray(rotation, dtype=float)
        return q, u

    def objective_with(self, surface: int, position=None, rotation=None, beams=None) -> float:
        """Raw SSR with one surface moved, everything else fixed"""
        q, u = self._candidate(surface, position, rotation)
        blocks = list(self._blocks)
        blocks[surface] = self._block(q, u)
        return self.rate_report(beams, blocks=blocks).raw_objective

    def poses_with(self, surface: int, position=None, rotation=None) -> List[SurfacePose]:
        poses = self.poses
        q, u = self._candidate(surface, position, rotation)
        poses[surface] = SurfacePose(position=q, rotation=u)
        return poses

    def feasible_with(self, surface: int, position=None, rotation=None, tol: float = ACCEPT_TOL) -> bool:
        report = check_constraints(
            self.poses_with(surface, position, rotation),
            self.array,
            self.scenario.region,
            self.scenario.d_min,
            tol=tol,
        )
        return report.is_feasible(tol)

    def commit(self, surface: int, position=None, rotation=None) -> None:
        q, u = self._candidate(surface, position, rotation)
        self.positions[surface] = q
        self.rotations[surface] = u
        self._blocks[surface] = self._block(q, u)


@dataclass(frozen=True)
class StepResult:
    point: np.ndarray
    accepted: bool
    backtracks: int
    objective: float


def _safeguarded_step(
    start: np.ndarray,
    target: np.ndarray,
    objective: Callable[[np.ndarray], float],
    feasible: Callable[[np.ndarray], bool],
    base: float,
    config: OptimizerConfig,
    max_step: float,
) -> StepResult:
    """Walk from start towards target, halving until the exact checks pass

    The first trial point lies at most max_step away from start.
    """
    direction = target - start
    if not np.any(direction):
        return StepResult(start, False, 0, base)
    length = float(np.linalg.norm(direction))
    if length > max_step:
        direction = direction * (max_step / length)
    scale = 1.0
    for attempt in range(config.max_backtracks + 1):
        candidate = start + scale * direction
        if feasible(candidate):
            value = objective(candidate)
            if value >= base:
                return StepResult(candidate, True, attempt, value)
        scale *= config.backtrack_shrink
    return StepResult(start, False, config.max_backtracks, base)


def update_position(surface_index: int, state: PoseState, config: OptimizerConfig) -> StepResult:
    """One proximal ascent step on q_b with every other variable fixed"""
    b = surface_index
    scenario = state.scenario
    q_prev = state.positions[b].copy()
    base = state.objective()

    def objective(q):
        return state.objective_with(b, position=q)

    try:
        grad = finite_diff_gradient(objective, q_prev, config.fd_step_pos)
        halfspaces = [
            linearize_min_distance(q_prev, state.positions[j], scenario.d_min)
            for j in range(state.surfaces)
            if j != b
        ]
        halfspaces += position_halfspaces(state.poses, state.array, b)
        target = solve_proximal_qp(QpProblem(grad, q_prev, config.rho_pos, halfspaces, scenario.region))
    except (SolverError, GeometryError) as e:
        logger.warning(f"Position update of surface {b} skipped: {e}")
        return StepResult(q_prev, False, 0, base)

    return _safeguarded_step(
        q_prev, target, objective, lambda q: state.feasible_with(b, position=q), base, config,
        config.step_cap_pos * scenario.wavelength,
    )


def update_rotation(surface_index: int, state: PoseState, config: OptimizerConfig) -> StepResult:
    """One proximal ascent step on u_b; the returned angles are wrapped to [0, 2 pi)"""
    b = surface_index
    u_prev = state.rotations[b].copy()
    base = state.objective()

    def objective(u):
        return state.objective_with(b, rotation=u)

    try:
        grad = finite_diff_gradient(objective, u_prev, config.fd_step_rot)
        halfspaces = linearize_rotation_constraints(u_prev, state.poses, b, state.array)
        target = solve_proximal_qp(QpProblem(grad, u_prev, config.rho_rot, halfspaces))
    except (SolverError, GeometryError) as e:
        logger.warning(f"Rotation update of surface {b} skipped: {e}")
        return StepResult(wrap_angles(u_prev), False, 0, base)

    step = _safeguarded_step(
        u_prev, target, objective, lambda u: state.feasible_with(b, rotation=u), base, config,
        config.step_cap_rot,
    )
    return StepResult(wrap_angles(step.point), step.accepted, step.backtracks, step.objective)


def _azimuth_interval(azimuths: np.ndarray, surface: int, track: CircularTrack, d_min: float):
    """Exact separation interval of one azimuth between its cyclic neighbours"""
    others = np.delete(azimuths, surface)
    if others.size == 0:
        return None
    psi = azimuths[surface]
    chord = min(1.0, d_min / (2.0 * track.radius))
    spacing = 2.0 * math.asin(chord)
    ahead = float(np.min(np.mod(others - psi, 2.0 * math.pi)))
    behind = float(np.min(np.mod(psi - others, 2.0 * math.pi)))
    return psi - behind + spacing, psi + ahead - spacing


def update_azimuth(
    surface_index: int, state: PoseState, config: OptimizerConfig, track: CircularTrack
) -> StepResult:
    """One proximal ascent step on the track azimuth of surface b"""
    b = surface_index
    azimuths = np.array([track.azimuth_of(q) for q in state.positions])
    psi_prev = np.array([azimuths[b]])
    base = state.objective()

    def pose_of(psi):
        return track.pose(float(psi[0]))

    def objective(psi):
        pose = pose_of(psi)
        return state.objective_with(b, position=pose.q, rotation=pose.u)

    def feasible(psi):
        pose = pose_of(psi)
        return state.feasible_with(b, position=pose.q, rotation=pose.u)

    try:
        grad = finite_diff_gradient(objective, psi_prev, config.fd_step_rot)
        halfspaces = []
        interval = _azimuth_interval(azimuths, b, track, state.scenario.d_min)
        if interval is not None:
            lower, upper = interval
            halfspaces = [
                Halfspace(np.array([1.0]), upper, "C3+"),
                Halfspace(np.array([-1.0]), -lower, "C3-"),
            ]
        target = solve_proximal_qp(QpProblem(grad, psi_prev, config.rho_rot, halfspaces))
    except (SolverError, GeometryError) as e:
        logger.warning(f"Azimuth update of surface {b} skipped: {e}")
        return StepResult(psi_prev, False, 0, base)

    step = _safeguarded_step(psi_prev, target, objective, feasible, base, config, config.step_cap_rot)
    return StepResult(wrap_angles(step.point), step.accepted, step.backtracks, step.objective)


@dataclass
class SolveTrace:
    """Outcome of optimize: SSR history, step log and the final state"""
    outer_ssr: List[float]
    inner_ssr: List[List[float]]
    steps: List[StepLog]
    poses: List[SurfacePose]
    beams: BeamformerSet
    report: RateReport
    outer_iterations: int = 0
    warnings: List[str] = field(default_factory=list)

    def is_monotone(self, slack: float = MONOTONE_SLACK) -> bool:
        return all(b - a >= -slack for a, b in zip(self.outer_ssr, self.outer_ssr[1:]))

    def dump(self, scheme: SchemeKind) -> TraceDump:
        return TraceDump(
            scheme=scheme,
            outer_ssr=self.outer_ssr,
            inner_ssr=self.inner_ssr,
            steps=self.steps,
            final_poses=self.poses,
            alpha=self.beams.alpha,
            ssr_bps_hz=self.report.ssr,
            raw_objective=self.report.raw_objective,
            transmit_power_w=self.beams.transmit_power,
            an_power_w=self.beams.an_power,
            warnings=self.warnings,
        )


def _pose_stage(state: PoseState, config: OptimizerConfig, motion: MotionPolicy, outer: int, steps: List[StepLog]) -> List[float]:
    """Inner loop over all surfaces until the SSR gain drops below delta"""
    history: List[float] = []
    if not motion.moves_anything:
        return history

    def record(kind: str, inner: int, b: int, step: StepResult):
        steps.append(StepLog(
            kind=kind, outer=outer, inner=inner, surface=b,
            accepted=step.accepted, backtracks=step.backtracks, objective=step.objective,
        ))

    previous = state.objective()
    for inner in range(1, config.t2_max + 1):
        if motion.circular is not None:
            track = motion.circular
            for b in range(state.surfaces):
                step = update_azimuth(b, state, config, track)
                if step.accepted:
                    pose = track.pose(float(step.point[0]))
                    state.commit(b, position=pose.q, rotation=pose.u)
                record("azimuth", inner, b, step)
        else:
            if motion.move_positions:
                for b in range(state.surfaces):
                    step = update_position(b, state, config)
                    if step.accepted:
                        state.commit(b, position=step.point)
                    record("position", inner, b, step)
            if motion.move_rotations:
                for b in range(state.surfaces):
                    step = update_rotation(b, state, config)
                    if step.accepted:
                        state.commit(b, rotation=step.point)
                    record("rotation", inner, b, step)
        value = state.objective()
        history.append(value)
        logger.debug(f"outer {outer} inner {inner}: raw SSR {value:.6f}")
        if value - previous < config.delta:
            break
        previous = value
    return history


def optimize(
    scenario: Scenario,
    initial_poses: Sequence[SurfacePose],
    config: OptimizerConfig,
    motion: Optional[MotionPolicy] = None,
) -> SolveTrace:
    """Alternate pose updates with the MMSE / AN beamformer design

    The best state seen so far (poses and beamformers together) is kept as the
    incumbent, so the recorded outer SSR never decreases.
    """
    motion = motion or MotionPolicy()
    report = check_constraints(initial_poses, scenario.array, scenario.region, scenario.d_min)
    if not report.is_feasible():
        raise InfeasibleLayoutError(
            "initial poses violate placement constraints: " + "; ".join(report.violations()), report
        )

    grid = config.alpha_grid
    state = PoseState(scenario, initial_poses)
    best_beams, best_value = power_split_search(scenario, initial_poses, grid, channels=state.channels())
    best_positions, best_rotations = state.positions.copy(), state.rotations.copy()
    outer_ssr = [best_value]
    inner_ssr: List[List[float]] = []
    steps: List[StepLog] = []
    logger.info(f"Initial raw SSR {best_value:.4f} at alpha={best_beams.alpha:.2f}")

    iterations = 0
    for outer in range(1, config.t1_max + 1):
        iterations = outer
        state.reset(best_positions, best_rotations)
        H, _ = state.channels()
        if outer == 1:
            alpha, an_vector = config.alpha_max, np.zeros(H.shape[1], dtype=complex)
        else:
            alpha, an_vector = best_beams.alpha, best_beams.an_vector
        stage = BeamformerSet(
            transmit=mmse_transmit(H, alpha, scenario.p_max, scenario.beam_noise_power),
            an_vector=an_vector,
            alpha=alpha,
            degenerate_an=best_beams.degenerate_an,
        )
        if outer > 1 and state.objective(stage) < state.objective(best_beams):
            stage = best_beams
        state.beams = stage

        inner_ssr.append(_pose_stage(state, config, motion, outer, steps))

        beams, value = power_split_search(scenario, state.poses, grid, channels=state.channels())
        stage_value = state.objective(stage)
        if stage_value > value:
            beams, value = stage, stage_value
        improved = value > best_value
        if improved:
            best_beams, best_value = beams, value
            best_positions, best_rotations = state.positions.copy(), state.rotations.copy()
        outer_ssr.append(best_value)
        logger.info(f"Outer iteration {outer}: raw SSR {best_value:.4f} alpha={best_beams.alpha:.2f}")
        if not improved and (outer > 1 or not motion.moves_anything):
            break

    state.reset(best_positions, best_rotations)
    final = state.rate_report(best_beams, clamp=True)
    warnings = [EMPTY_NULL_SPACE] if best_beams.degenerate_an else []
    if warnings:
        logger.warning(f"Final beamformers: {EMPTY_NULL_SPACE}")
    return SolveTrace(
        outer_ssr=outer_ssr,
        inner_ssr=inner_ssr,
        steps=steps,
        poses=state.poses,
        beams=best_beams,
        report=final,
        outer_iterations=iterations,
        warnings=warnings,
    )
