"""
Random scene generation and scheme baselines

PURPOSE: Draws user/eavesdropper layouts from a Poisson model around the base
station, builds the initial surface layout and maps each scheme onto the poses
it starts from and the pose variables it may move

KEY COMPONENTS:
- trial_seed / trial_rng: per-trial random streams derived from a base seed
- draw_counts: K_D ~ Poisson (resampled until >= 1), K_E ~ Poisson
- generate_terminals: positions uniform in volume over the distance/elevation
  shell, with an optional azimuth hotspot of higher intensity
- build_scenario: Scenario for one trial
- initial_poses: evenly spaced, outward-facing, down-tilted surfaces
- baseline_poses: SchemePolicy (initial poses + MotionPolicy) per scheme

CODE STRUCTURE:
1. Seeds and counts
2. Terminal positions
3. Surface layouts and schemes

Terminal draws depend only on (base seed, trial index), never on the scheme,
so schemes compared on one trial index see identical terminals.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import InfeasibleLayoutError
from .geometry import check_constraints
from .models import (
    ArraySpec,
    Scenario,
    ScenarioConfig,
    SchemeKind,
    SurfacePose,
    Terminal,
    TerminalKind,
)
from .psca import CircularTrack, MotionPolicy

logger = logging.getLogger(__name__)

LAYOUT_RADIUS_FRACTION = 0.7


def trial_seed(base_seed: int, trial: int) -> int:
    """First 64-bit word of SeedSequence([base_seed, trial])"""
    state = np.random.SeedSequence([base_seed, trial]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def trial_rng(base_seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(trial_seed(base_seed, trial))


def draw_counts(config: ScenarioConfig, rng: np.random.Generator) -> Tuple[int, int]:
    """(K_D, K_E); zero-user draws are redrawn"""
    k_d = int(rng.poisson(config.mean_users))
    while k_d < 1:
        k_d = int(rng.poisson(config.mean_users))
    k_e = int(rng.poisson(config.mean_eves))
    return k_d, k_e


def _sample_azimuths(config: ScenarioConfig, rng: np.random.Generator, count: int) -> np.ndarray:
    if config.hotspot_azimuth is None or config.hotspot_width is None:
        return rng.uniform(-math.pi, math.pi, count)
    width = config.hotspot_width
    rest = 2.0 * math.pi - width
    p_hot = config.hotspot_gain * width / (config.hotspot_gain * width + rest)
    hot = rng.uniform(size=count) < p_hot
    offsets = np.where(
        hot,
        rng.uniform(-width / 2.0, width / 2.0, count),
        width / 2.0 + rng.uniform(0.0, rest, count),
    )
    return np.angle(np.exp(1j * (config.hotspot_azimuth + offsets)))


def sample_positions(config: ScenarioConfig, rng: np.random.Generator, count: int) -> np.ndarray:
    """count x 3 positions with uniform volume density inside the shell"""
    d_lo, d_hi = config.distance_range
    el_lo, el_hi = config.elevation_range
    radii = rng.uniform(d_lo ** 3, d_hi ** 3, count) ** (1.0 / 3.0)
    elevations = np.arcsin(rng.uniform(math.sin(el_lo), math.sin(el_hi), count))
    azimuths = _sample_azimuths(config, rng, count)
    return np.column_stack([
        radii * np.cos(elevations) * np.cos(azimuths),
        radii * np.cos(elevations) * np.sin(azimuths),
        radii * np.sin(elevations),
    ])


def generate_terminals(config: ScenarioConfig, rng: np.random.Generator) -> List[Terminal]:
    """Users first, then eavesdroppers"""
    k_d, k_e = draw_counts(config, rng)
    positions = sample_positions(config, rng, k_d + k_e)
    return [
        Terminal(
            position=p,
            noise_power=config.noise_power,
            kind=TerminalKind.USER if i < k_d else TerminalKind.EAVESDROPPER,
        )
        for i, p in enumerate(positions)
    ]


def build_scenario(config: ScenarioConfig, terminals: List[Terminal]) -> Scenario:
    array = ArraySpec.upa(config.antennas_per_surface, config.wavelength, config.pattern)
    return Scenario(
        array=array,
        users=tuple(t for t in terminals if t.kind == TerminalKind.USER),
        eves=tuple(t for t in terminals if t.kind == TerminalKind.EAVESDROPPER),
        surfaces=config.surfaces,
        wavelength=config.wavelength,
        p_max=config.p_max,
        region=config.region,
        d_min=config.min_distance,
    )


def layout_track(config: ScenarioConfig) -> CircularTrack:
    return CircularTrack(
        radius=LAYOUT_RADIUS_FRACTION * config.region.horizontal_extent,
        height=0.0,
        downtilt=config.downtilt,
    )


def initial_poses(config: ScenarioConfig) -> List[SurfacePose]:
    """B surfaces evenly spaced in azimuth on the layout circle"""
    track = layout_track(config)
    surfaces = config.surfaces
    d_min = config.min_distance
    if surfaces > 1:
        spacing = 2.0 * track.radius * math.sin(math.pi / surfaces)
        if spacing < d_min:
            raise InfeasibleLayoutError(
                f"{surfaces} surfaces on a {track.radius:.3f} m circle are {spacing:.4f} m apart, "
                f"below d_min={d_min:.4f} m"
            )
    poses = [track.pose(2.0 * math.pi * b / surfaces) for b in range(surfaces)]
    array = ArraySpec.upa(config.antennas_per_surface, config.wavelength, config.pattern)
    report = check_constraints(poses, array, config.region, d_min)
    if not report.is_feasible():
        raise InfeasibleLayoutError(
            "initial layout violates placement constraints: " + "; ".join(report.violations()), report
        )
    return poses


@dataclass(frozen=True)
class SchemePolicy:
    kind: SchemeKind
    initial_poses: List[SurfacePose]
    motion: MotionPolicy


def baseline_poses(kind: SchemeKind, config: ScenarioConfig) -> SchemePolicy:
    """Starting poses and movable variables for one scheme"""
    poses = initial_poses(config)
    if kind == SchemeKind.FPA:
        motion = MotionPolicy(move_positions=False, move_rotations=False)
    elif kind == SchemeKind.CIRCULAR:
        motion = MotionPolicy(move_positions=False, move_rotations=False, circular=layout_track(config))
    elif kind == SchemeKind.ROTATION_ONLY:
        motion = MotionPolicy(move_positions=False, move_rotations=True)
    else:
        motion = MotionPolicy()
    return SchemePolicy(kind=kind, initial_poses=poses, motion=motion)


def scenario_for_trial(
    config: ScenarioConfig, trial: int, base_seed: Optional[int] = None
) -> Tuple[Scenario, int]:
    """Scenario of one trial index and the seed that produced it"""
    seed = trial_seed(config.seed if base_seed is None else base_seed, trial)
    terminals = generate_terminals(config, np.random.default_rng(seed))
    return build_scenario(config, terminals), seed
