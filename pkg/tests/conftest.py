"""
Shared fixtures

**Purpose**: Small deterministic scenes reused across the test modules
**Key Components**:
- make_scenario(): hand-placed users/eavesdroppers around a B-surface layout
- toy_scenario / toy_poses / fast_config fixtures
- ACCEPTANCE: flag that enables the long statistical suites
"""
import os
from typing import Sequence, Tuple

import pytest

from src.models import (
    ArraySpec,
    GainPattern,
    OptimizerConfig,
    PatternKind,
    Scenario,
    ScenarioConfig,
    Terminal,
    TerminalKind,
)
from src.scenario import initial_poses

ACCEPTANCE = os.getenv("SIXDMA_ACCEPTANCE") == "1"

acceptance = pytest.mark.skipif(not ACCEPTANCE, reason="set SIXDMA_ACCEPTANCE=1 to run")

WAVELENGTH = 0.125
NOISE = 1e-12

USERS = ((60.0, 10.0, -15.0), (-20.0, 90.0, -30.0))
EVES = ((45.0, -40.0, -10.0),)


def make_scenario(
    surfaces: int = 2,
    antennas: int = 2,
    users: Sequence[Tuple[float, float, float]] = USERS,
    eves: Sequence[Tuple[float, float, float]] = EVES,
    pattern: PatternKind = PatternKind.SECTOR,
    p_max: float = 10.0,
) -> Scenario:
    config = ScenarioConfig(surfaces=surfaces, antennas_per_surface=antennas)
    return Scenario(
        array=ArraySpec.upa(antennas, WAVELENGTH, GainPattern(kind=pattern)),
        users=tuple(Terminal(position=p, noise_power=NOISE, kind=TerminalKind.USER) for p in users),
        eves=tuple(Terminal(position=p, noise_power=NOISE, kind=TerminalKind.EAVESDROPPER) for p in eves),
        surfaces=surfaces,
        wavelength=WAVELENGTH,
        p_max=p_max,
        d_min=config.min_distance,
    )


def layout(surfaces: int = 2, antennas: int = 2):
    return initial_poses(ScenarioConfig(surfaces=surfaces, antennas_per_surface=antennas))


@pytest.fixture
def toy_scenario():
    return make_scenario()


@pytest.fixture
def toy_poses():
    return layout()


@pytest.fixture
def fast_config():
    return OptimizerConfig(t1_max=3, t2_max=3)
