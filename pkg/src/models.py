"""
Data models for the 6DMA secure-beamforming simulator

Data Models and Validation

PURPOSE: Pydantic models for every validated value that crosses a module boundary

KEY COMPONENTS:
- SurfacePose: centre position and Euler rotation of one 6DMA surface
- GainPattern / ArraySpec: element pattern and local antenna layout of a surface
- DeploymentRegion: movement region C for the surface centres
- Terminal: legitimate user or eavesdropper with its noise power
- Scenario: one concrete scene handed to the optimiser
- OptimizerConfig / ScenarioConfig / HarnessConfig: algorithm, scene generation
  and flat config-file settings
- SweepSpec / ResultRecord / StepLog / TraceDump: harness inputs and outputs
- ErrorResponse: diagnostic document printed by the CLI

CODE STRUCTURE:
1. Enumerations
2. Geometry models with shape and angle-wrapping validators
3. Scene models
4. Configuration models
5. Harness records

**Key Components**:

class SurfacePose(BaseModel):
    position: Vector3 = Field(..., description="Surface centre q_b in metres")
    rotation: Vector3   # wrapped to [0, 2pi) by a validator

class OptimizerConfig(BaseModel):
    rho_pos: float = Field(100.0, gt=0)
    @model_validator(mode="after")
    def _check_alpha_bounds(self): ...
"""
import math
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

TWO_PI = 2.0 * math.pi

Vector3 = Tuple[float, float, float]


def wrap_angles(angles: Any) -> np.ndarray:
    """Wrap angles to the representative interval [0, 2pi)"""
    wrapped = np.mod(np.atleast_1d(np.asarray(angles, dtype=float)), TWO_PI)
    wrapped[wrapped >= TWO_PI] = 0.0
    return wrapped


def as_vector3(value: Any) -> Vector3:
    """Coerce sequences and numpy arrays into a finite 3-tuple of floats"""
    arr = np.asarray(value, dtype=float).ravel()
    if arr.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("3-vector has non-finite entries")
    return (float(arr[0]), float(arr[1]), float(arr[2]))


def default_min_distance(wavelength: float) -> float:
    """Minimum centre separation sqrt(2)/2 * lambda + lambda/4"""
    return math.sqrt(2.0) / 2.0 * wavelength + wavelength / 4.0


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


class SchemeKind(str, Enum):
    """Pose handling scheme of one run"""
    PROPOSED = "proposed"
    FPA = "fpa"
    CIRCULAR = "circular"
    ROTATION_ONLY = "rotation_only"


class TerminalKind(str, Enum):
    USER = "user"
    EAVESDROPPER = "eavesdropper"


class RegionShape(str, Enum):
    BALL = "ball"
    BOX = "box"


class PatternKind(str, Enum):
    ISOTROPIC = "isotropic"
    SECTOR = "sector"


class SweepParameter(str, Enum):
    TRANSMIT_POWER = "transmit_power"
    MEAN_USERS = "mean_users"
    MEAN_EVES = "mean_eves"


class SurfacePose(BaseModel):
    """Pose of one 6DMA surface in the global CCS"""
    model_config = ConfigDict(frozen=True)

    position: Vector3 = Field(..., description="Surface centre q_b in metres")
    rotation: Vector3 = Field(
        (0.0, 0.0, 0.0),
        description="Euler angles (alpha, beta, gamma) in radians, wrapped to [0, 2pi)",
    )

    @field_validator("position", mode="before")
    @classmethod
    def _coerce_position(cls, v):
        return as_vector3(v)

    @field_validator("rotation", mode="before")
    @classmethod
    def _wrap_rotation(cls, v):
        return as_vector3(wrap_angles(as_vector3(v)))

    @property
    def q(self) -> np.ndarray:
        return np.array(self.position)

    @property
    def u(self) -> np.ndarray:
        return np.array(self.rotation)


class GainPattern(BaseModel):
    """Element radiation pattern of a 6DMA surface"""
    model_config = ConfigDict(frozen=True)

    kind: PatternKind = Field(PatternKind.SECTOR, description="isotropic or sectored element")
    max_gain_dbi: float = Field(8.0, description="Broadside gain A_max in dBi")
    theta_3db_deg: float = Field(65.0, gt=0, description="Vertical 3 dB beamwidth")
    phi_3db_deg: float = Field(65.0, gt=0, description="Horizontal 3 dB beamwidth")
    front_to_back_db: float = Field(30.0, ge=0, description="Front-to-back ratio")


class ArraySpec(BaseModel):
    """Antenna layout of one surface in its local CCS"""
    model_config = ConfigDict(frozen=True)

    local_positions: Tuple[Vector3, ...] = Field(..., min_length=1, description="r_n in metres")
    local_normal: Vector3 = Field((0.0, 0.0, 1.0), description="Surface broadside, local frame")
    gain_pattern: GainPattern = Field(default_factory=GainPattern)

    @field_validator("local_positions", mode="before")
    @classmethod
    def _coerce_positions(cls, v):
        return tuple(as_vector3(p) for p in np.asarray(v, dtype=float).reshape(-1, 3))

    @field_validator("local_normal", mode="before")
    @classmethod
    def _normalise_normal(cls, v):
        vec = np.asarray(as_vector3(v))
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            raise ValueError("local_normal must be nonzero")
        return as_vector3(vec / norm)

    @model_validator(mode="after")
    def _check_planar_and_centred(self):
        positions = np.asarray(self.local_positions)
        scale = max(1.0, float(np.abs(positions).max()))
        if np.linalg.norm(positions.mean(axis=0)) > 1e-9 * scale:
            raise ValueError("local_positions must have zero mean")
        if np.abs(positions @ np.asarray(self.local_normal)).max() > 1e-9 * scale:
            raise ValueError("local_positions must lie in the plane orthogonal to local_normal")
        return self

    @property
    def antenna_count(self) -> int:
        return len(self.local_positions)

    @classmethod
    def upa(cls, antennas: int, wavelength: float, pattern: Optional[GainPattern] = None) -> "ArraySpec":
        """Uniform planar array with half-wavelength spacing in the local x-y plane"""
        if antennas < 1:
            raise ValueError("antennas must be positive")
        rows = max(d for d in range(1, int(math.isqrt(antennas)) + 1) if antennas % d == 0)
        cols = antennas // rows
        spacing = wavelength / 2.0
        positions = [
            ((c - (cols - 1) / 2.0) * spacing, (r - (rows - 1) / 2.0) * spacing, 0.0)
            for r in range(rows)
            for c in range(cols)
        ]
        return cls(local_positions=positions, gain_pattern=pattern or GainPattern())


class DeploymentRegion(BaseModel):
    """Movement region C of the surface centres, centred at the CPU"""
    model_config = ConfigDict(frozen=True)

    shape: RegionShape = RegionShape.BALL
    radius: Optional[float] = Field(1.0, gt=0, description="Ball radius in metres")
    half_widths: Optional[Vector3] = Field(None, description="Box half-widths in metres")

    @model_validator(mode="after")
    def _check_extent(self):
        if self.shape == RegionShape.BOX:
            if self.half_widths is None or min(self.half_widths) <= 0:
                raise ValueError("box region needs strictly positive half_widths")
        elif self.radius is None:
            raise ValueError("ball region needs a radius")
        return self

    @property
    def horizontal_extent(self) -> float:
        """Largest circle radius around the z-axis that fits in the region"""
        if self.shape == RegionShape.BOX:
            return float(min(self.half_widths[0], self.half_widths[1]))
        return float(self.radius)


class Terminal(BaseModel):
    """Single-antenna legitimate user or eavesdropper"""
    model_config = ConfigDict(frozen=True)

    position: Vector3 = Field(..., description="Global position in metres")
    noise_power: float = Field(..., gt=0, description="AWGN power in watts")
    kind: TerminalKind = TerminalKind.USER

    @field_validator("position", mode="before")
    @classmethod
    def _coerce_position(cls, v):
        return as_vector3(v)


class Scenario(BaseModel):
    """One concrete scene: BS surfaces, terminals and budgets"""
    model_config = ConfigDict(frozen=True)

    array: ArraySpec
    users: Tuple[Terminal, ...] = Field(..., min_length=1)
    eves: Tuple[Terminal, ...] = ()
    surfaces: int = Field(..., ge=1, description="Number of 6DMA surfaces B")
    wavelength: float = Field(0.125, gt=0)
    p_max: float = Field(10.0, gt=0, description="Transmit power budget in watts")
    region: DeploymentRegion = Field(default_factory=DeploymentRegion)
    d_min: float = Field(..., ge=0, description="Minimum centre separation in metres")

    @property
    def terminals(self) -> Tuple[Terminal, ...]:
        return self.users + self.eves

    @property
    def beam_noise_power(self) -> float:
        """Common user noise power used by the MMSE beamformer"""
        return float(np.mean([u.noise_power for u in self.users]))


class OptimizerConfig(BaseModel):
    """Settings of the alternating optimisation"""
    model_config = ConfigDict(frozen=True)

    rho_pos: float = Field(100.0, gt=0, description="Proximal weight for positions")
    rho_rot: float = Field(10.0, gt=0, description="Proximal weight for rotations")
    fd_step_pos: float = Field(1e-5, gt=0, description="Finite-difference step in metres")
    fd_step_rot: float = Field(1e-5, gt=0, description="Finite-difference step in radians")
    delta: float = Field(1e-3, gt=0, description="Inner-loop SSR gain threshold")
    t1_max: int = Field(10, ge=0, description="Outer iteration cap")
    t2_max: int = Field(20, ge=1, description="Inner iteration cap")
    alpha_min: float = Field(0.5, gt=0, lt=1)
    alpha_max: float = Field(0.95, gt=0, lt=1)
    alpha_step: float = Field(0.05, gt=0)
    backtrack_shrink: float = Field(0.5, gt=0, lt=1)
    max_backtracks: int = Field(20, ge=1)
    step_cap_pos: float = Field(0.125, gt=0, description="Largest position step per update, in wavelengths")
    step_cap_rot: float = Field(0.1, gt=0, description="Largest rotation or azimuth step per update in radians")

    @model_validator(mode="after")
    def _check_alpha_bounds(self):
        if self.alpha_min > self.alpha_max:
            raise ValueError("alpha_min must not exceed alpha_max")
        return self

    @property
    def alpha_grid(self) -> Tuple[float, ...]:
        count = int(math.floor((self.alpha_max - self.alpha_min) / self.alpha_step + 1e-9)) + 1
        grid = [round(self.alpha_min + i * self.alpha_step, 12) for i in range(count)]
        return tuple(a for a in grid if a <= self.alpha_max + 1e-12)


class ScenarioConfig(BaseModel):
    """Random scene generation settings; defaults describe the reference deployment"""
    model_config = ConfigDict(frozen=True)

    mean_users: float = Field(7.0, gt=0, description="Poisson mean of K_D")
    mean_eves: float = Field(1.0, gt=0, description="Poisson mean of K_E")
    distance_range: Tuple[float, float] = (20.0, 200.0)
    elevation_range: Tuple[float, float] = (-math.pi / 3.0, 0.0)
    wavelength: float = Field(0.125, gt=0)
    p_max: float = Field(10.0, gt=0)
    noise_power: float = Field(1e-12, gt=0)
    surfaces: int = Field(8, ge=1)
    antennas_per_surface: int = Field(4, ge=1)
    region: DeploymentRegion = Field(default_factory=DeploymentRegion)
    d_min: Optional[float] = Field(None, ge=0)
    downtilt: float = Field(math.radians(15.0), description="Initial downtilt in radians")
    pattern: GainPattern = Field(default_factory=GainPattern)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    hotspot_azimuth: Optional[float] = None
    hotspot_width: Optional[float] = Field(None, gt=0, le=2 * math.pi)
    hotspot_gain: float = Field(1.0, gt=0)

    @field_validator("distance_range")
    @classmethod
    def _check_distance_range(cls, v):
        if not 0 < v[0] < v[1]:
            raise ValueError("distance_range must satisfy 0 < d_lo < d_hi")
        return v

    @field_validator("elevation_range")
    @classmethod
    def _check_elevation_range(cls, v):
        if not -math.pi / 2 <= v[0] <= v[1] <= math.pi / 2:
            raise ValueError("elevation_range must lie in [-pi/2, pi/2] with lo <= hi")
        return v

    @property
    def min_distance(self) -> float:
        return self.d_min if self.d_min is not None else default_min_distance(self.wavelength)


class StepLog(BaseModel):
    """One proximal update attempt of the pose stage"""
    kind: str = Field(..., description="position, rotation or azimuth")
    outer: int
    inner: int
    surface: int
    accepted: bool
    backtracks: int
    objective: float


class TraceDump(BaseModel):
    """JSON form of a SolveTrace"""
    scheme: SchemeKind
    outer_ssr: List[float]
    inner_ssr: List[List[float]]
    steps: List[StepLog]
    final_poses: List[SurfacePose]
    alpha: float
    ssr_bps_hz: float
    raw_objective: float
    transmit_power_w: float
    an_power_w: float
    warnings: List[str] = Field(default_factory=list)


class SweepSpec(BaseModel):
    """Parameter sweep across schemes with paired Monte-Carlo trials"""
    parameter: SweepParameter
    values: Tuple[float, ...] = Field(..., min_length=1)
    trials: int = Field(..., ge=1)
    schemes: Tuple[SchemeKind, ...] = Field(..., min_length=1)
    base_seed: int = Field(0, ge=0, lt=2 ** 64)


class ResultRecord(BaseModel):
    """Outcome of one (scheme, swept value, trial) run"""
    scheme: SchemeKind
    swept_param: str = "none"
    swept_value: Optional[float] = None
    trial: int = Field(0, ge=0)
    seed: int
    k_d: int = Field(..., ge=0)
    k_e: int = Field(..., ge=0)
    ssr_bps_hz: Optional[float] = Field(None, ge=0, description="Clamped sum secrecy rate")
    alpha: Optional[float] = None
    outer_iters: Optional[int] = None
    runtime_ms: float = Field(..., ge=0)
    status: str = "ok"

    def csv_row(self) -> Dict[str, Any]:
        row = self.model_dump()
        row["scheme"] = self.scheme.value
        return row


class HarnessConfig(BaseModel):
    """Flat key-value config file, one field per documented key"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    p_max_w: float = Field(..., gt=0)
    noise_dbm: float = -90.0
    wavelength_m: float = Field(0.125, gt=0)
    surfaces: int = Field(8, ge=1)
    antennas_per_surface: int = Field(4, ge=1)
    mean_users: float = Field(7.0, gt=0)
    mean_eves: float = Field(1.0, gt=0)
    d_min_m: Optional[float] = Field(None, ge=0)
    region_radius_m: float = Field(1.0, gt=0)
    region_shape: RegionShape = RegionShape.BALL
    region_half_widths_m: Optional[Vector3] = None
    alpha_min: float = 0.5
    alpha_max: float = 0.95
    alpha_step: float = 0.05
    delta: float = 1e-3
    t1_max: int = 10
    t2_max: int = 20
    rho_pos: float = 100.0
    rho_rot: float = 10.0
    fd_step_pos: float = 1e-5
    fd_step_rot: float = 1e-5
    backtrack_shrink: float = 0.5
    max_backtracks: int = 20
    step_cap_pos: float = 0.125
    step_cap_rot: float = 0.1
    pattern: str = Field("sector", pattern="^(iso|sector)$")
    seed: int = Field(0, ge=0, lt=2 ** 64)
    distance_min_m: float = 20.0
    distance_max_m: float = 200.0
    elevation_min_deg: float = -60.0
    elevation_max_deg: float = 0.0
    downtilt_deg: float = 15.0
    hotspot_azimuth_deg: Optional[float] = None
    hotspot_width_deg: Optional[float] = None
    hotspot_gain: float = 1.0
    scheme: SchemeKind = SchemeKind.PROPOSED
    trials: int = Field(50, ge=1)

    @field_validator("region_half_widths_m", mode="before")
    @classmethod
    def _split_half_widths(cls, v):
        if isinstance(v, str):
            return tuple(float(x) for x in v.split(","))
        return v

    def to_scenario_config(self) -> ScenarioConfig:
        if self.region_shape == RegionShape.BOX:
            region = DeploymentRegion(shape=RegionShape.BOX, radius=None, half_widths=self.region_half_widths_m)
        else:
            region = DeploymentRegion(radius=self.region_radius_m)
        pattern = GainPattern(kind=PatternKind.ISOTROPIC if self.pattern == "iso" else PatternKind.SECTOR)
        return ScenarioConfig(
            mean_users=self.mean_users,
            mean_eves=self.mean_eves,
            distance_range=(self.distance_min_m, self.distance_max_m),
            elevation_range=(math.radians(self.elevation_min_deg), math.radians(self.elevation_max_deg)),
            wavelength=self.wavelength_m,
            p_max=self.p_max_w,
            noise_power=dbm_to_watts(self.noise_dbm),
            surfaces=self.surfaces,
            antennas_per_surface=self.antennas_per_surface,
            region=region,
            d_min=self.d_min_m,
            downtilt=math.radians(self.downtilt_deg),
            pattern=pattern,
            seed=self.seed,
            hotspot_azimuth=None if self.hotspot_azimuth_deg is None else math.radians(self.hotspot_azimuth_deg),
            hotspot_width=None if self.hotspot_width_deg is None else math.radians(self.hotspot_width_deg),
            hotspot_gain=self.hotspot_gain,
        )

    def to_optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            rho_pos=self.rho_pos,
            rho_rot=self.rho_rot,
            fd_step_pos=self.fd_step_pos,
            fd_step_rot=self.fd_step_rot,
            delta=self.delta,
            t1_max=self.t1_max,
            t2_max=self.t2_max,
            alpha_min=self.alpha_min,
            alpha_max=self.alpha_max,
            alpha_step=self.alpha_step,
            backtrack_shrink=self.backtrack_shrink,
            max_backtracks=self.max_backtracks,
            step_cap_pos=self.step_cap_pos,
            step_cap_rot=self.step_cap_rot,
        )


class ErrorResponse(BaseModel):
    """Error document printed by the CLI"""
    error: str = Field(..., description="Error message")
    details: Optional[str] = Field(None, description="Additional error details")
