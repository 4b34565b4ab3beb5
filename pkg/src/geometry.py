"""
Surface geometry and placement constraints

PURPOSE: Pose algebra for 6DMA surfaces and the placement constraints C1-C5,
both exact (for acceptance checks) and linearized (for the proximal subproblems)

KEY COMPONENTS:
- rotation_matrix / rotation_derivatives: R(u) = Rz(gamma) Ry(beta) Rx(alpha)
- antenna_positions / surface_normal / normal_jacobian: global element
  positions, broadside direction and its Euler-angle Jacobian
- check_constraints: ConstraintReport with C1, C3, C4 and C5 residuals
- linearize_min_distance / position_halfspaces / linearize_rotation_constraints:
  affine halfspaces a^T x <= b consumed by the QP solver
- outward_pose: radially outward, down-tilted pose on a horizontal circle

CODE STRUCTURE:
1. Rotation algebra
2. Region membership
3. Exact constraint report
4. Halfspace builders
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from .errors import DegenerateLinearizationError
from .models import ArraySpec, DeploymentRegion, RegionShape, SurfacePose, wrap_angles

logger = logging.getLogger(__name__)

ArrayArg = Union[ArraySpec, Sequence[ArraySpec]]


def _rx(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _ry(b: float) -> np.ndarray:
    c, s = math.cos(b), math.sin(b)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rz(g: float) -> np.ndarray:
    c, s = math.cos(g), math.sin(g)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _drx(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[0.0, 0.0, 0.0], [0.0, -s, -c], [0.0, c, -s]])


def _dry(b: float) -> np.ndarray:
    c, s = math.cos(b), math.sin(b)
    return np.array([[-s, 0.0, c], [0.0, 0.0, 0.0], [-c, 0.0, -s]])


def _drz(g: float) -> np.ndarray:
    c, s = math.cos(g), math.sin(g)
    return np.array([[-s, -c, 0.0], [c, -s, 0.0], [0.0, 0.0, 0.0]])


def rotation_matrix(rotation) -> np.ndarray:
    """Rotation R(u) for Euler angles u = (alpha, beta, gamma), applied x then y then z"""
    alpha, beta, gamma = wrap_angles(rotation)
    return _rz(gamma) @ _ry(beta) @ _rx(alpha)


def rotation_derivatives(rotation) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Partial derivatives of R(u) with respect to alpha, beta and gamma"""
    alpha, beta, gamma = (float(x) for x in np.asarray(rotation, dtype=float))
    rx, ry, rz = _rx(alpha), _ry(beta), _rz(gamma)
    return (
        rz @ ry @ _drx(alpha),
        rz @ _dry(beta) @ rx,
        _drz(gamma) @ ry @ rx,
    )


def array_for(arrays: ArrayArg, index: int) -> ArraySpec:
    if isinstance(arrays, ArraySpec):
        return arrays
    return arrays[index]


def antenna_positions(pose: SurfacePose, array: ArraySpec) -> np.ndarray:
    """Global element positions r_{b,n} = q_b + R(u_b) r_n, one row per antenna"""
    local = np.asarray(array.local_positions)
    return pose.q + local @ rotation_matrix(pose.rotation).T


def surface_normal(rotation, array: ArraySpec) -> np.ndarray:
    """Broadside direction R(u) n_local in the global CCS"""
    normal = rotation_matrix(rotation) @ np.asarray(array.local_normal)
    return normal / np.linalg.norm(normal)


def normal_jacobian(rotation, array: ArraySpec) -> np.ndarray:
    """3x3 Jacobian of surface_normal; column k is the derivative along angle k"""
    local = np.asarray(array.local_normal)
    return np.column_stack([d @ local for d in rotation_derivatives(rotation)])


def outward_pose(azimuth: float, radius: float, height: float, downtilt: float) -> SurfacePose:
    """Pose on a horizontal circle with the broadside pointing radially outward and tilted down

    With a local z broadside the resulting normal is
    (cos t cos psi, cos t sin psi, -sin t).
    """
    position = (radius * math.cos(azimuth), radius * math.sin(azimuth), height)
    return SurfacePose(position=position, rotation=(0.0, math.pi / 2.0 + downtilt, azimuth))


def region_excess(position, region: DeploymentRegion) -> float:
    """Signed excess of a point over the region boundary; <= 0 inside"""
    q = np.asarray(position, dtype=float)
    if region.shape == RegionShape.BOX:
        return float(np.max(np.abs(q) - np.asarray(region.half_widths)))
    return float(np.linalg.norm(q) - region.radius)


def region_contains(position, region: DeploymentRegion, tol: float = 1e-9) -> bool:
    return region_excess(position, region) <= tol


@dataclass(frozen=True)
class ConstraintReport:
    """Residuals of the placement constraints for one pose set

    min_distance[(i, j)] = |q_i - q_j|^2 - d_min^2, feasible when >= 0
    reflection[(i, j)] = n_i^T (q_j - q_i), feasible when <= 0
    blockage[i] = n_i^T q_i, feasible when >= 0
    in_region[i] = C1 membership
    """
    min_distance: Dict[Tuple[int, int], float] = field(default_factory=dict)
    reflection: Dict[Tuple[int, int], float] = field(default_factory=dict)
    blockage: Tuple[float, ...] = ()
    in_region: Tuple[bool, ...] = ()
    region_excess: Tuple[float, ...] = ()

    def max_violation(self) -> float:
        worst = [0.0]
        worst += [-r for r in self.min_distance.values()]
        worst += list(self.reflection.values())
        worst += [-r for r in self.blockage]
        worst += list(self.region_excess)
        return float(max(worst))

    def is_feasible(self, tol: float = 1e-9) -> bool:
        return all(self.in_region) and self.max_violation() <= tol

    def violations(self, tol: float = 1e-9) -> List[str]:
        """Human-readable list of violated constraints"""
        out = []
        for i, flag in enumerate(self.in_region):
            if not flag:
                out.append(f"C1 surface {i} outside region by {self.region_excess[i]:.3g} m")
        for (i, j), r in self.min_distance.items():
            if r < -tol:
                out.append(f"C3 surfaces {i},{j} residual {r:.3g} m^2")
        for (i, j), r in self.reflection.items():
            if r > tol:
                out.append(f"C4 surface {i} faces {j} residual {r:.3g}")
        for i, r in enumerate(self.blockage):
            if r < -tol:
                out.append(f"C5 surface {i} faces the CPU residual {r:.3g}")
        return out


def check_constraints(
    poses: Sequence[SurfacePose],
    arrays: ArrayArg,
    region: DeploymentRegion,
    d_min: float,
    tol: float = 1e-9,
) -> ConstraintReport:
    """Evaluate C1, C3, C4 and C5 for a full pose set"""
    positions = [p.q for p in poses]
    normals = [surface_normal(p.rotation, array_for(arrays, i)) for i, p in enumerate(poses)]

    min_distance = {}
    reflection = {}
    for i in range(len(poses)):
        for j in range(len(poses)):
            if i == j:
                continue
            if i < j:
                delta = positions[i] - positions[j]
                min_distance[(i, j)] = float(delta @ delta - d_min ** 2)
            reflection[(i, j)] = float(normals[i] @ (positions[j] - positions[i]))

    excess = tuple(region_excess(q, region) for q in positions)
    return ConstraintReport(
        min_distance=min_distance,
        reflection=reflection,
        blockage=tuple(float(n @ q) for n, q in zip(normals, positions)),
        in_region=tuple(e <= tol for e in excess),
        region_excess=excess,
    )


@dataclass(frozen=True)
class Halfspace:
    """Affine constraint normal^T x <= offset"""
    normal: np.ndarray
    offset: float
    label: str = ""

    def residual(self, x) -> float:
        """normal^T x - offset, feasible when <= 0"""
        return float(self.normal @ np.asarray(x, dtype=float) - self.offset)


def linearize_min_distance(q_prev, q_other, d_min: float) -> Halfspace:
    """First-order inner approximation of |q - q_other| >= d_min around q_prev"""
    q_prev = np.asarray(q_prev, dtype=float)
    delta = q_prev - np.asarray(q_other, dtype=float)
    norm_sq = float(delta @ delta)
    if norm_sq == 0.0:
        raise DegenerateLinearizationError("cannot linearize the distance constraint at coincident centres")
    # -|D|^2 - 2 D^T (q - q_prev) <= -d_min^2
    return Halfspace(
        normal=-2.0 * delta,
        offset=norm_sq - 2.0 * float(delta @ q_prev) - d_min ** 2,
        label="C3",
    )


def position_halfspaces(
    poses: Sequence[SurfacePose], arrays: ArrayArg, surface_index: int
) -> List[Halfspace]:
    """Exact C4/C5 constraints on q_b with every rotation held fixed"""
    b = surface_index
    n_b = surface_normal(poses[b].rotation, array_for(arrays, b))
    out = [Halfspace(normal=-n_b, offset=0.0, label="C5")]
    for j, other in enumerate(poses):
        if j == b:
            continue
        n_j = surface_normal(other.rotation, array_for(arrays, j))
        out.append(Halfspace(normal=-n_b, offset=float(-n_b @ other.q), label=f"C4({b},{j})"))
        out.append(Halfspace(normal=n_j, offset=float(n_j @ other.q), label=f"C4({j},{b})"))
    return out


def linearize_rotation_constraints(
    u_prev, poses: Sequence[SurfacePose], surface_index: int, arrays: ArrayArg
) -> List[Halfspace]:
    """C4/C5 constraints on u_b with n(u) replaced by n(u_prev) + J(u_prev)(u - u_prev)

    u_prev is used as given (not wrapped) so the linearization does not jump at
    the 2 pi seam.
    """
    b = surface_index
    array = array_for(arrays, b)
    u_prev = np.asarray(u_prev, dtype=float)
    n0 = surface_normal(u_prev, array)
    jac = normal_jacobian(u_prev, array)
    q_b = poses[b].q

    def affine(direction: np.ndarray, label: str) -> Halfspace:
        # n(u)^T direction <= 0
        coeff = jac.T @ direction
        return Halfspace(normal=coeff, offset=float(coeff @ u_prev - n0 @ direction), label=label)

    out = [affine(-q_b, "C5")]
    for j, other in enumerate(poses):
        if j != b:
            out.append(affine(other.q - q_b, f"C4({b},{j})"))
    return out
