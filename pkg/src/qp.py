"""
Dense proximal QP solver

PURPOSE: Exact solution of the small proximal subproblems

    maximise  g^T (x - x0) - (rho / 2) |x - x0|^2
    s.t.      a_i^T x <= b_i,  x in region

which is the Euclidean projection of y = x0 + g / rho onto the feasible set.

KEY COMPONENTS:
- QpProblem: gradient, proximal centre, rho, halfspaces and optional region
- project_polyhedron: primal active-set projection started at a feasible point,
  with Bland's rule against cycling at degenerate vertices
- project_by_enumeration: exact face enumeration, used if the active set
  still hits its iteration cap
- solve_proximal_qp: adds box regions as halfspaces and handles ball regions by
  bisection on the ball multiplier
- proximal_objective: value of the subproblem objective

Works in any dimension; the surface updates use 3 (position, rotation) or 1
(circular-track azimuth).
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import QpCycleError, QpInfeasibleError
from .geometry import Halfspace
from .models import DeploymentRegion, RegionShape

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-9
MAX_BISECTIONS = 200
MAX_DOUBLINGS = 200


@dataclass
class QpProblem:
    gradient: np.ndarray
    center: np.ndarray
    rho: float
    halfspaces: List[Halfspace] = field(default_factory=list)
    region: Optional[DeploymentRegion] = None

    def __post_init__(self):
        self.gradient = np.atleast_1d(np.asarray(self.gradient, dtype=float))
        self.center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.gradient.shape != self.center.shape:
            raise ValueError("gradient and center must have the same shape")

    @property
    def dimension(self) -> int:
        return self.center.shape[0]

    @property
    def target(self) -> np.ndarray:
        """Unconstrained maximiser x0 + g / rho"""
        return self.center + self.gradient / self.rho


def proximal_objective(problem: QpProblem, x) -> float:
    step = np.asarray(x, dtype=float) - problem.center
    return float(problem.gradient @ step - 0.5 * problem.rho * step @ step)


def _box_halfspaces(region: DeploymentRegion) -> List[Halfspace]:
    out = []
    for axis, half_width in enumerate(region.half_widths):
        unit = np.zeros(3)
        unit[axis] = 1.0
        out.append(Halfspace(unit, float(half_width), f"box+{axis}"))
        out.append(Halfspace(-unit, float(half_width), f"box-{axis}"))
    return out


def _stack(halfspaces: Sequence[Halfspace], dimension: int):
    if not halfspaces:
        return np.zeros((0, dimension)), np.zeros(0)
    A = np.array([np.atleast_1d(h.normal) for h in halfspaces], dtype=float)
    b = np.array([h.offset for h in halfspaces], dtype=float)
    if A.shape[1] != dimension:
        raise ValueError(f"halfspace dimension {A.shape[1]} does not match problem dimension {dimension}")
    zero = np.linalg.norm(A, axis=1) == 0.0
    if np.any(b[zero] < -FEASIBILITY_TOL):
        raise QpInfeasibleError("constant halfspace 0 <= b with b < 0")
    return A[~zero], b[~zero]


def project_polyhedron(y: np.ndarray, A: np.ndarray, b: np.ndarray, x0: np.ndarray, max_iter: Optional[int] = None) -> np.ndarray:
    """Projection of y onto {x : A x <= b} by a primal active-set method started at feasible x0"""
    x = np.array(x0, dtype=float)
    m = A.shape[0]
    if m == 0:
        return np.array(y, dtype=float)
    slack = b - A @ x
    if np.any(slack < -FEASIBILITY_TOL):
        worst = float(-slack.min())
        raise QpInfeasibleError(f"start point violates a halfspace by {worst:.3g}")

    max_iter = max_iter or 50 * (m + x.shape[0])
    active = np.zeros(m, dtype=bool)
    scale = 1.0 + np.linalg.norm(y) + np.linalg.norm(x)
    # Bland's rule on both sides: lowest-index drop and lowest-index add among ties;
    # the constraint just dropped stays out until x moves
    dropped = -1
    for _ in range(max_iter):
        residual = y - x
        A_w = A[active]
        if A_w.shape[0]:
            coef = np.linalg.lstsq(A_w.T, residual, rcond=None)[0]
            step = residual - A_w.T @ coef
        else:
            step = residual

        if np.linalg.norm(step) <= 1e-13 * scale:
            if not A_w.shape[0]:
                return x
            multipliers = np.linalg.lstsq(A_w.T, residual, rcond=None)[0]
            negative = np.flatnonzero(multipliers < -1e-12 * scale)
            if negative.size == 0:
                return x
            dropped = int(np.flatnonzero(active)[negative[0]])
            active[dropped] = False
            continue

        # ratio test over inactive constraints moving towards their boundary
        rates = A @ step
        blocking = (~active) & (rates > 1e-15 * np.linalg.norm(step))
        if dropped >= 0:
            blocking[dropped] = False
        length = 1.0
        hit = -1
        if np.any(blocking):
            ratios = np.full(m, np.inf)
            ratios[blocking] = np.maximum(b[blocking] - A[blocking] @ x, 0.0) / rates[blocking]
            smallest = float(ratios.min())
            if smallest < 1.0:
                length = smallest
                hit = int(np.flatnonzero(ratios <= smallest + 1e-14)[0])
        if length * np.linalg.norm(step) > 1e-15 * scale:
            dropped = -1
        x = x + length * step
        if hit >= 0:
            active[hit] = True

    raise QpCycleError(f"active-set projection exceeded {max_iter} iterations")


def project_by_enumeration(y: np.ndarray, A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Projection of y onto {x : A x <= b} by checking every face of at most n independent halfspaces

    Exact and finite; the KKT point of the first face whose multipliers are
    non-negative and whose projection is feasible is the projection.
    """
    y = np.asarray(y, dtype=float)
    m, n = A.shape
    tol = 1e-11 * (1.0 + np.linalg.norm(y) + np.abs(b).max(initial=0.0))
    for size in range(0, min(n, m) + 1):
        for subset in itertools.combinations(range(m), size):
            if size:
                A_s, b_s = A[list(subset)], b[list(subset)]
                if np.linalg.matrix_rank(A_s) < size:
                    continue
                multipliers = np.linalg.solve(A_s @ A_s.T, A_s @ y - b_s)
                if multipliers.min() < -tol:
                    continue
                x = y - A_s.T @ multipliers
            else:
                x = y.copy()
            if m == 0 or np.max(A @ x - b) <= tol:
                return x
    raise QpInfeasibleError("no face of the polyhedron satisfies the optimality conditions")


def _project(y: np.ndarray, A: np.ndarray, b: np.ndarray, x0: np.ndarray) -> np.ndarray:
    try:
        return project_polyhedron(y, A, b, x0)
    except QpCycleError as e:
        logger.debug(f"{e}; falling back to face enumeration over {A.shape[0]} halfspaces")
        return project_by_enumeration(y, A, b)


def solve_proximal_qp(problem: QpProblem) -> np.ndarray:
    """Exact maximiser of the proximal subproblem"""
    halfspaces = list(problem.halfspaces)
    region = problem.region
    if region is not None and region.shape == RegionShape.BOX:
        halfspaces += _box_halfspaces(region)
    A, b = _stack(halfspaces, problem.dimension)
    x0 = problem.center
    y = problem.target

    x = _project(y, A, b, x0)
    if region is None or region.shape != RegionShape.BALL:
        return x
    radius = float(region.radius)
    if np.linalg.norm(x) <= radius:
        return x
    if np.linalg.norm(x0) > radius + FEASIBILITY_TOL:
        raise QpInfeasibleError("proximal centre lies outside the ball region")

    # x(mu) = P(y / (1 + mu)) shrinks in norm as the ball multiplier mu grows
    lo, hi = 0.0, 1.0
    x_hi = _project(y / (1.0 + hi), A, b, x0)
    for _ in range(MAX_DOUBLINGS):
        if np.linalg.norm(x_hi) <= radius:
            break
        lo, hi = hi, 2.0 * hi
        x_hi = _project(y / (1.0 + hi), A, b, x0)
    else:
        raise QpInfeasibleError("ball multiplier search did not reach the region")

    for _ in range(MAX_BISECTIONS):
        if hi - lo <= 1e-13 * hi:
            break
        mid = 0.5 * (lo + hi)
        x_mid = _project(y / (1.0 + mid), A, b, x0)
        if np.linalg.norm(x_mid) <= radius:
            hi, x_hi = mid, x_mid
        else:
            lo = mid
    return x_hi
