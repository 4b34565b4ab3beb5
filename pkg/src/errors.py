"""
Exception hierarchy for the 6DMA secure-beamforming simulator

PURPOSE: One base class for everything the library raises on purpose, so the
harness can tell a failed experiment apart from a programming error

KEY COMPONENTS:
- SixdmaError: common base
- GeometryError family: degenerate linearization points, coincident points,
  infeasible surface layouts
- ChannelError / BeamformingError: invalid channel inputs
- SolverError family: QP infeasibility, active-set cycling, non-finite objectives
- ConfigError: invalid or missing configuration key
"""
from typing import Optional


class SixdmaError(Exception):
    """Base class for all simulator errors"""


class GeometryError(SixdmaError):
    """Invalid or degenerate surface geometry"""


class DegenerateLinearizationError(GeometryError):
    """Minimum-distance constraint linearized around coincident centres"""


class CoincidentPointsError(GeometryError):
    """A terminal sits exactly on a surface centre"""


class InfeasibleLayoutError(GeometryError):
    """A pose set violates the placement constraints C1-C5"""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class ChannelError(SixdmaError):
    """Invalid input to the channel model"""


class BeamformingError(SixdmaError):
    """Invalid input to the beamformer design"""


class DegenerateChannelError(BeamformingError):
    """Channel matrix carries no energy, power proportions are undefined"""


class SolverError(SixdmaError):
    """Numerical optimisation failure"""


class QpInfeasibleError(SolverError):
    """Proximal subproblem has no feasible point at its centre"""


class QpCycleError(SolverError):
    """Active-set iteration cap reached"""


class NonFiniteObjectiveError(SolverError):
    """Objective evaluated to NaN or infinity during differencing"""


class ConfigError(SixdmaError):
    """Configuration value missing or invalid"""

    def __init__(self, key: Optional[str], message: str):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)
