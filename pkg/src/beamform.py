"""
Beamformer design for fixed surface poses

PURPOSE: MMSE transmit beamforming with channel-norm power allocation, null-space
artificial noise steered at the eavesdroppers, and the one-dimensional search
over the data/AN power split alpha

KEY COMPONENTS:
- allocate_user_powers: P_i proportional to |h_i|^2, summing to alpha * P_max
- mmse_beamformer: regularised inverse directions, columns scaled to P_i
- null_space_basis: orthonormal basis of null(H) from the SVD
- dominant_eigenvector: deterministic power iteration on a Hermitian PSD matrix
- an_beamformer: AN vector in null(H) maximising leakage to the eavesdroppers
- design_beamformers / power_split_search: full (W, v, alpha) for one alpha or
  the best over a grid

CODE STRUCTURE:
1. Value types
2. Transmit beamformer
3. Artificial noise
4. Power-split search

WHY USED:
- numpy.linalg.solve for the regularised inverse, numpy.linalg.svd for the
  null space, numpy.linalg.eigh only as a fallback when power iteration stalls
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .channel import assemble_channels
from .errors import BeamformingError, DegenerateChannelError
from .models import Scenario, SurfacePose
from .secrecy import BeamformerSet, sum_secrecy_rate

logger = logging.getLogger(__name__)

POWER_ITERATION_TOL = 1e-12
POWER_ITERATION_CAP = 10_000
ZERO_LEAKAGE_RATIO = 1e-12


@dataclass(frozen=True)
class PowerAllocation:
    alpha: float
    per_user_power: np.ndarray
    an_power: float


@dataclass(frozen=True)
class NullSpaceBasis:
    """Orthonormal columns spanning null(H)"""
    columns: np.ndarray

    @property
    def dimension(self) -> int:
        return self.columns.shape[1]


def allocate_user_powers(H: np.ndarray, alpha: float, p_max: float) -> PowerAllocation:
    """Split alpha * P_max across users in proportion to their channel energy"""
    if H.shape[0] < 1:
        raise BeamformingError("power allocation needs at least one user")
    if not 0.0 < alpha < 1.0:
        raise BeamformingError(f"alpha must lie in (0, 1), got {alpha}")
    energy = np.sum(np.abs(H) ** 2, axis=1)
    total = float(energy.sum())
    if total == 0.0:
        raise DegenerateChannelError("all user channels are zero")
    return PowerAllocation(
        alpha=alpha,
        per_user_power=alpha * p_max * energy / total,
        an_power=(1.0 - alpha) * p_max,
    )


def mmse_beamformer(H: np.ndarray, alloc: PowerAllocation, noise_power: float) -> np.ndarray:
    """Directions (H^H P H + sigma^2 I)^-1 H^H, column k rescaled to power P_k"""
    k_d, antennas = H.shape
    if alloc.per_user_power.shape != (k_d,):
        raise BeamformingError(
            f"allocation has {alloc.per_user_power.shape[0]} powers for {k_d} users"
        )
    if not noise_power > 0:
        raise BeamformingError("MMSE regularisation needs a positive noise power")
    H_herm = H.conj().T
    gram = H_herm @ (alloc.per_user_power[:, None] * H) + noise_power * np.eye(antennas)
    directions = np.linalg.solve(gram, H_herm)
    norms = np.linalg.norm(directions, axis=0)
    scale = np.divide(
        np.sqrt(alloc.per_user_power), norms, out=np.zeros_like(norms), where=norms > 0
    )
    return directions * scale[None, :]


def null_space_basis(H: np.ndarray) -> NullSpaceBasis:
    antennas = H.shape[1]
    if H.shape[0] == 0:
        return NullSpaceBasis(np.eye(antennas, dtype=complex))
    _, s, vh = np.linalg.svd(H, full_matrices=True)
    tol = max(H.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    return NullSpaceBasis(vh[rank:].conj().T)


def dominant_eigenvector(
    M: np.ndarray, tol: float = POWER_ITERATION_TOL, max_iter: int = POWER_ITERATION_CAP
) -> np.ndarray:
    """Unit dominant eigenvector of a Hermitian PSD matrix by power iteration

    Starts from the normalised all-ones vector. A zero matrix returns e_1.
    """
    m = M.shape[0]
    scale = np.linalg.norm(M)
    e1 = np.zeros(m, dtype=complex)
    e1[0] = 1.0
    if scale == 0.0:
        return e1

    z = np.ones(m, dtype=complex) / math.sqrt(m)
    if np.linalg.norm(M @ z) <= ZERO_LEAKAGE_RATIO * scale:
        col = int(np.argmax(np.linalg.norm(M, axis=0)))
        z = M[:, col] / np.linalg.norm(M[:, col])

    for _ in range(max_iter):
        w = M @ z
        z_next = w / np.linalg.norm(w)
        overlap = np.vdot(z_next, z)
        if abs(overlap) > 0:
            z_next = z_next * (overlap / abs(overlap))
        if np.linalg.norm(z_next - z) < tol:
            return z_next
        z = z_next

    logger.warning(f"Power iteration did not reach {tol:g} in {max_iter} steps, using eigh")
    _, vecs = np.linalg.eigh(M)
    return vecs[:, -1]


def an_beamformer(
    H: np.ndarray, H_eve: np.ndarray, alpha: float, p_max: float
) -> Tuple[np.ndarray, bool]:
    """Artificial-noise vector in null(H) with maximal leakage to the eavesdroppers

    Returns the vector and a flag that is True when the null space is empty and
    the AN had to be switched off.
    """
    antennas = H.shape[1]
    if H_eve.shape[0] == 0:
        return np.zeros(antennas, dtype=complex), False
    basis = null_space_basis(H)
    if basis.dimension == 0:
        logger.warning("Null space of the user channel is empty, artificial noise disabled")
        return np.zeros(antennas, dtype=complex), True

    projected = H_eve @ basis.columns
    leakage = projected.conj().T @ projected
    reference = float(np.sum(np.abs(H_eve) ** 2))
    if reference == 0.0 or np.linalg.norm(leakage) <= ZERO_LEAKAGE_RATIO * reference:
        z_max = np.zeros(basis.dimension, dtype=complex)
        z_max[0] = 1.0
    else:
        z_max = dominant_eigenvector(leakage)
    return math.sqrt((1.0 - alpha) * p_max) * (basis.columns @ z_max), False


def mmse_transmit(H: np.ndarray, alpha: float, p_max: float, noise_power: float) -> np.ndarray:
    return mmse_beamformer(H, allocate_user_powers(H, alpha, p_max), noise_power)


def design_beamformers(
    H: np.ndarray, H_eve: np.ndarray, alpha: float, p_max: float, noise_power: float
) -> BeamformerSet:
    """Transmit and AN beamformers for one power split"""
    transmit = mmse_transmit(H, alpha, p_max, noise_power)
    an_vector, degenerate = an_beamformer(H, H_eve, alpha, p_max)
    return BeamformerSet(transmit=transmit, an_vector=an_vector, alpha=alpha, degenerate_an=degenerate)


def search_power_split(
    H: np.ndarray,
    H_eve: np.ndarray,
    alpha_grid: Sequence[float],
    p_max: float,
    noise_power: float,
    user_noise=None,
    eve_noise=None,
) -> Tuple[BeamformerSet, float]:
    """Best (W, v, alpha) over the grid by raw SSR; ties keep the first alpha

    Without eavesdroppers the grid collapses to its largest value.
    """
    if not alpha_grid:
        raise BeamformingError("alpha grid is empty")
    grid = [max(alpha_grid)] if H_eve.shape[0] == 0 else list(alpha_grid)
    user_noise = noise_power if user_noise is None else user_noise

    best: Optional[BeamformerSet] = None
    best_value = -math.inf
    for alpha in grid:
        beams = design_beamformers(H, H_eve, alpha, p_max, noise_power)
        value = sum_secrecy_rate(H, H_eve, beams, user_noise, eve_noise, clamp=False).raw_objective
        logger.debug(f"alpha={alpha:.3f} raw SSR={value:.6f}")
        if best is None or value > best_value:
            best, best_value = beams, value
    return best, best_value


def scenario_noise(scenario: Scenario) -> Tuple[np.ndarray, np.ndarray]:
    """Per-user and per-eavesdropper noise powers"""
    return (
        np.array([t.noise_power for t in scenario.users]),
        np.array([t.noise_power for t in scenario.eves]),
    )


def power_split_search(
    scenario: Scenario,
    poses: Sequence[SurfacePose],
    alpha_grid: Sequence[float],
    channels: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> Tuple[BeamformerSet, float]:
    """Grid search over alpha for one scene at fixed poses"""
    if channels is None:
        channels = assemble_channels(poses, scenario.array, scenario.terminals, scenario.wavelength)
    H, H_eve = channels
    user_noise, eve_noise = scenario_noise(scenario)
    return search_power_split(
        H, H_eve, alpha_grid, scenario.p_max, scenario.beam_noise_power, user_noise, eve_noise
    )
