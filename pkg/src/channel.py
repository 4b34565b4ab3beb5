"""
Line-of-sight channel model between the 6DMA base station and its terminals

PURPOSE: Builds the hybrid-field channel rows h_k (users) and h_ke (eavesdroppers)
from surface poses, per-surface element gains, steering vectors and the common
free-space path gain

KEY COMPONENTS:
- dod_vector / direction_to_terminal / local_angles: direction bookkeeping
- element_gain: isotropic or sectored element pattern (linear power gain)
- steering_vector / path_gain: per-surface phase terms and common amplitude
- terminal_channel: one channel row, surface-major column ordering
- surface_channel_block: vectorised block of one surface for many terminals
- assemble_channels: stacked H (users) and H_eve (eavesdroppers)

CODE STRUCTURE:
1. Direction helpers
2. Element pattern
3. Per-surface terms
4. Channel assembly

Column ordering is surface-major: surface b owns columns b*N .. b*N + N - 1.
"""
import logging
import math
from typing import Sequence, Tuple

import numpy as np

from .errors import ChannelError, CoincidentPointsError
from .geometry import ArrayArg, array_for, antenna_positions, rotation_matrix
from .models import GainPattern, PatternKind, SurfacePose, Terminal, TerminalKind

logger = logging.getLogger(__name__)

# 1-D complex row of length N*B, and K stacked rows
ChannelVector = np.ndarray
ChannelMatrix = np.ndarray


def dod_vector(azimuth: float, elevation: float) -> np.ndarray:
    """Unit direction (cos el cos az, cos el sin az, sin el)"""
    return np.array([
        math.cos(elevation) * math.cos(azimuth),
        math.cos(elevation) * math.sin(azimuth),
        math.sin(elevation),
    ])


def direction_to_terminal(surface_center, terminal) -> Tuple[np.ndarray, float]:
    """Unit direction f_b from a surface centre to a terminal and the distance d_b"""
    diff = np.asarray(terminal, dtype=float) - np.asarray(surface_center, dtype=float)
    distance = float(np.linalg.norm(diff))
    if distance == 0.0:
        raise CoincidentPointsError("terminal coincides with a surface centre")
    return diff / distance, distance


def local_angles(f, rotation) -> Tuple[float, float]:
    """Local elevation and azimuth of a global direction seen from a rotated surface"""
    local = rotation_matrix(rotation).T @ np.asarray(f, dtype=float)
    elevation = math.asin(float(np.clip(local[2], -1.0, 1.0)))
    azimuth = math.atan2(float(local[1]), float(local[0]))
    return elevation, azimuth


def _pattern_gain(local_dirs: np.ndarray, pattern: GainPattern) -> np.ndarray:
    """Linear gain for local unit directions (rows), broadside along local +z"""
    if pattern.kind == PatternKind.ISOTROPIC:
        return np.ones(local_dirs.shape[0])
    x, y, z = local_dirs[:, 0], local_dirs[:, 1], local_dirs[:, 2]
    # off-broadside angle psi split along the local x and y axes; the split is
    # only undefined at the back pole, where the front-to-back cap applies
    psi = np.degrees(np.arccos(np.clip(z, -1.0, 1.0)))
    rho = np.hypot(x, y)
    safe = np.where(rho > 0.0, rho, 1.0)
    d_theta = np.where(rho > 0.0, psi * x / safe, 0.0)
    d_phi = np.where(rho > 0.0, psi * y / safe, 0.0)
    attenuation = 12.0 * (d_theta / pattern.theta_3db_deg) ** 2 + 12.0 * (d_phi / pattern.phi_3db_deg) ** 2
    gain_db = pattern.max_gain_dbi - np.minimum(attenuation, pattern.front_to_back_db)
    return 10.0 ** (gain_db / 10.0)


def element_gain(elevation: float, azimuth: float, pattern: GainPattern) -> float:
    """Linear power gain g = 10^(A/10) at local angles (elevation, azimuth)"""
    local = dod_vector(azimuth, elevation)[None, :]
    return float(_pattern_gain(local, pattern)[0])


def steering_vector(pose: SurfacePose, array, f, wavelength: float) -> np.ndarray:
    """Entries exp(j 2pi/lambda f^T r_{b,n}), one per antenna"""
    phases = antenna_positions(pose, array) @ np.asarray(f, dtype=float)
    return np.exp(1j * 2.0 * math.pi / wavelength * phases)


def path_gain(distance: float, wavelength: float) -> float:
    """Free-space amplitude lambda / (4 pi d)"""
    if not distance > 0:
        raise ChannelError(f"path gain needs a positive distance, got {distance}")
    return wavelength / (4.0 * math.pi * distance)


def terminal_channel(
    poses: Sequence[SurfacePose], arrays: ArrayArg, terminal: Terminal, wavelength: float
) -> ChannelVector:
    """Channel row of one terminal, surface-major"""
    t = np.asarray(terminal.position)
    v = path_gain(float(np.linalg.norm(t)), wavelength)
    blocks = []
    for b, pose in enumerate(poses):
        array = array_for(arrays, b)
        f, d_b = direction_to_terminal(pose.position, t)
        elevation, azimuth = local_angles(f, pose.rotation)
        g = element_gain(elevation, azimuth, array.gain_pattern)
        phase = np.exp(-1j * 2.0 * math.pi * d_b / wavelength)
        blocks.append(v * math.sqrt(g) * phase * steering_vector(pose, array, f, wavelength))
    return np.concatenate(blocks)


def terminal_path_gains(positions: np.ndarray, wavelength: float) -> np.ndarray:
    distances = np.linalg.norm(np.atleast_2d(positions), axis=1)
    if np.any(distances <= 0):
        raise ChannelError("terminal located at the CPU origin")
    return wavelength / (4.0 * math.pi * distances)


def surface_channel_block(
    position,
    rotation,
    array,
    terminal_positions: np.ndarray,
    wavelength: float,
    path_gains: np.ndarray,
) -> np.ndarray:
    """K x N channel block of one surface towards K terminals"""
    pose = SurfacePose(position=position, rotation=rotation)
    targets = np.atleast_2d(np.asarray(terminal_positions, dtype=float))
    diff = targets - pose.q
    distances = np.linalg.norm(diff, axis=1)
    if np.any(distances == 0.0):
        raise CoincidentPointsError("terminal coincides with a surface centre")
    dirs = diff / distances[:, None]
    local_dirs = dirs @ rotation_matrix(pose.rotation)
    gains = _pattern_gain(local_dirs, array.gain_pattern)
    k = 2.0 * math.pi / wavelength
    steering = np.exp(1j * k * (dirs @ antenna_positions(pose, array).T))
    amplitude = np.asarray(path_gains) * np.sqrt(gains) * np.exp(-1j * k * distances)
    return amplitude[:, None] * steering


def assemble_channels(
    poses: Sequence[SurfacePose], arrays: ArrayArg, terminals: Sequence[Terminal], wavelength: float
) -> Tuple[ChannelMatrix, ChannelMatrix]:
    """Stack user rows into H and eavesdropper rows into H_eve, in terminal order"""
    users = [t for t in terminals if t.kind == TerminalKind.USER]
    eves = [t for t in terminals if t.kind == TerminalKind.EAVESDROPPER]
    total = sum(array_for(arrays, b).antenna_count for b in range(len(poses)))

    def stack(group: Sequence[Terminal]) -> ChannelMatrix:
        if not group:
            return np.zeros((0, total), dtype=complex)
        positions = np.array([t.position for t in group])
        gains = terminal_path_gains(positions, wavelength)
        return np.hstack([
            surface_channel_block(p.position, p.rotation, array_for(arrays, b), positions, wavelength, gains)
            for b, p in enumerate(poses)
        ])

    return stack(users), stack(eves)
