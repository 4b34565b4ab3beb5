"""
Secrecy-rate evaluation

PURPOSE: User SINRs and rates, cooperative-eavesdropper rates and the sum
secrecy rate (SSR) objective for a given channel and beamformer set

KEY COMPONENTS:
- BeamformerSet: transmit matrix W, artificial-noise vector and power split alpha
- RateReport: per-user SINR / rate / eavesdropping rate, clamped SSR and raw objective
- user_sinr / eve_rate: single-user formulas
- sum_secrecy_rate: vectorised evaluation over all users

Rates are in bits/s/Hz (log base 2 for both user and eavesdropper rates).
The optimiser consumes the raw objective; reports use the clamped SSR.
"""
import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BeamformerSet:
    """Transmit beamformers (N*B x K_D), AN vector (N*B) and power split"""
    transmit: np.ndarray
    an_vector: np.ndarray
    alpha: float
    degenerate_an: bool = False

    @property
    def transmit_power(self) -> float:
        return float(np.sum(np.abs(self.transmit) ** 2))

    @property
    def an_power(self) -> float:
        return float(np.sum(np.abs(self.an_vector) ** 2))

    @property
    def total_power(self) -> float:
        return self.transmit_power + self.an_power

    def within_budget(self, p_max: float, tol: float = 1e-9) -> bool:
        return self.total_power <= p_max + tol


@dataclass(frozen=True)
class RateReport:
    sinr: np.ndarray
    user_rate: np.ndarray
    eve_rate: np.ndarray
    secrecy_rate: np.ndarray
    ssr: float
    raw_objective: float
    clamped: bool = True

    @property
    def objective(self) -> float:
        """Value the caller asked for: clamped SSR or raw objective"""
        return self.ssr if self.clamped else self.raw_objective


def _noise_vector(noise, count: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(noise, dtype=float), (count,))


def user_sinr(h_kd: np.ndarray, beams: BeamformerSet, k_d: int, noise_power: float) -> float:
    """|h w_k|^2 / (sum_{i != k} |h w_i|^2 + |h v|^2 + sigma^2)"""
    gains = np.abs(h_kd @ beams.transmit) ** 2
    signal = gains[k_d]
    interference = gains.sum() - signal
    jamming = abs(h_kd @ beams.an_vector) ** 2
    return float(signal / (interference + jamming + noise_power))


def eve_rate(H_eve: np.ndarray, w_kd: np.ndarray, an_vector: np.ndarray, eve_noise) -> float:
    """Rate of cooperative eavesdroppers that cancel multi-user interference"""
    if H_eve.shape[0] == 0:
        return 0.0
    noise = _noise_vector(eve_noise, H_eve.shape[0])
    leakage = np.abs(H_eve @ an_vector) ** 2
    snr = np.sum(np.abs(H_eve @ w_kd) ** 2 / (leakage + noise))
    return float(np.log2(1.0 + snr))


def sum_secrecy_rate(
    H: np.ndarray,
    H_eve: np.ndarray,
    beams: BeamformerSet,
    user_noise,
    eve_noise=None,
    clamp: bool = True,
) -> RateReport:
    """Evaluate every user's secrecy rate and the SSR"""
    k_d = H.shape[0]
    noise = _noise_vector(user_noise, k_d)
    gains = np.abs(H @ beams.transmit) ** 2
    signal = np.diag(gains)
    jamming = np.abs(H @ beams.an_vector) ** 2
    sinr = signal / (gains.sum(axis=1) - signal + jamming + noise)
    user_rate = np.log2(1.0 + sinr)

    if H_eve.shape[0] == 0:
        eve = np.zeros(k_d)
    else:
        e_noise = _noise_vector(user_noise if eve_noise is None else eve_noise, H_eve.shape[0])
        leakage = np.abs(H_eve @ beams.an_vector) ** 2
        captured = np.abs(H_eve @ beams.transmit) ** 2 / (leakage + e_noise)[:, None]
        eve = np.log2(1.0 + captured.sum(axis=0))

    diff = user_rate - eve
    secrecy = np.maximum(diff, 0.0)
    return RateReport(
        sinr=sinr,
        user_rate=user_rate,
        eve_rate=eve,
        secrecy_rate=secrecy,
        ssr=float(secrecy.sum()),
        raw_objective=float(diff.sum()),
        clamped=clamp,
    )
