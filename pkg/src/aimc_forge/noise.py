"""Calibrated complex AWGN.

SNR is defined as in-pulse signal power over per-sample noise power:
signal power is measured over the pulse support only, while noise spans
the whole capture. Noise samples are (g1 + j g2) sigma / sqrt(2) with g1,
g2 independent standard Gaussians from the seeded Box-Muller stream and
sigma^2 = P_signal / 10^(SNR_dB / 10).
"""

import dataclasses

import numpy as np

from .rng import gaussian_pairs
from .taxonomy import pulse_support

__all__ = ["NoisyCapture", "measure_power", "add_awgn"]


@dataclasses.dataclass
class NoisyCapture:
    iq: np.ndarray
    params: object
    label: str
    target_snr_db: float
    measured_snr_db: float
    noise_seed: int


def measure_power(iq, window=None):
    """Mean of |iq[n]|^2 over the given (start, stop) sample window."""
    if window is not None:
        start, stop = window
        iq = iq[start:stop]
    if len(iq) == 0:
        raise ValueError("empty window")
    return float(np.mean(np.abs(iq) ** 2))


def add_awgn(pulse, snr_db, seed, config):
    """Add white complex Gaussian noise over the whole capture, calibrated
    so the in-pulse SNR equals snr_db.

    measured_snr_db is recomputed from the realized noise: in-pulse signal
    power over the mean noise power of the full capture.
    """
    support = pulse_support(pulse.params, config)
    p_signal = measure_power(pulse.iq, support)
    if p_signal <= 0.0:
        raise ValueError("pulse has zero energy; cannot calibrate SNR")
    sigma2 = p_signal / 10.0 ** (snr_db / 10.0)
    n = len(pulse.iq)
    g1, g2 = gaussian_pairs(seed, n)
    noise = (g1 + 1j * g2) * np.sqrt(sigma2 / 2.0)
    p_noise = measure_power(noise)
    measured = 10.0 * np.log10(p_signal / p_noise)
    return NoisyCapture(iq=pulse.iq + noise, params=pulse.params,
                        label=pulse.label, target_snr_db=float(snr_db),
                        measured_snr_db=float(measured), noise_seed=seed)
