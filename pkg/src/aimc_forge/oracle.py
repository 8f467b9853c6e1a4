"""Independent signal verification: frequency-law fidelity, code
properties, and SNR calibration.

The checks here work only from raw samples plus the ground-truth labels
and parameters. Designed frequency and phase formulas in this module are
implemented independently of the synthesis module, so a perturbed
synthesis constant surfaces as a validation failure instead of cancelling
out.

Noiseless pulses are checked pointwise with the phase-difference
instantaneous-frequency estimator (exact on clean data). Noisy pulses at
SNR >= 0 dB are demodulated by the full designed phase and the residual
frequency offset is measured per block from FFT peaks, which stays
reliable down to 0 dB; below 0 dB law checks are reported as not
applicable.
"""

import dataclasses
import math

import numpy as np
from scipy.signal import medfilt

from . import codes
from .synth import draw_chip_symbols
from .taxonomy import pulse_support

__all__ = ["CheckResult", "ValidationReport", "estimate_if", "psl",
           "designed_frequency", "designed_total_phase",
           "expected_chip_phases", "validate_pulse", "audit_record"]

# Oracle-side copies of the law shape constants (see module docstring).
NLFM_GAMMA = 1.2
MLFM_RIPPLE_FRAC = 0.05
MLFM_RIPPLE_CYCLES = 2.0

# Tolerances. FM fidelity is relative to the class sweep bandwidth; the
# strict bound applies only to noiseless pulses, where the estimator is
# essentially exact.
FM_TOL_NOISELESS = 0.005
FM_TOL_NOISELESS_STRICT = 0.0005
FM_TOL_NOISY = 0.05
UNMOD_TOL_FS = 1e-6
RESIDUAL_TOL_FS = 1e-3
CHIP_TOL_NOISELESS = 1e-3
CHIP_TOL_NOISY = 0.1
SNR_TOL_DB = 0.15


@dataclasses.dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    skipped: bool = False
    note: str = ""


@dataclasses.dataclass
class ValidationReport:
    class_id: str
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks if not c.skipped)

    def failures(self):
        return [c for c in self.checks if not c.passed and not c.skipped]

    def as_dict(self):
        return {"class_id": self.class_id, "passed": self.passed,
                "checks": [dataclasses.asdict(c) for c in self.checks]}


def estimate_if(iq, window=None, sample_rate=1.0e8, median_len=0):
    """Phase-difference instantaneous-frequency estimate, Hz.

    f[n] = angle(iq[n+1] conj(iq[n])) Fs / (2 pi); the estimate sits at
    the midpoint between samples n and n+1. Zero-magnitude products are
    returned as NaN. median_len > 1 applies a median filter of that
    (odd) length.
    """
    iq = np.asarray(iq)
    if window is not None:
        iq = iq[window[0]:window[1]]
    if len(iq) < 2:
        raise ValueError("need at least two samples to estimate frequency")
    prod = iq[1:] * np.conj(iq[:-1])
    f = np.angle(prod) * sample_rate / (2.0 * np.pi)
    f[np.abs(prod) == 0.0] = np.nan
    if median_len and median_len > 1:
        f = medfilt(f, median_len)
    return f


def psl(code_or_iq):
    """Peak-to-max-sidelobe amplitude ratio of the aperiodic
    autocorrelation. Length-1 inputs have no sidelobes (+inf)."""
    if isinstance(code_or_iq, codes.CodeSequence):
        x = np.exp(1j * code_or_iq.phases_rad)
    else:
        x = np.asarray(code_or_iq, dtype=complex)
    n = len(x)
    if n < 1:
        raise ValueError("empty sequence")
    if n == 1:
        return math.inf
    r = np.abs(np.correlate(x, x, mode="full"))
    peak = r[n - 1]
    sidelobe = np.max(np.delete(r, n - 1))
    return math.inf if sidelobe == 0 else float(peak / sidelobe)


def _staircase_levels(cls, params):
    """Per-chip frequency levels for the staircase laws, else None."""
    cp = params.class_params
    law = cls.law
    if law == "sfm":
        k = int(cp["step_count"])
        return cp["bandwidth_hz"] * np.arange(k) / (k - 1)
    if law in ("fsk", "fsk_psk"):
        syms = draw_chip_symbols(cls, params)["fsk_symbols"]
        levels = int(cls.law_args["levels"])
        return cp["bandwidth_hz"] * syms / (levels - 1)
    if law == "costas":
        order = int(cp["costas_order"])
        hops = codes.costas(order, int(cp["costas_variant"])).hop_indices
        return cp["bandwidth_hz"] * hops / (order - 1)
    if law == "lfm_sfm":
        k = int(cp["step_count"])
        return cp["bw_sfm_hz"] * np.arange(k) / (k - 1)
    return None


def _staircase_freq(tau, pw, levels_hz):
    n = len(levels_hz)
    k = np.minimum((tau * n / pw).astype(int), n - 1)
    return np.asarray(levels_hz)[k]


def _staircase_phase(tau, pw, levels_hz):
    levels_hz = np.asarray(levels_hz, dtype=float)
    n = len(levels_hz)
    dwell = pw / n
    k = np.minimum((tau / dwell).astype(int), n - 1)
    prefix = np.concatenate(([0.0], np.cumsum(levels_hz))) * dwell
    return 2.0 * np.pi * (prefix[k] + levels_hz[k] * (tau - k * dwell))


def sweep_bandwidth_hz(cls, params):
    """Reference bandwidth used to normalize FM fidelity errors."""
    cp = params.class_params
    if cls.law == "lfm_sfm":
        return cp["bw_lfm_hz"] + cp["bw_sfm_hz"]
    return cp.get("bandwidth_hz", 0.0)


def designed_frequency(cls, params, tau):
    """Designed modulation frequency f_mod(tau), Hz (carrier excluded)."""
    tau = np.asarray(tau, dtype=float)
    pw = params.pulse_width_s
    cp = params.class_params
    law = cls.law
    if law in ("unmod", "psk", "frank", "p1", "p2", "p3", "p4", "barker"):
        return np.zeros_like(tau)
    if law == "lfm":
        return cls.law_args["direction"] * cp["bandwidth_hz"] * tau / pw
    if law == "nlfm":
        g = NLFM_GAMMA
        return (cp["bandwidth_hz"] / 2.0) * np.tan(g * (2.0 * tau / pw - 1.0)) / np.tan(g)
    if law == "eqfm":
        return cp["bandwidth_hz"] * (2.0 * tau / pw - 1.0) ** 2
    if law == "dlfm":
        b = cp["bandwidth_hz"]
        f = np.where(tau < pw / 2.0, 2.0 * b * tau / pw, b * (2.0 - 2.0 * tau / pw))
        return cls.law_args["direction"] * f
    if law == "mlfm":
        b = cp["bandwidth_hz"]
        return b * tau / pw + MLFM_RIPPLE_FRAC * b * np.sin(
            2.0 * np.pi * MLFM_RIPPLE_CYCLES * tau / pw)
    if law == "expfm":
        a = cp["alpha"]
        return cp["bandwidth_hz"] * np.expm1(a * tau / pw) / np.expm1(a)
    if law in ("sfm", "fsk", "costas"):
        return _staircase_freq(tau, pw, _staircase_levels(cls, params))
    if law == "lfm_psk":
        return cp["bandwidth_hz"] * tau / pw
    if law == "fsk_psk":
        return _staircase_freq(tau, pw, _staircase_levels(cls, params))
    if law == "lfm_sfm":
        stair = _staircase_freq(tau, pw, _staircase_levels(cls, params))
        return cp["bw_lfm_hz"] * tau / pw + stair
    raise KeyError(f"no designed frequency law for class {cls.id!r}")


def _designed_fm_phase(cls, params, tau):
    """Closed-form designed FM phase (chip phases excluded), radians."""
    pw = params.pulse_width_s
    cp = params.class_params
    law = cls.law
    if law in ("unmod", "psk", "frank", "p1", "p2", "p3", "p4", "barker"):
        return np.zeros_like(tau)
    if law in ("lfm", "lfm_psk"):
        direction = cls.law_args.get("direction", 1)
        return direction * np.pi * cp["bandwidth_hz"] * tau ** 2 / pw
    if law == "nlfm":
        g = NLFM_GAMMA
        coef = 2.0 * np.pi * cp["bandwidth_hz"] * pw / (4.0 * g * np.tan(g))
        return coef * np.log(np.cos(g) / np.cos(g * (2.0 * tau / pw - 1.0)))
    if law == "eqfm":
        w = 2.0 * tau / pw - 1.0
        return 2.0 * np.pi * cp["bandwidth_hz"] * (pw / 6.0) * (w ** 3 + 1.0)
    if law == "dlfm":
        b = cp["bandwidth_hz"]
        half = pw / 2.0
        first = 2.0 * np.pi * b * tau ** 2 / pw
        second = 2.0 * np.pi * b * (pw / 4.0 + 2.0 * (tau - half)
                                    - (tau ** 2 - half ** 2) / pw)
        return cls.law_args["direction"] * np.where(tau < half, first, second)
    if law == "mlfm":
        b = cp["bandwidth_hz"]
        c = MLFM_RIPPLE_CYCLES
        lin = b * tau ** 2 / (2.0 * pw)
        osc = MLFM_RIPPLE_FRAC * b * (pw / (2.0 * np.pi * c)) * (
            1.0 - np.cos(2.0 * np.pi * c * tau / pw))
        return 2.0 * np.pi * (lin + osc)
    if law == "expfm":
        a = cp["alpha"]
        coef = 2.0 * np.pi * cp["bandwidth_hz"] / np.expm1(a)
        return coef * ((pw / a) * np.expm1(a * tau / pw) - tau)
    if law in ("sfm", "fsk", "costas", "fsk_psk"):
        return _staircase_phase(tau, pw, _staircase_levels(cls, params))
    if law == "lfm_sfm":
        return np.pi * cp["bw_lfm_hz"] * tau ** 2 / pw \
            + _staircase_phase(tau, pw, _staircase_levels(cls, params))
    raise KeyError(f"no designed phase law for class {cls.id!r}")


def expected_chip_phases(cls, params):
    """Ground-truth chip phases for PM and hybrid classes, else None."""
    cp = params.class_params
    law = cls.law
    if law == "psk":
        syms = draw_chip_symbols(cls, params)["psk_symbols"]
        return syms * 2.0 * np.pi / int(cls.law_args["levels"])
    if law == "lfm_psk":
        syms = draw_chip_symbols(cls, params)["psk_symbols"]
        return syms * 2.0 * np.pi / int(cls.law_args["levels"])
    if law == "fsk_psk":
        return draw_chip_symbols(cls, params)["psk_symbols"] * np.pi
    if law == "barker":
        signs = np.asarray(codes._BARKER[cls.law_args["code_id"]])
        return np.where(signs > 0, 0.0, np.pi)
    if law == "frank":
        m = int(cp["frank_m"])
        i, j = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
        return ((2.0 * np.pi / m) * i * j).reshape(-1)
    if law == "p1":
        m = int(cp["frank_m"])
        grp, n = np.meshgrid(np.arange(1, m + 1), np.arange(1, m + 1), indexing="ij")
        return (-(np.pi / m) * (m - (2 * grp - 1))
                * ((grp - 1) * m + (n - 1))).reshape(-1).astype(float)
    if law == "p2":
        m = int(cp["frank_m"])
        grp, n = np.meshgrid(np.arange(1, m + 1), np.arange(1, m + 1), indexing="ij")
        return ((np.pi / (2.0 * m)) * (2 * n - 1 - m)
                * (2 * grp - 1 - m)).reshape(-1).astype(float)
    if law == "p3":
        nc = int(cp["code_length"])
        n = np.arange(nc, dtype=float)
        return np.pi * n ** 2 / nc
    if law == "p4":
        nc = int(cp["code_length"])
        n = np.arange(nc, dtype=float)
        return np.pi * n ** 2 / nc - np.pi * n
    return None


def designed_total_phase(cls, params, tau):
    """Carrier + FM + chip phase of the designed waveform at tau."""
    phi = 2.0 * np.pi * params.carrier_hz * tau + _designed_fm_phase(cls, params, tau)
    chips = expected_chip_phases(cls, params)
    if chips is not None:
        n_chips = _chip_count_from_params(params)
        k = np.minimum((tau * n_chips / params.pulse_width_s).astype(int),
                       n_chips - 1)
        phi = phi + chips[k]
    return phi


def _wrap(phase):
    return (phase + np.pi) % (2.0 * np.pi) - np.pi


def measured_chip_phases(iq, params, config, fm_phase=None):
    """Per-chip circular-mean phase after removing the carrier (and, for
    hybrid classes, the designed FM phase)."""
    n0, n1 = pulse_support(params, config)
    tau = np.arange(n0, n1) / config.sample_rate - params.toa_s
    z = np.asarray(iq[n0:n1]) * np.exp(-2j * np.pi * params.carrier_hz * tau)
    if fm_phase is not None:
        z = z * np.exp(-1j * fm_phase)
    count = _chip_count_from_params(params)
    k = np.minimum((tau * count / params.pulse_width_s).astype(int), count - 1)
    means = np.full(count, np.nan)
    for chip in range(count):
        sel = k == chip
        if np.any(sel):
            means[chip] = np.angle(np.mean(z[sel]))
    return means


def _chip_count_from_params(params):
    cp = params.class_params
    if "chip_count" in cp:
        return int(cp["chip_count"])
    if "code_length" in cp:
        return int(cp["code_length"])
    if "frank_m" in cp:
        return int(cp["frank_m"]) ** 2
    raise KeyError("parameters define no chip grid")


def _chip_residuals(measured, expected):
    """Absolute chip-phase residuals after removing the best constant
    offset (circular)."""
    ok = ~np.isnan(measured)
    delta = np.angle(np.mean(np.exp(1j * (measured[ok] - expected[ok]))))
    return np.abs(_wrap(measured[ok] - expected[ok] - delta))


def _residual_block_freq(residual, sample_rate, block=512, pad=4):
    """|frequency offset| of a demodulated residual, measured per block
    from the FFT peak; returns the per-block magnitudes."""
    n = len(residual)
    block = int(min(block, max(16, n // 4)))
    n_blocks = n // block
    win = 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(block) / block))
    freqs = np.fft.fftshift(np.fft.fftfreq(pad * block, d=1.0 / sample_rate))
    out = np.empty(n_blocks)
    for b in range(n_blocks):
        seg = residual[b * block:(b + 1) * block] * win
        spec = np.fft.fftshift(np.fft.fft(seg, pad * block))
        out[b] = abs(freqs[int(np.argmax(np.abs(spec)))])
    return out


def validate_pulse(record, config, registry):
    """Run the class-appropriate checks for one record.

    Accepts a clean PulseRecord (strict noiseless tolerances) or a
    NoisyCapture. For noisy records, law-fidelity checks run at
    SNR >= 0 dB and are reported as not applicable below.
    """
    params = record.params
    try:
        cls = registry[record.label]
    except KeyError:
        raise KeyError(f"unknown class: {record.label!r}") from None
    noisy = hasattr(record, "target_snr_db")
    checks = []
    n0, n1 = pulse_support(params, config)
    iq = np.asarray(record.iq)

    if noisy:
        err = abs(record.measured_snr_db - record.target_snr_db)
        checks.append(CheckResult("snr_calibration", err <= SNR_TOL_DB,
                                  err, SNR_TOL_DB))
        if record.target_snr_db < 0:
            checks.append(CheckResult("law_fidelity", True, math.nan, math.nan,
                                      skipped=True,
                                      note="not applicable below 0 dB"))
            if cls.law == "costas":
                checks.append(_costas_check(params))
            return ValidationReport(class_id=record.label, checks=checks)
    else:
        energy = float(np.sum(np.abs(iq) ** 2))
        count = n1 - n0
        checks.append(CheckResult("unit_energy",
                                  abs(energy - count) < 1e-6 * count,
                                  energy, float(count)))

    bw = sweep_bandwidth_hz(cls, params)
    tau = np.arange(n0, n1) / config.sample_rate - params.toa_s

    if noisy:
        residual = iq[n0:n1] * np.exp(-1j * designed_total_phase(cls, params, tau))
        offsets = _residual_block_freq(residual, config.sample_rate)
        value = float(np.median(offsets))
        tol = max(FM_TOL_NOISY * bw, RESIDUAL_TOL_FS * config.sample_rate)
        checks.append(CheckResult("if_median_error", value <= tol, value, tol))
    else:
        f_hat = estimate_if(iq, window=(n0, n1), sample_rate=config.sample_rate)
        tau_mid = (np.arange(n0, n1 - 1) + 0.5) / config.sample_rate - params.toa_s
        f_design = params.carrier_hz + designed_frequency(cls, params, tau_mid)
        value = float(np.nanmedian(np.abs(f_hat - f_design)))
        if bw > 0:
            checks.append(CheckResult("if_median_error",
                                      value <= FM_TOL_NOISELESS * bw,
                                      value, FM_TOL_NOISELESS * bw))
            checks.append(CheckResult("if_median_error_strict",
                                      value <= FM_TOL_NOISELESS_STRICT * bw,
                                      value, FM_TOL_NOISELESS_STRICT * bw))
        else:
            tol = UNMOD_TOL_FS * config.sample_rate
            checks.append(CheckResult("if_median_error", value <= tol,
                                      value, tol))

    expected = expected_chip_phases(cls, params)
    if expected is not None:
        fm_phase = None
        if cls.law in ("lfm_psk", "fsk_psk"):
            fm_phase = _designed_fm_phase(cls, params, tau)
        measured = measured_chip_phases(iq, params, config, fm_phase)
        resid = _chip_residuals(measured, expected)
        metric = float(np.median(resid)) if noisy else float(np.max(resid))
        tol = CHIP_TOL_NOISY if noisy else CHIP_TOL_NOISELESS
        checks.append(CheckResult("chip_phase_error", metric <= tol, metric, tol))
        if cls.law == "barker" and not noisy:
            chips = np.exp(1j * measured)
            n = len(chips)
            value = psl(chips)
            checks.append(CheckResult("barker_psl", abs(value - n) < 1e-9 * n,
                                      value, float(n)))

    if cls.law == "costas":
        checks.append(_costas_check(params))

    return ValidationReport(class_id=record.label, checks=checks)


def _costas_check(params):
    hops = codes.costas(int(params.class_params["costas_order"]),
                        int(params.class_params["costas_variant"]))
    ok = codes.is_costas(hops.hop_indices)
    return CheckResult("costas_distinctness", bool(ok), float(ok), 1.0)


def audit_record(record, config, registry):
    """Deep audit of a stored noisy record: re-synthesize the clean pulse
    from its parameters, run the strict noiseless checks on it, and verify
    the stored samples are that pulse plus calibrated noise."""
    from .synth import generate_pulse

    clean = generate_pulse(record.params, config, registry)
    report = validate_pulse(clean, config, registry)
    noise_part = np.asarray(record.iq, dtype=np.complex128) - clean.iq
    n0, n1 = pulse_support(record.params, config)
    p_signal = float(np.mean(np.abs(clean.iq[n0:n1]) ** 2))
    p_noise = float(np.mean(np.abs(noise_part) ** 2))
    recomputed = 10.0 * np.log10(p_signal / p_noise)
    err_target = abs(recomputed - record.target_snr_db)
    err_stored = abs(recomputed - record.measured_snr_db)
    report.checks.append(CheckResult("snr_calibration",
                                     err_target <= SNR_TOL_DB,
                                     err_target, SNR_TOL_DB))
    report.checks.append(CheckResult("snr_metadata_consistency",
                                     err_stored <= 1e-3, err_stored, 1e-3))
    return report
