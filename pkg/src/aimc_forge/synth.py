"""Waveform synthesis: per-class baseband phase laws and full-capture
pulse assembly.

A pulse is a unit-amplitude complex exponential inside its support and
exactly zero outside: iq[n] = exp(j phi(t_n - toa)) with

    phi(tau) = 2 pi f_c tau + phi_mod(tau)

All laws are evaluated in closed form (no phase accumulators), so
synthesis is a pure function of (params, config). Numeric constants of
every law live in LAW_CONSTANTS and are read at call time; the oracle
module carries an independent copy of the law math, so perturbing a
constant here is caught by validation there.
"""

import dataclasses

import numpy as np

from . import codes
from .errors import SynthesisError
from .rng import Xoshiro256StarStar, derive_stream_seed, STREAM_CHIPS
from .taxonomy import pulse_support

__all__ = ["PulseRecord", "LAW_CONSTANTS", "phase_law", "mod_phase",
           "generate_pulse", "draw_chip_symbols", "chip_grid",
           "law_constant_names"]


@dataclasses.dataclass
class PulseRecord:
    """One synthesized capture: complex samples plus ground truth."""
    iq: np.ndarray
    params: object
    label: str


# Every numeric constant a law uses, keyed by law id. scale-type entries
# are dimensionless multipliers with nominal value 1.
LAW_CONSTANTS = {
    "carrier": {"scale": 1.0},
    "lfm": {"sweep_scale": 1.0},
    "nlfm": {"gamma": 1.2, "sweep_scale": 1.0},
    "sfm": {"span_scale": 1.0},
    "eqfm": {"span_scale": 1.0, "center_frac": 0.5},
    "dlfm": {"span_scale": 1.0},
    "mlfm": {"slope_scale": 1.0, "ripple_frac": 0.05, "ripple_cycles": 2.0},
    "expfm": {"span_scale": 1.0},
    "fsk": {"span_scale": 1.0},
    "costas": {"span_scale": 1.0},
    "psk": {"circle_scale": 1.0},
    "frank": {"unit_scale": 1.0},
    "p1": {"unit_scale": 1.0},
    "p2": {"unit_scale": 1.0},
    "p3": {"unit_scale": 1.0},
    "p4": {"unit_scale": 1.0},
    "barker": {"mark_phase_rad": np.pi},
}


def law_constant_names(law):
    """(law, name) pairs of every constant the given law reads, including
    the shared carrier coupling."""
    pairs = [("carrier", "scale")]
    for part in _LAW_PARTS.get(law, (law,)):
        pairs.extend((part, k) for k in LAW_CONSTANTS.get(part, ()))
    return pairs


# Hybrid laws are compositions; their constants are the parts' constants.
_LAW_PARTS = {
    "lfm_psk": ("lfm", "psk"),
    "fsk_psk": ("fsk", "psk"),
    "lfm_sfm": ("lfm", "sfm"),
    "unmod": (),
}


def draw_chip_symbols(cls, params):
    """Deterministically derive the per-pulse random code symbols.

    Returns a dict with any of "fsk_symbols" (tone indices) and
    "psk_symbols" (phase-state indices). Draw order is fixed: FSK symbols
    first, then PSK symbols, each chip_count draws from the chip stream.
    """
    out = {}
    law = cls.law
    if law not in ("fsk", "psk", "lfm_psk", "fsk_psk"):
        return out
    rng = Xoshiro256StarStar(derive_stream_seed(params.seed, STREAM_CHIPS))
    m = int(params.class_params["chip_count"])
    levels = int(cls.law_args["levels"])
    if law in ("fsk", "fsk_psk"):
        out["fsk_symbols"] = np.array([rng.randint(0, levels - 1) for _ in range(m)])
    if law in ("psk", "lfm_psk"):
        out["psk_symbols"] = np.array([rng.randint(0, levels - 1) for _ in range(m)])
    elif law == "fsk_psk":
        # hybrid: FSK tones use the class levels, phase chips are binary
        out["psk_symbols"] = np.array([rng.randint(0, 1) for _ in range(m)])
    return out


def chip_grid(tau, pulse_width, n_chips):
    """Chip index of each in-pulse time, clipped to the last chip."""
    tc = pulse_width / n_chips
    return np.minimum((tau / tc).astype(int), n_chips - 1), tc


def _staircase_phase(tau, pulse_width, tone_hz):
    """Continuous-phase staircase: integrate a per-chip constant-frequency
    sequence. tone_hz is one frequency per chip."""
    n_chips = len(tone_hz)
    k, tc = chip_grid(tau, pulse_width, n_chips)
    prefix = np.concatenate(([0.0], np.cumsum(tone_hz))) * tc
    return 2.0 * np.pi * (prefix[k] + tone_hz[k] * (tau - k * tc))


def _mod_lfm(tau, pw, bw, direction, scale):
    # f(t) = +/- scale * B t / T  ->  phi = +/- pi scale (B/T) t^2
    return direction * np.pi * scale * (bw / pw) * tau ** 2


def _mod_nlfm(tau, pw, bw, gamma, scale):
    # f(t) = (B/2) tan(g (2t/T - 1)) / tan(g), integrated in closed form
    coef = 2.0 * np.pi * scale * bw * pw / (4.0 * gamma * np.tan(gamma))
    return coef * np.log(np.cos(gamma) / np.cos(gamma * (2.0 * tau / pw - 1.0)))


def _mod_eqfm(tau, pw, bw, scale, center):
    # even-quadratic (V-shaped) frequency law spanning [0, B]
    w = 2.0 * tau / pw - 2.0 * center
    return 2.0 * np.pi * scale * bw * (pw / 6.0) * (w ** 3 + (2.0 * center) ** 3)


def _mod_dlfm(tau, pw, bw, direction, scale):
    # two back-to-back linear sweeps: 0 -> B over the first half,
    # B -> 0 over the second (mirrored for down_up)
    half = pw / 2.0
    b = scale * bw
    phi_first = 2.0 * np.pi * b * tau ** 2 / pw
    phi_at_half = 2.0 * np.pi * b * pw / 4.0
    phi_second = phi_at_half + 2.0 * np.pi * b * (
        2.0 * (tau - half) - (tau ** 2 - half ** 2) / pw)
    return direction * np.where(tau < half, phi_first, phi_second)


def _mod_mlfm(tau, pw, bw, slope, ripple, cycles):
    # linear sweep plus a small sinusoidal perturbation
    lin = slope * bw * tau ** 2 / (2.0 * pw)
    osc = ripple * bw * (pw / (2.0 * np.pi * cycles)) * (
        1.0 - np.cos(2.0 * np.pi * cycles * tau / pw))
    return 2.0 * np.pi * (lin + osc)


def _mod_expfm(tau, pw, bw, alpha, scale):
    # f(t) = B (e^(a t/T) - 1) / (e^a - 1)
    coef = 2.0 * np.pi * scale * bw / np.expm1(alpha)
    return coef * ((pw / alpha) * np.expm1(alpha * tau / pw) - tau)


def mod_phase(cls, params, tau):
    """Modulation phase phi_mod(tau) of the class law, radians."""
    tau = np.asarray(tau, dtype=float)
    pw = params.pulse_width_s
    cp = params.class_params
    law = cls.law
    c = LAW_CONSTANTS

    if law == "unmod":
        return np.zeros_like(tau)
    if law == "lfm":
        return _mod_lfm(tau, pw, cp["bandwidth_hz"], cls.law_args["direction"],
                        c["lfm"]["sweep_scale"])
    if law == "nlfm":
        return _mod_nlfm(tau, pw, cp["bandwidth_hz"], c["nlfm"]["gamma"],
                         c["nlfm"]["sweep_scale"])
    if law == "sfm":
        k = int(cp["step_count"])
        span = c["sfm"]["span_scale"] * cp["bandwidth_hz"]
        tones = span * np.arange(k) / (k - 1)
        return _staircase_phase(tau, pw, tones)
    if law == "eqfm":
        return _mod_eqfm(tau, pw, cp["bandwidth_hz"], c["eqfm"]["span_scale"],
                         c["eqfm"]["center_frac"])
    if law == "dlfm":
        return _mod_dlfm(tau, pw, cp["bandwidth_hz"], cls.law_args["direction"],
                         c["dlfm"]["span_scale"])
    if law == "mlfm":
        m = c["mlfm"]
        return _mod_mlfm(tau, pw, cp["bandwidth_hz"], m["slope_scale"],
                         m["ripple_frac"], m["ripple_cycles"])
    if law == "expfm":
        return _mod_expfm(tau, pw, cp["bandwidth_hz"], cp["alpha"],
                          c["expfm"]["span_scale"])
    if law == "fsk":
        syms = draw_chip_symbols(cls, params)["fsk_symbols"]
        levels = int(cls.law_args["levels"])
        span = c["fsk"]["span_scale"] * cp["bandwidth_hz"]
        tones = span * syms / (levels - 1)
        return _staircase_phase(tau, pw, tones)
    if law == "costas":
        hops = codes.costas(int(cp["costas_order"]), int(cp["costas_variant"]))
        order = int(cp["costas_order"])
        span = c["costas"]["span_scale"] * cp["bandwidth_hz"]
        tones = span * hops.hop_indices / (order - 1)
        return _staircase_phase(tau, pw, tones)
    if law == "psk":
        syms = draw_chip_symbols(cls, params)["psk_symbols"]
        levels = int(cls.law_args["levels"])
        step = c["psk"]["circle_scale"] * 2.0 * np.pi / levels
        k, _ = chip_grid(tau, pw, len(syms))
        return step * syms[k]
    if law in ("frank", "p1", "p2", "p3", "p4"):
        scale = c[law]["unit_scale"]
        if law in ("frank", "p1", "p2"):
            seq = getattr(codes, law)(int(cp["frank_m"]), unit_scale=scale)
        else:
            seq = getattr(codes, law)(int(cp["code_length"]), unit_scale=scale)
        k, _ = chip_grid(tau, pw, len(seq))
        return seq.phases_rad[k]
    if law == "barker":
        seq = codes.barker(cls.law_args["code_id"],
                           mark_phase=c["barker"]["mark_phase_rad"])
        k, _ = chip_grid(tau, pw, len(seq))
        return seq.phases_rad[k]
    if law == "lfm_psk":
        syms = draw_chip_symbols(cls, params)["psk_symbols"]
        levels = int(cls.law_args["levels"])
        step = c["psk"]["circle_scale"] * 2.0 * np.pi / levels
        k, _ = chip_grid(tau, pw, len(syms))
        return _mod_lfm(tau, pw, cp["bandwidth_hz"], 1, c["lfm"]["sweep_scale"]) \
            + step * syms[k]
    if law == "fsk_psk":
        drawn = draw_chip_symbols(cls, params)
        levels = int(cls.law_args["levels"])
        span = c["fsk"]["span_scale"] * cp["bandwidth_hz"]
        tones = span * drawn["fsk_symbols"] / (levels - 1)
        step = c["psk"]["circle_scale"] * np.pi  # binary phase component
        k, _ = chip_grid(tau, pw, len(tones))
        return _staircase_phase(tau, pw, tones) + step * drawn["psk_symbols"][k]
    if law == "lfm_sfm":
        k = int(cp["step_count"])
        span = c["sfm"]["span_scale"] * cp["bw_sfm_hz"]
        tones = span * np.arange(k) / (k - 1)
        return _mod_lfm(tau, pw, cp["bw_lfm_hz"], 1, c["lfm"]["sweep_scale"]) \
            + _staircase_phase(tau, pw, tones)
    raise SynthesisError(f"no synthesis law registered for {cls.id!r} ({law})")


def phase_law(cls, params, t):
    """Total phase at seconds-within-pulse t: carrier term plus the class
    modulation law. t must lie in [0, pulse_width)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t >= params.pulse_width_s):
        raise ValueError("t outside the pulse")
    carrier = 2.0 * np.pi * LAW_CONSTANTS["carrier"]["scale"] * params.carrier_hz * t
    return carrier + mod_phase(cls, params, t)


def generate_pulse(params, config, registry):
    """Assemble the full capture: unit-amplitude modulated exponential on
    the pulse support, zeros elsewhere."""
    try:
        cls = registry[params.class_id]
    except KeyError:
        raise SynthesisError(f"unknown class: {params.class_id!r}") from None
    iq = np.zeros(config.capture_len, dtype=np.complex128)
    n0, n1 = pulse_support(params, config)
    if n1 <= n0:
        raise SynthesisError("pulse support is empty")
    tau = np.arange(n0, n1) / config.sample_rate - params.toa_s
    # guard float fuzz at the support edges so phase_law's domain holds
    tau = np.clip(tau, 0.0, np.nextafter(params.pulse_width_s, 0.0))
    iq[n0:n1] = np.exp(1j * phase_law(cls, params, tau))
    return PulseRecord(iq=iq, params=params, label=params.class_id)
