"""Modulation-class registry, generation configuration, and per-pulse
parameter sampling.

The default registry holds 33 waveform classes split into three families:
13 frequency-modulated (FM), 17 phase-modulated (PM) and 3 hybrid (HM)
classes. Class order is canonical: it defines the class index used in
seed derivation, so reordering the registry changes generated corpora.
"""

import dataclasses
import json
import math
from enum import Enum

from .errors import ConfigError
from .rng import Xoshiro256StarStar, derive_pulse_seed, derive_stream_seed, STREAM_PARAMS

__all__ = [
    "Family",
    "ModulationClass",
    "GenerationConfig",
    "PulseParams",
    "register_default_classes",
    "sample_pulse_params",
    "derive_pulse_seed",
    "pulse_support",
    "load_config",
    "desk_scale_config",
]


class Family(str, Enum):
    FM = "FM"
    PM = "PM"
    HM = "HM"


@dataclasses.dataclass(frozen=True)
class ModulationClass:
    """One registered waveform class.

    param_schema maps parameter names to draw specs, evaluated in
    declaration order by sample_pulse_params:
      ("uniform", lo, hi)   float uniform on [lo, hi)
      ("int", lo, hi)       integer uniform on [lo, hi] inclusive
      ("choice", values)    uniform pick from a tuple
      ("config_int", name)  integer uniform over a config range field
      ("fixed", value)      constant
    """

    id: str
    family: Family
    law: str
    param_schema: dict = dataclasses.field(default_factory=dict)
    law_args: dict = dataclasses.field(default_factory=dict)


@dataclasses.dataclass(frozen=True)
class GenerationConfig:
    sample_rate: float = 1.0e8
    capture_len: int = 100_000
    pulses_per_class: int = 1000
    snr_levels_db: tuple = (10.0, 5.0, 0.0, -2.0, -4.0, -6.0, -8.0,
                            -10.0, -12.0, -14.0, -16.0, -18.0, -20.0)
    master_seed: int = 2025
    carrier_range_hz: tuple = (5.0e6, 45.0e6)
    pulse_width_range_s: tuple = (50.0e-6, 500.0e-6)
    chip_count_range: tuple = (16, 64)

    @property
    def capture_duration_s(self):
        return self.capture_len / self.sample_rate

    def validate(self, registry=None):
        """Raise ConfigError naming the offending field."""
        if self.sample_rate <= 0:
            raise ConfigError("sample_rate must be positive")
        if self.capture_len < 2:
            raise ConfigError("capture_len must be at least 2 samples")
        if self.pulses_per_class < 1:
            raise ConfigError("pulses_per_class must be at least 1")
        if len(self.snr_levels_db) == 0:
            raise ConfigError("snr_levels_db must not be empty")
        if any(b >= a for a, b in zip(self.snr_levels_db, self.snr_levels_db[1:])):
            raise ConfigError("snr_levels_db must be strictly decreasing")
        if not (0 <= self.master_seed <= 0xFFFFFFFFFFFFFFFF):
            raise ConfigError("master_seed must fit in 64 bits")
        for name in ("carrier_range_hz", "pulse_width_range_s", "chip_count_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"{name} is an empty range")
        if self.pulse_width_range_s[0] <= 0:
            raise ConfigError("pulse_width_range_s must be positive")
        if self.pulse_width_range_s[1] > self.capture_duration_s:
            raise ConfigError(
                "pulse_width_range_s exceeds the capture duration "
                f"({self.capture_duration_s * 1e6:.0f} us)")
        if self.chip_count_range[0] < 1:
            raise ConfigError("chip_count_range must be at least 1")
        if registry is not None:
            nyq = self.sample_rate / 2.0
            for cls in registry.values():
                exc = _max_modulation_excursion_hz(cls, self)
                if self.carrier_range_hz[1] + exc >= nyq:
                    raise ConfigError(
                        f"carrier_range_hz top plus the {cls.id} sweep excursion "
                        f"({exc / 1e6:.2f} MHz) reaches the Nyquist band edge")
                if self.carrier_range_hz[0] - exc <= -nyq:
                    raise ConfigError(
                        f"carrier_range_hz bottom minus the {cls.id} sweep "
                        "excursion reaches the negative Nyquist band edge")
        return self

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["snr_levels_db"] = list(self.snr_levels_db)
        d["carrier_range_hz"] = list(self.carrier_range_hz)
        d["pulse_width_range_s"] = list(self.pulse_width_range_s)
        d["chip_count_range"] = list(self.chip_count_range)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config field: {sorted(unknown)[0]}")
        kw = dict(d)
        for name in ("snr_levels_db", "carrier_range_hz",
                     "pulse_width_range_s", "chip_count_range"):
            if name in kw:
                kw[name] = tuple(kw[name])
        return cls(**kw)


@dataclasses.dataclass(frozen=True)
class PulseParams:
    class_id: str
    carrier_hz: float
    pulse_width_s: float
    toa_s: float
    class_params: dict
    seed: int


# Shared default draw specs
_BW = ("uniform", 2.5e6, 4.5e6)        # single-component sweep bandwidth
_BW_HALF = ("uniform", 1.25e6, 2.25e6)  # per component of LFM_SFM
_CHIPS = ("config_int", "chip_count_range")
_STEPS = ("int", 4, 8)

# Canonical class table: (id, family, law, schema, law_args).
# Order is part of the format: class index = position in this table.
_DEFAULT_CLASSES = [
    # frequency family (13)
    ("UNMOD", Family.FM, "unmod", {}, {}),
    ("LFM_up", Family.FM, "lfm", {"bandwidth_hz": _BW}, {"direction": 1}),
    ("LFM_down", Family.FM, "lfm", {"bandwidth_hz": _BW}, {"direction": -1}),
    ("NLFM", Family.FM, "nlfm", {"bandwidth_hz": _BW}, {}),
    ("SFM", Family.FM, "sfm", {"bandwidth_hz": _BW, "step_count": _STEPS}, {}),
    ("EQFM", Family.FM, "eqfm", {"bandwidth_hz": _BW}, {}),
    ("DLFM_up_down", Family.FM, "dlfm", {"bandwidth_hz": _BW}, {"direction": 1}),
    ("DLFM_down_up", Family.FM, "dlfm", {"bandwidth_hz": _BW}, {"direction": -1}),
    ("MLFM", Family.FM, "mlfm", {"bandwidth_hz": _BW}, {}),
    ("FSK2", Family.FM, "fsk", {"bandwidth_hz": _BW, "chip_count": _CHIPS}, {"levels": 2}),
    ("FSK4", Family.FM, "fsk", {"bandwidth_hz": _BW, "chip_count": _CHIPS}, {"levels": 4}),
    ("EXP", Family.FM, "expfm", {"bandwidth_hz": _BW, "alpha": ("uniform", 2.0, 4.0)}, {}),
    ("COSTAS", Family.FM, "costas",
     {"bandwidth_hz": _BW, "costas_order": ("choice", (7, 10)),
      "costas_variant": ("int", 0, 7)}, {}),
    # phase family (17)
    ("BPSK", Family.PM, "psk", {"chip_count": _CHIPS}, {"levels": 2}),
    ("QPSK", Family.PM, "psk", {"chip_count": _CHIPS}, {"levels": 4}),
    ("PSK8", Family.PM, "psk", {"chip_count": _CHIPS}, {"levels": 8}),
    ("FRANK", Family.PM, "frank", {"frank_m": ("int", 4, 8)}, {}),
    ("P1", Family.PM, "p1", {"frank_m": ("int", 4, 8)}, {}),
    ("P2", Family.PM, "p2", {"frank_m": ("choice", (4, 6, 8))}, {}),
    ("P3", Family.PM, "p3", {"code_length": _CHIPS}, {}),
    ("P4", Family.PM, "p4", {"code_length": _CHIPS}, {}),
    ("BARKER_2_1", Family.PM, "barker", {"code_length": ("fixed", 2)}, {"code_id": "2_1"}),
    ("BARKER_2_2", Family.PM, "barker", {"code_length": ("fixed", 2)}, {"code_id": "2_2"}),
    ("BARKER_3", Family.PM, "barker", {"code_length": ("fixed", 3)}, {"code_id": "3"}),
    ("BARKER_4_1", Family.PM, "barker", {"code_length": ("fixed", 4)}, {"code_id": "4_1"}),
    ("BARKER_4_2", Family.PM, "barker", {"code_length": ("fixed", 4)}, {"code_id": "4_2"}),
    ("BARKER_5", Family.PM, "barker", {"code_length": ("fixed", 5)}, {"code_id": "5"}),
    ("BARKER_7", Family.PM, "barker", {"code_length": ("fixed", 7)}, {"code_id": "7"}),
    ("BARKER_11", Family.PM, "barker", {"code_length": ("fixed", 11)}, {"code_id": "11"}),
    ("BARKER_13", Family.PM, "barker", {"code_length": ("fixed", 13)}, {"code_id": "13"}),
    # hybrid family (3)
    ("LFM_BPSK", Family.HM, "lfm_psk",
     {"bandwidth_hz": _BW, "chip_count": _CHIPS}, {"levels": 2}),
    ("FSK2_BPSK", Family.HM, "fsk_psk",
     {"bandwidth_hz": _BW, "chip_count": _CHIPS}, {"levels": 2}),
    ("LFM_SFM", Family.HM, "lfm_sfm",
     {"bw_lfm_hz": _BW_HALF, "bw_sfm_hz": _BW_HALF, "step_count": _STEPS}, {}),
]


def register_default_classes():
    """Build the canonical 33-class registry (insertion-ordered dict)."""
    registry = {}
    for cid, family, law, schema, law_args in _DEFAULT_CLASSES:
        registry[cid] = ModulationClass(
            id=cid, family=family, law=law,
            param_schema=dict(schema), law_args=dict(law_args))
    return registry


def class_index(registry, class_id):
    try:
        return list(registry).index(class_id)
    except ValueError:
        raise KeyError(f"unknown class: {class_id}") from None


def _max_modulation_excursion_hz(cls, config):
    """Conservative bound on |f_mod(t)| for Nyquist validation."""
    schema = cls.param_schema
    total = 0.0
    for name, spec in schema.items():
        if name in ("bandwidth_hz", "bw_lfm_hz", "bw_sfm_hz"):
            total += spec[2] if spec[0] == "uniform" else float(spec[1])
    # MLFM rides a small sinusoid on top of the linear sweep
    return total * 1.05


def _draw(spec, rng, config):
    # class params are carried as float64 end to end (the container stores
    # them as f64), so integer draws are returned as whole floats
    kind = spec[0]
    if kind == "uniform":
        return rng.uniform(spec[1], spec[2])
    if kind == "int":
        return float(rng.randint(spec[1], spec[2]))
    if kind == "choice":
        return float(rng.choice(spec[1]))
    if kind == "config_int":
        lo, hi = getattr(config, spec[1])
        return float(rng.randint(int(lo), int(hi)))
    if kind == "fixed":
        return float(spec[1])
    raise ConfigError(f"unknown param spec kind: {kind}")


def sample_pulse_params(cls, config, seed):
    """Draw PulseParams for one pulse, a pure function of (class, config,
    seed).

    Draw order is fixed: carrier, pulse width, time of arrival, then the
    class schema entries in declaration order.
    """
    config.validate()
    rng = Xoshiro256StarStar(derive_stream_seed(seed, STREAM_PARAMS))
    carrier = rng.uniform(*config.carrier_range_hz)
    pw = rng.uniform(*config.pulse_width_range_s)
    toa = rng.uniform(0.0, config.capture_duration_s - pw)
    class_params = {name: _draw(spec, rng, config)
                    for name, spec in cls.param_schema.items()}
    return PulseParams(class_id=cls.id, carrier_hz=carrier, pulse_width_s=pw,
                       toa_s=toa, class_params=class_params, seed=seed)


def pulse_support(params, config):
    """Half-open sample index range [start, stop) with toa <= t < toa + pw."""
    fs = config.sample_rate
    start = math.ceil(params.toa_s * fs - 1e-9)
    stop = math.ceil((params.toa_s + params.pulse_width_s) * fs - 1e-9)
    return max(start, 0), min(stop, config.capture_len)


def desk_scale_config(master_seed=2025):
    """Small corpus used by integration tests and quick experiments:
    3 SNR levels x 33 classes x 20 pulses."""
    return GenerationConfig(pulses_per_class=20,
                            snr_levels_db=(10.0, -6.0, -20.0),
                            master_seed=master_seed)


def load_config(path, overrides=None):
    """Read a GenerationConfig from a TOML or JSON file (by extension,
    falling back to trying both), then apply CLI overrides."""
    text = open(path, "rb").read()
    suffix = str(path).lower()
    data = None
    errors = []
    parsers = []
    try:
        import tomllib as toml_mod  # py311+
    except ImportError:
        import tomli as toml_mod
    parse_json = lambda b: json.loads(b.decode("utf-8"))
    parse_toml = lambda b: toml_mod.loads(b.decode("utf-8"))
    if suffix.endswith(".json"):
        parsers = [("json", parse_json), ("toml", parse_toml)]
    else:
        parsers = [("toml", parse_toml), ("json", parse_json)]
    for name, parse in parsers:
        try:
            data = parse(text)
            break
        except Exception as exc:
            errors.append(f"{name}: {exc}")
    if data is None:
        raise ConfigError(f"could not parse config {path}: {'; '.join(errors)}")
    cfg = GenerationConfig.from_dict(data)
    if overrides:
        cfg = cfg.replace(**overrides)
    return cfg
