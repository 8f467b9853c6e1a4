"""aimc-forge: deterministic synthesis, verification, and benchmarking of
a radar intrapulse-modulation corpus (33 classes x 13 SNR levels)."""

from .taxonomy import (Family, GenerationConfig, ModulationClass, PulseParams,
                       register_default_classes, sample_pulse_params,
                       derive_pulse_seed, desk_scale_config, load_config)
from .synth import PulseRecord, generate_pulse, phase_law
from .noise import NoisyCapture, add_awgn, measure_power
from .tfr import SpectrogramImage, apply_preset, magnitude_db, resize, stft
from .container import read_class_file, write_class_file
from .dataset import build_corpus, read_manifest, split_train_test, verify_corpus
from .oracle import ValidationReport, estimate_if, psl, validate_pulse
from .benchmark import EvalReport, featurize, run_experiment

__version__ = "0.1.0"
