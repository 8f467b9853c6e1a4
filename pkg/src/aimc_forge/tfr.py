"""Time-frequency transforms and the per-algorithm image presets.

The STFT contract at defaults (win 256, hop 128, Hann, 100k samples) is a
256 x 780 complex matrix, center-shifted so row win_len//2 is 0 Hz.
Resampling is separable with three kernels: bicubic (Catmull-Rom,
a = -0.5), bilinear, and pixel-area box averaging. RGB presets use the
viridis colormap.
"""

import dataclasses
import struct

import numpy as np

from .errors import FormatError

__all__ = ["SpectrogramImage", "PreprocessPreset", "PRESETS", "stft",
           "magnitude_db", "resize", "apply_preset", "save_png",
           "save_raw", "load_raw", "hann_window"]

IMAGE_MAGIC = b"AIMCIMG\x00"
VIT_PATCH_WIDTH = 23


@dataclasses.dataclass
class SpectrogramImage:
    """2-D time-frequency array plus axis metadata.

    data is (freq_bins, frames) for complex/gray modes, (H, W, C) for
    preset image outputs, or (1, W) for the phase-strip mode.
    """
    data: np.ndarray
    mode: str  # complex | gray | rgb | phase
    sample_rate: float = 1.0e8
    win_len: int = 256
    hop: int = 128

    def bin_freq_hz(self, row):
        return (row - self.win_len // 2) * self.sample_rate / self.win_len

    def nearest_bin(self, freq_hz):
        return int(round(freq_hz * self.win_len / self.sample_rate)) + self.win_len // 2

    def frame_time_s(self, frame):
        return (frame * self.hop + self.win_len / 2.0) / self.sample_rate


def hann_window(n):
    """Periodic Hann window."""
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / n))


def stft(iq, win_len=256, hop=128, sample_rate=1.0e8):
    """Hann-windowed STFT, center-shifted.

    Frame f covers samples [f*hop, f*hop + win_len); frame count is
    (len(iq) - win_len) // hop + 1.
    """
    iq = np.asarray(iq)
    if len(iq) < win_len:
        raise ValueError(f"capture shorter than the {win_len}-point window")
    frames = np.lib.stride_tricks.sliding_window_view(iq, win_len)[::hop]
    spec = np.fft.fftshift(np.fft.fft(frames * hann_window(win_len), axis=1), axes=1)
    return SpectrogramImage(data=spec.T.copy(), mode="complex",
                            sample_rate=sample_rate, win_len=win_len, hop=hop)


def magnitude_db(spec, floor_db=-80.0, eps=1e-12):
    """Peak-relative log-magnitude image, min-max scaled to [0, 1].

    The dB image is referenced to its own maximum before clipping at
    floor_db, which makes the output invariant to input amplitude scaling.
    A constant-magnitude input maps to all zeros.
    """
    data = spec.data if isinstance(spec, SpectrogramImage) else np.asarray(spec)
    db = 20.0 * np.log10(np.abs(data) + eps)
    db = np.maximum(db - db.max(), floor_db)
    span = db.max() - db.min()
    out = np.zeros_like(db) if span == 0 else (db - db.min()) / span
    if isinstance(spec, SpectrogramImage):
        return SpectrogramImage(data=out, mode="gray", sample_rate=spec.sample_rate,
                                win_len=spec.win_len, hop=spec.hop)
    return out


def _cubic_kernel(x):
    # Catmull-Rom-style cubic, a = -0.5
    a = -0.5
    ax = np.abs(x)
    out = np.zeros_like(ax)
    near = ax <= 1.0
    mid = (ax > 1.0) & (ax < 2.0)
    out[near] = (a + 2.0) * ax[near] ** 3 - (a + 3.0) * ax[near] ** 2 + 1.0
    out[mid] = a * ax[mid] ** 3 - 5.0 * a * ax[mid] ** 2 + 8.0 * a * ax[mid] - 4.0 * a
    return out


def _resample_matrix(n_src, n_dst, kernel):
    """(n_dst, n_src) weight matrix for one separable axis.

    Pixel centers follow the half-pixel convention:
    src = (dst + 0.5) * n_src / n_dst - 0.5. Out-of-range taps clamp to
    the edge, preserving unit row sums.
    """
    w = np.zeros((n_dst, n_src))
    scale = n_src / n_dst
    if kernel == "area":
        for d in range(n_dst):
            lo, hi = d * scale, (d + 1) * scale
            first, last = int(np.floor(lo)), int(np.ceil(hi)) - 1
            for s in range(first, last + 1):
                overlap = min(hi, s + 1) - max(lo, s)
                if overlap > 0:
                    w[d, min(max(s, 0), n_src - 1)] += overlap / scale
        return w
    centers = (np.arange(n_dst) + 0.5) * scale - 0.5
    taps = 2 if kernel == "bicubic" else 1
    for d, c in enumerate(centers):
        base = int(np.floor(c))
        for s in range(base - taps + 1, base + taps + 1):
            x = c - s
            if kernel == "bilinear":
                weight = max(0.0, 1.0 - abs(x))
            elif kernel == "bicubic":
                weight = float(_cubic_kernel(np.array([x])))
            else:
                raise ValueError(f"unknown kernel: {kernel!r}")
            if weight != 0.0:
                w[d, min(max(s, 0), n_src - 1)] += weight
    return w


def resize(img, width, height, kernel="bicubic"):
    """Separable resampling of a 2-D (H, W) or 3-D (H, W, C) image."""
    if width <= 0 or height <= 0:
        raise ValueError("target size must be positive")
    img = np.asarray(img, dtype=float)
    if img.size == 0:
        raise ValueError("empty source image")
    squeeze = img.ndim == 2
    if squeeze:
        img = img[:, :, None]
    rows = _resample_matrix(img.shape[0], height, kernel)
    cols = _resample_matrix(img.shape[1], width, kernel)
    out = np.einsum("hs,swc,wt->htc", rows, img, cols.T)
    return out[:, :, 0] if squeeze else out


def _viridis(gray):
    import matplotlib
    cmap = matplotlib.colormaps["viridis"]
    return np.asarray(cmap(np.clip(gray, 0.0, 1.0)))[..., :3]


def _suppress_noise_floor(img, k=1.0, iterations=3):
    """Iterative floor suppression: zero everything below mean + k*std,
    re-estimating the threshold each pass."""
    out = img.copy()
    for _ in range(iterations):
        thresh = out.mean() + k * out.std()
        out = np.where(out < thresh, 0.0, out)
    return out


@dataclasses.dataclass(frozen=True)
class PreprocessPreset:
    name: str
    target: tuple  # (H, W) or None for the phase strip
    kernel: str
    color: str     # rgb | gray | phase
    suppress: bool = False
    fixed_row: int = 7


PRESETS = {
    "ldc_unet": PreprocessPreset("ldc_unet", (128, 128), "bicubic", "rgb"),
    "lpi_net": PreprocessPreset("lpi_net", (64, 64), "bicubic", "gray"),
    "cdae_dcnn": PreprocessPreset("cdae_dcnn", (64, 64), "bilinear", "rgb"),
    "stft_cnn": PreprocessPreset("stft_cnn", (32, 32), "area", "rgb", suppress=True),
    "vit_phase": PreprocessPreset("vit_phase", None, "none", "phase"),
}


def apply_preset(spec_or_iq, preset, carrier_hz=None, sample_rate=1.0e8):
    """Run one model's preprocessing pipeline.

    Accepts raw iq samples or an existing complex SpectrogramImage. The
    vit_phase preset takes the STFT row nearest carrier_hz when given
    (ground truth is available at generation time), else the fixed row
    index of the preset; the unwrapped phase strip is edge-padded up to a
    multiple of the 23-sample patch width.
    """
    if isinstance(preset, str):
        try:
            preset = PRESETS[preset]
        except KeyError:
            raise ValueError(f"unknown preset: {preset!r}") from None
    if isinstance(spec_or_iq, SpectrogramImage):
        spec = spec_or_iq
    else:
        spec = stft(np.asarray(spec_or_iq), sample_rate=sample_rate)
    if spec.mode != "complex":
        raise ValueError("presets expect a complex spectrogram or raw iq")

    if preset.color == "phase":
        row = spec.nearest_bin(carrier_hz) if carrier_hz is not None else preset.fixed_row
        row = min(max(row, 0), spec.data.shape[0] - 1)
        phase = np.unwrap(np.angle(spec.data[row]))
        pad = (-len(phase)) % VIT_PATCH_WIDTH
        if pad:
            phase = np.concatenate([phase, np.full(pad, phase[-1])])
        return phase[None, :]

    gray = magnitude_db(spec).data
    h, w = preset.target
    img = np.clip(resize(gray, w, h, preset.kernel), 0.0, 1.0)
    if preset.suppress:
        img = _suppress_noise_floor(img)
    if preset.color == "gray":
        return img[:, :, None]
    return _viridis(img)


def save_png(img, path):
    """8-bit PNG export. Gray/RGB float images are assumed in [0, 1];
    other 2-D float data (e.g. phase strips) is min-max scaled first."""
    from PIL import Image
    arr = np.asarray(img, dtype=float)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim == 2 and (arr.min() < 0.0 or arr.max() > 1.0):
        span = arr.max() - arr.min()
        arr = (arr - arr.min()) / span if span else np.zeros_like(arr)
    data = np.clip(arr * 255.0 + 0.5, 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="RGB" if data.ndim == 3 else "L").save(path)


def save_raw(img, path):
    """Lossless float container: magic, u32 H, u32 W, u32 C header then
    little-endian float32 pixels, row-major."""
    arr = np.asarray(img, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    h, w, c = arr.shape
    with open(path, "wb") as fh:
        fh.write(IMAGE_MAGIC)
        fh.write(struct.pack("<III", h, w, c))
        fh.write(arr.astype("<f4").tobytes())


def load_raw(path):
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != IMAGE_MAGIC:
            raise FormatError(f"bad image magic: {magic!r}")
        h, w, c = struct.unpack("<III", fh.read(12))
        data = np.frombuffer(fh.read(4 * h * w * c), dtype="<f4")
        if data.size != h * w * c:
            raise FormatError("truncated image payload")
    return data.reshape(h, w, c)
