"""Canonical on-disk pulse container (one file per class per SNR level).

Layout, all little-endian:

    File header (64 bytes)
    ----------------------
    magic          8s   "AIMCSPEC"
    version        u16  current = 1
    flags          u16  reserved, 0
    pulse_count    u32
    capture_len    u32  complex samples per pulse
    sample_rate    f64  Hz
    snr_db         f32  target SNR of every record in the file
    class_id       32s  zero-padded UTF-8

    Record, repeated pulse_count times
    ----------------------------------
    seed           u64  per-pulse seed
    carrier_hz     f64
    pulse_width_s  f64
    toa_s          f64
    measured_snr   f32
    n_extra        u16  class-parameter count
    extras         n_extra x (16s zero-padded UTF-8 key, f64 value)
    payload        2 x capture_len f32, interleaved I,Q
    crc32          u32  over every preceding byte of this record

Readers reject unknown magic (FormatError), versions from the future
(VersionError), short files (TruncationError) and checksum mismatches
(IntegrityError carrying the pulse index).
"""

import hashlib
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, IntegrityError, TruncationError, VersionError
from .noise import NoisyCapture
from .rng import derive_stream_seed, STREAM_NOISE
from .taxonomy import PulseParams

__all__ = ["FORMAT_VERSION", "ClassFileHeader", "write_class_file",
           "read_class_file", "read_class_file_header"]

MAGIC = b"AIMCSPEC"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sHHII d f 32s")
_REC_META = struct.Struct("<Q ddd f H")
_EXTRA = struct.Struct("<16s d")


@dataclass
class ClassFileHeader:
    version: int
    flags: int
    pulse_count: int
    capture_len: int
    sample_rate: float
    snr_db: float
    class_id: str


def _pack_record(rec, capture_len):
    extras = rec.params.class_params
    parts = [_REC_META.pack(rec.params.seed, rec.params.carrier_hz,
                            rec.params.pulse_width_s, rec.params.toa_s,
                            np.float32(rec.measured_snr_db), len(extras))]
    for key, value in extras.items():
        raw = key.encode("utf-8")
        if len(raw) > 16:
            raise ValueError(f"class param key too long for container: {key!r}")
        parts.append(_EXTRA.pack(raw, float(value)))
    iq = np.ascontiguousarray(rec.iq, dtype="<c8")
    if len(iq) != capture_len:
        raise ValueError("record capture length differs from file header")
    parts.append(iq.tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def write_class_file(records, path, config):
    """Write one homogeneous batch of records; returns the file's sha256.

    Records must share one class id and one target SNR.
    """
    if not records:
        raise ValueError("refusing to write an empty class file")
    class_id = records[0].label
    if len(class_id.encode("utf-8")) > 32:
        raise ValueError(f"class id too long for container: {class_id!r}")
    snr_db = records[0].target_snr_db
    for rec in records:
        if rec.label != class_id:
            raise ValueError("records mix classes "
                             f"({rec.label!r} vs {class_id!r})")
        if rec.target_snr_db != snr_db:
            raise ValueError("records mix target SNR levels")
    digest = hashlib.sha256()
    with open(path, "wb") as fh:
        header = _HEADER.pack(MAGIC, FORMAT_VERSION, 0, len(records),
                              config.capture_len, config.sample_rate,
                              np.float32(snr_db),
                              class_id.encode("utf-8"))
        fh.write(header)
        digest.update(header)
        for rec in records:
            blob = _pack_record(rec, config.capture_len)
            fh.write(blob)
            digest.update(blob)
    return digest.hexdigest()


def _read_exact(fh, n, what):
    data = fh.read(n)
    if len(data) != n:
        raise TruncationError(f"file ends inside {what}")
    return data


def read_class_file_header(fh_or_path):
    close = False
    fh = fh_or_path
    if not hasattr(fh, "read"):
        fh = open(fh_or_path, "rb")
        close = True
    try:
        raw = _read_exact(fh, _HEADER.size, "the file header")
    finally:
        if close:
            fh.close()
    magic, version, flags, count, cap_len, fs, snr, cid = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic: {magic!r}")
    if version > FORMAT_VERSION:
        raise VersionError(f"format version {version} is newer than "
                           f"supported version {FORMAT_VERSION}")
    return ClassFileHeader(version=version, flags=flags, pulse_count=count,
                           capture_len=cap_len, sample_rate=fs,
                           snr_db=float(snr),
                           class_id=cid.rstrip(b"\x00").decode("utf-8"))


def read_class_file(path, indices=None):
    """Read records back as NoisyCapture objects.

    indices, when given, selects a subset by pulse index; other records
    are skipped without checksum verification (used for spot checks).
    Returns (header, records).
    """
    wanted = None if indices is None else set(int(i) for i in indices)
    records = []
    with open(path, "rb") as fh:
        header = read_class_file_header(fh)
        payload_len = 8 * header.capture_len
        for idx in range(header.pulse_count):
            meta = _read_exact(fh, _REC_META.size, f"record {idx} metadata")
            seed, carrier, pw, toa, measured, n_extra = _REC_META.unpack(meta)
            extras_raw = _read_exact(fh, _EXTRA.size * n_extra,
                                     f"record {idx} class params")
            if wanted is not None and idx not in wanted:
                fh.seek(payload_len + 4, 1)
                continue
            payload = _read_exact(fh, payload_len, f"record {idx} payload")
            (crc_stored,) = struct.unpack(
                "<I", _read_exact(fh, 4, f"record {idx} checksum"))
            crc = zlib.crc32(meta)
            crc = zlib.crc32(extras_raw, crc)
            crc = zlib.crc32(payload, crc) & 0xFFFFFFFF
            if crc != crc_stored:
                raise IntegrityError(
                    f"checksum mismatch at pulse {idx} of {path}",
                    pulse_index=idx)
            class_params = {}
            for off in range(0, len(extras_raw), _EXTRA.size):
                key, value = _EXTRA.unpack_from(extras_raw, off)
                class_params[key.rstrip(b"\x00").decode("utf-8")] = value
            params = PulseParams(class_id=header.class_id, carrier_hz=carrier,
                                 pulse_width_s=pw, toa_s=toa,
                                 class_params=class_params, seed=seed)
            records.append(NoisyCapture(
                iq=np.frombuffer(payload, dtype="<c8").copy(),
                params=params, label=header.class_id,
                target_snr_db=header.snr_db,
                measured_snr_db=float(np.float32(measured)),
                noise_seed=derive_stream_seed(seed, STREAM_NOISE)))
        if fh.read(1):
            raise FormatError(f"trailing bytes after the last record of {path}")
    return header, records
