"""Corpus building, manifests, integrity verification, and splits.

Directory layout mirrors the published dataset structure: one directory
per SNR level holding one container file per class, plus manifest.json:

    <root>/snr_<level>/<class_id>.aimcspec
    <root>/manifest.json

The manifest is canonical JSON (sorted keys, no timestamps), so a rebuild
with the same master seed is byte-identical, whatever the worker count.
"""

import concurrent.futures
import hashlib
import json
import os
import shutil
from pathlib import Path

import numpy as np

from .container import read_class_file, write_class_file
from .errors import DatasetError
from .noise import add_awgn
from .rng import (Xoshiro256StarStar, derive_pulse_seed, derive_stream_seed,
                  STREAM_NOISE)
from .synth import generate_pulse
from .taxonomy import register_default_classes, sample_pulse_params

__all__ = ["MANIFEST_VERSION", "snr_dirname", "build_corpus", "read_manifest",
           "verify_corpus", "split_train_test", "generate_class_records",
           "export_hdf5", "import_hdf5"]

MANIFEST_VERSION = 1
_SPLIT_TAG = 0x53504C4954  # distinguishes split shuffles from pulse seeds


def snr_dirname(snr_db):
    return f"snr_{snr_db:g}"


def generate_class_records(config, registry, snr_index, class_index):
    """Synthesize all pulses of one (snr, class) cell, in pulse order."""
    snr_db = config.snr_levels_db[snr_index]
    cls = registry[list(registry)[class_index]]
    records = []
    for pulse_index in range(config.pulses_per_class):
        seed = derive_pulse_seed(config.master_seed, snr_index, class_index,
                                 pulse_index)
        params = sample_pulse_params(cls, config, seed)
        pulse = generate_pulse(params, config, registry)
        records.append(add_awgn(pulse, snr_db,
                                derive_stream_seed(seed, STREAM_NOISE), config))
    return records


def _build_one(config, out_root, snr_index, class_index, registry=None):
    registry = registry or register_default_classes()
    class_id = list(registry)[class_index]
    snr_db = config.snr_levels_db[snr_index]
    records = generate_class_records(config, registry, snr_index, class_index)
    rel = Path(snr_dirname(snr_db)) / f"{class_id}.aimcspec"
    path = Path(out_root) / rel
    path.parent.mkdir(parents=True, exist_ok=True)
    sha = write_class_file(records, path, config)
    return {"snr_db": snr_db, "class_id": class_id, "path": str(rel),
            "pulse_count": len(records), "byte_len": os.path.getsize(path),
            "sha256": sha}


def _estimate_corpus_bytes(config, n_classes):
    record = 38 + 24 * 4 + 8 * config.capture_len + 4
    per_file = 64 + config.pulses_per_class * record
    return len(config.snr_levels_db) * n_classes * per_file


def build_corpus(config, out_root, registry=None, jobs=1):
    """Generate the full (snr x class) grid and write manifest.json.

    Output bytes depend only on the config; jobs only controls the worker
    pool. Returns the manifest dict.
    """
    registry = registry or register_default_classes()
    config.validate(registry)
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    free = shutil.disk_usage(out_root).free
    needed = int(_estimate_corpus_bytes(config, len(registry)) * 1.05)
    if needed > free:
        raise DatasetError(
            f"estimated corpus size {needed / 1e9:.2f} GB exceeds the "
            f"{free / 1e9:.2f} GB free at {out_root}")
    tasks = [(si, ci) for si in range(len(config.snr_levels_db))
             for ci in range(len(registry))]
    entries = {}
    if jobs <= 1:
        for si, ci in tasks:
            entries[(si, ci)] = _build_one(config, out_root, si, ci, registry)
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = {pool.submit(_build_one, config, str(out_root), si, ci,
                                registry): (si, ci)
                    for si, ci in tasks}
            for fut in concurrent.futures.as_completed(futs):
                entries[futs[fut]] = fut.result()
    manifest = {
        "format_version": MANIFEST_VERSION,
        "master_seed": config.master_seed,
        "config": config.to_dict(),
        "class_ids": list(registry),
        "files": [entries[key] for key in sorted(entries)],
    }
    manifest_path = out_root / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return manifest


def read_manifest(path):
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    try:
        manifest = json.loads(path.read_text())
    except FileNotFoundError:
        raise DatasetError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DatasetError(f"unparseable manifest {path}: {exc}") from None
    if manifest.get("format_version", 0) > MANIFEST_VERSION:
        raise DatasetError("manifest written by a newer tool version")
    manifest["_root"] = str(path.parent)
    return manifest


def _sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def verify_corpus(manifest, deep_sample_fraction=0.0, check_seed=0):
    """Check that every referenced file exists, hash-matches, and holds the
    declared pulse count.

    deep_sample_fraction > 0 additionally re-reads that fraction of pulses
    per file through the CRC-checking reader. Returns a report dict with
    ok flag and per-file results.
    """
    if not isinstance(manifest, dict):
        manifest = read_manifest(manifest)
    root = Path(manifest["_root"])
    results = []
    rng = Xoshiro256StarStar(check_seed)
    for entry in manifest["files"]:
        path = root / entry["path"]
        item = {"path": entry["path"], "ok": True, "error": None}
        try:
            if not path.exists():
                raise DatasetError("missing file")
            if os.path.getsize(path) != entry["byte_len"]:
                raise DatasetError("size mismatch")
            if _sha256_file(path) != entry["sha256"]:
                raise DatasetError("sha256 mismatch")
            if deep_sample_fraction > 0:
                count = entry["pulse_count"]
                k = max(1, int(round(count * deep_sample_fraction)))
                pool = list(range(count))
                for i in range(count - 1, 0, -1):
                    j = rng.randint(0, i)
                    pool[i], pool[j] = pool[j], pool[i]
                picks = sorted(pool[:k])
                header, records = read_class_file(path, indices=picks)
                if header.pulse_count != count:
                    raise DatasetError("pulse count mismatch")
                if len(records) != len(picks):
                    raise DatasetError("short read during spot check")
        except Exception as exc:  # report, never abort the sweep
            item["ok"] = False
            item["error"] = f"{type(exc).__name__}: {exc}"
        results.append(item)
    return {"ok": all(r["ok"] for r in results), "files": results}


def split_train_test(manifest, ratio=0.8, split_seed=0):
    """Deterministic stratified split.

    Returns {(class_id, snr_db): (train_indices, test_indices)}; within
    every (class, snr) stratum the two sets are disjoint and exhaustive.
    """
    if not isinstance(manifest, dict):
        manifest = read_manifest(manifest)
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be in (0, 1)")
    class_ids = manifest["class_ids"]
    snr_levels = list(manifest["config"]["snr_levels_db"])
    splits = {}
    for entry in manifest["files"]:
        n = entry["pulse_count"]
        if n < 2:
            raise DatasetError(
                f"stratum {entry['class_id']}@{entry['snr_db']} has fewer "
                "than 2 pulses; cannot split")
        si = snr_levels.index(entry["snr_db"])
        ci = class_ids.index(entry["class_id"])
        rng = Xoshiro256StarStar(derive_pulse_seed(split_seed, si, ci, _SPLIT_TAG))
        idx = list(range(n))
        for i in range(n - 1, 0, -1):  # Fisher-Yates
            j = rng.randint(0, i)
            idx[i], idx[j] = idx[j], idx[i]
        k = min(max(int(round(n * ratio)), 1), n - 1)
        splits[(entry["class_id"], entry["snr_db"])] = (
            sorted(idx[:k]), sorted(idx[k:]))
    return splits


def export_hdf5(manifest, out_root, name_map=None):
    """Best-effort HDF5 interop export, one .h5 per class file.

    Dataset names default to iq / seed / carrier_hz / pulse_width_s /
    toa_s / measured_snr_db / class_params_json and can be remapped via
    name_map (the published corpus's internal names are not documented).
    """
    import h5py
    if not isinstance(manifest, dict):
        manifest = read_manifest(manifest)
    names = {"iq": "iq", "seed": "seed", "carrier_hz": "carrier_hz",
             "pulse_width_s": "pulse_width_s", "toa_s": "toa_s",
             "measured_snr_db": "measured_snr_db",
             "class_params_json": "class_params_json"}
    names.update(name_map or {})
    root = Path(manifest["_root"])
    out_root = Path(out_root)
    written = []
    for entry in manifest["files"]:
        header, records = read_class_file(root / entry["path"])
        rel = Path(entry["path"]).with_suffix(".h5")
        path = out_root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        with h5py.File(path, "w") as h5:
            h5.attrs["class_id"] = header.class_id
            h5.attrs["snr_db"] = header.snr_db
            h5.attrs["sample_rate"] = header.sample_rate
            h5.create_dataset(names["iq"],
                              data=np.stack([r.iq for r in records]))
            h5.create_dataset(names["seed"], data=np.array(
                [r.params.seed for r in records], dtype=np.uint64))
            for field in ("carrier_hz", "pulse_width_s", "toa_s"):
                h5.create_dataset(names[field], data=np.array(
                    [getattr(r.params, field) for r in records]))
            h5.create_dataset(names["measured_snr_db"], data=np.array(
                [r.measured_snr_db for r in records], dtype=np.float32))
            h5.create_dataset(names["class_params_json"], data=np.array(
                [json.dumps(r.params.class_params, sort_keys=True)
                 for r in records], dtype=h5py.string_dtype()))
        written.append(str(rel))
    return written


def import_hdf5(path, name_map=None):
    """Inverse of export_hdf5 for one file; returns (attrs, records) with
    records as plain dicts."""
    import h5py
    names = {"iq": "iq", "seed": "seed", "carrier_hz": "carrier_hz",
             "pulse_width_s": "pulse_width_s", "toa_s": "toa_s",
             "measured_snr_db": "measured_snr_db",
             "class_params_json": "class_params_json"}
    names.update(name_map or {})
    with h5py.File(path, "r") as h5:
        attrs = dict(h5.attrs)
        n = h5[names["iq"]].shape[0]
        records = []
        for i in range(n):
            records.append({
                "iq": h5[names["iq"]][i],
                "seed": int(h5[names["seed"]][i]),
                "carrier_hz": float(h5[names["carrier_hz"]][i]),
                "pulse_width_s": float(h5[names["pulse_width_s"]][i]),
                "toa_s": float(h5[names["toa_s"]][i]),
                "measured_snr_db": float(h5[names["measured_snr_db"]][i]),
                "class_params": json.loads(h5[names["class_params_json"]][i]),
            })
    return attrs, records
