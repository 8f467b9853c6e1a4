"""Classical-baseline evaluation harness.

Reproduces the benchmark protocol shape on a generated corpus: stratified
80:20 splits, same-SNR training (same_snr) and pooled-SNR training
(all_to_x), over the full class set or the FM-only subset. The classifier
is a nearest-centroid model on flattened spectrogram features; it stands
in for the deep networks, reproducing the protocol rather than their
accuracy numbers.
"""

import csv
import dataclasses
from pathlib import Path

import numpy as np

from .container import read_class_file
from .dataset import read_manifest, split_train_test
from .taxonomy import Family, register_default_classes
from .tfr import magnitude_db, resize, stft

__all__ = ["EvalReport", "featurize", "fit_nearest_centroid", "classify",
           "load_features", "run_experiment", "write_report",
           "FEATURE_SIDE"]

FEATURE_SIDE = 32


def featurize(capture, sample_rate=1.0e8, side=FEATURE_SIDE):
    """Flattened, L2-normalized gray dB spectrogram (side x side, bicubic),
    the lpi_net-style pipeline at feature scale."""
    iq = capture.iq if hasattr(capture, "iq") else np.asarray(capture)
    gray = magnitude_db(stft(iq, sample_rate=sample_rate)).data
    img = np.clip(resize(gray, side, side, "bicubic"), 0.0, 1.0)
    vec = img.reshape(-1)
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


@dataclasses.dataclass
class CentroidModel:
    class_ids: list
    centroids: np.ndarray  # (n_classes, dim), unit rows


def fit_nearest_centroid(features, labels, class_ids):
    """Per-class mean vectors. Every class must be represented."""
    features = np.asarray(features)
    labels = list(labels)
    centroids = np.zeros((len(class_ids), features.shape[1]))
    for i, cid in enumerate(class_ids):
        rows = [k for k, lab in enumerate(labels) if lab == cid]
        if not rows:
            raise ValueError(f"no training examples for class {cid!r}")
        mean = features[rows].mean(axis=0)
        norm = np.linalg.norm(mean)
        centroids[i] = mean / norm if norm > 0 else mean
    return CentroidModel(class_ids=list(class_ids), centroids=centroids)


def classify(model, feature):
    """Argmax cosine similarity; ties break to the lowest class index."""
    feature = np.asarray(feature)
    norm = np.linalg.norm(feature)
    if norm > 0:
        feature = feature / norm
    return model.class_ids[int(np.argmax(model.centroids @ feature))]


def load_features(manifest, sample_rate=None):
    """Featurize every pulse of a corpus once.

    Returns {(class_id, snr_db): (n_pulses, dim) array}; experiments below
    reuse this table across regimes, subsets, and split seeds.
    """
    if not isinstance(manifest, dict):
        manifest = read_manifest(manifest)
    root = Path(manifest["_root"])
    fs = sample_rate or manifest["config"]["sample_rate"]
    table = {}
    for entry in manifest["files"]:
        _, records = read_class_file(root / entry["path"])
        feats = np.stack([featurize(rec, sample_rate=fs) for rec in records])
        table[(entry["class_id"], entry["snr_db"])] = feats
    return table


@dataclasses.dataclass
class EvalReport:
    kind: str               # same_snr | all_to_x
    subset: str             # all | fm_only
    split_seed: int
    preset: str
    class_ids: list
    snr_levels_db: list
    accuracy_pct: dict      # snr -> percentage
    confusion: dict         # snr -> (n_classes, n_classes) count matrix


def _subset_class_ids(manifest, subset, registry=None):
    class_ids = manifest["class_ids"]
    if subset == "all":
        return list(class_ids)
    if subset == "fm_only":
        registry = registry or register_default_classes()
        return [c for c in class_ids
                if c in registry and registry[c].family == Family.FM]
    raise ValueError(f"unknown subset: {subset!r}")


def run_experiment(manifest, kind, subset="all", split_seed=0, features=None,
                   ratio=0.8, registry=None):
    """Execute one evaluation regime and return an EvalReport.

    same_snr: fit and test within each SNR level independently.
    all_to_x: fit once on the pooled train splits of every SNR level, then
    test each level's own test split (train/test indices stay disjoint
    within every stratum, so pooling cannot leak test samples).
    """
    if kind not in ("same_snr", "all_to_x"):
        raise ValueError(f"unknown experiment kind: {kind!r}")
    if not isinstance(manifest, dict):
        manifest = read_manifest(manifest)
    class_ids = _subset_class_ids(manifest, subset, registry)
    snr_levels = list(manifest["config"]["snr_levels_db"])
    if features is None:
        features = load_features(manifest)
    splits = split_train_test(manifest, ratio=ratio, split_seed=split_seed)

    def stack(snrs, part):
        feats, labels = [], []
        for snr in snrs:
            for cid in class_ids:
                train_idx, test_idx = splits[(cid, snr)]
                idx = train_idx if part == "train" else test_idx
                feats.append(features[(cid, snr)][idx])
                labels.extend([cid] * len(idx))
        return np.concatenate(feats), labels

    accuracy, confusion = {}, {}
    pos = {cid: i for i, cid in enumerate(class_ids)}
    if kind == "all_to_x":
        model = fit_nearest_centroid(*stack(snr_levels, "train"), class_ids)
    for snr in snr_levels:
        if kind == "same_snr":
            model = fit_nearest_centroid(*stack([snr], "train"), class_ids)
        feats, labels = stack([snr], "test")
        mat = np.zeros((len(class_ids), len(class_ids)), dtype=int)
        for vec, actual in zip(feats, labels):
            mat[pos[actual], pos[classify(model, vec)]] += 1
        confusion[snr] = mat
        accuracy[snr] = 100.0 * np.trace(mat) / mat.sum()
    return EvalReport(kind=kind, subset=subset, split_seed=split_seed,
                      preset=f"dB spectrogram {FEATURE_SIDE}x{FEATURE_SIDE}",
                      class_ids=class_ids, snr_levels_db=snr_levels,
                      accuracy_pct=accuracy, confusion=confusion)


def write_report(report, out_dir, chart=True):
    """Emit accuracy and confusion CSVs plus an accuracy-vs-SNR SVG chart.

    Returns the list of written paths.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    acc_path = out_dir / f"accuracy_{report.kind}_{report.subset}.csv"
    with open(acc_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["snr_db", "nearest_centroid_pct"])
        for snr in report.snr_levels_db:
            writer.writerow([f"{snr:g}", f"{report.accuracy_pct[snr]:.2f}"])
    written.append(acc_path)

    for snr in report.snr_levels_db:
        path = out_dir / f"confusion_{report.kind}_{report.subset}_snr_{snr:g}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["actual\\predicted"] + report.class_ids)
            for cid, row in zip(report.class_ids, report.confusion[snr]):
                writer.writerow([cid] + row.tolist())
        written.append(path)

    if chart:
        import matplotlib
        matplotlib.use("Agg")
        matplotlib.rcParams["svg.hashsalt"] = "aimc-forge"
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 4))
        snrs = report.snr_levels_db
        ax.plot(snrs, [report.accuracy_pct[s] for s in snrs], "o-",
                label="nearest centroid")
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("accuracy (%)")
        ax.set_title(f"{report.kind} / {report.subset}")
        ax.invert_xaxis()
        ax.grid(True, alpha=0.3)
        ax.legend()
        chart_path = out_dir / f"accuracy_{report.kind}_{report.subset}.svg"
        fig.savefig(chart_path, metadata={"Date": None})
        plt.close(fig)
        written.append(chart_path)
    return [str(p) for p in written]
