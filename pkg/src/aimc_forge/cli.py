"""Command-line entry point.

Subcommands: gen, verify, spectrify, pack, eval, info. Exit codes are a
stable contract: 0 success, 1 data or validation failure, 2 usage or
configuration error. Every run logs its resolved configuration and master
seed so it can be replayed from the log alone.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import benchmark, dataset, oracle, tfr
from .container import read_class_file
from .errors import ConfigError, ForgeError
from .rng import Xoshiro256StarStar
from .taxonomy import (GenerationConfig, load_config,
                       register_default_classes)

log = logging.getLogger("aimc_forge")

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


def _build_config(args):
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["master_seed"] = args.seed
    if getattr(args, "pulses", None) is not None:
        overrides["pulses_per_class"] = args.pulses
    if getattr(args, "snr", None):
        overrides["snr_levels_db"] = tuple(
            float(tok) for tok in args.snr.split(","))
    if args.config:
        return load_config(args.config, overrides)
    return GenerationConfig(**overrides)


def _resolved_registry(args):
    registry = register_default_classes()
    if getattr(args, "classes", None):
        wanted = args.classes.split(",")
        unknown = [c for c in wanted if c not in registry]
        if unknown:
            raise ConfigError(f"unknown class in --classes: {unknown[0]}")
        registry = {cid: registry[cid] for cid in wanted}
    return registry


def cmd_gen(args):
    config = _build_config(args)
    registry = _resolved_registry(args)
    config.validate(registry)
    log.info("resolved config: %s", json.dumps(config.to_dict(), sort_keys=True))
    log.info("master seed: %d, classes: %s", config.master_seed, ",".join(registry))
    manifest = dataset.build_corpus(config, args.out, registry=registry,
                                    jobs=args.jobs)
    log.info("wrote %d class files under %s", len(manifest["files"]), args.out)
    print(str(Path(args.out) / "manifest.json"))
    return EXIT_OK


def cmd_verify(args):
    manifest = dataset.read_manifest(args.manifest)
    fraction = args.sample / 100.0
    report = dataset.verify_corpus(manifest, deep_sample_fraction=fraction)
    audit_results = []
    if fraction > 0 and report["ok"] and not args.no_audit:
        config = GenerationConfig.from_dict(manifest["config"])
        registry = register_default_classes()
        registry = {c: registry[c] for c in manifest["class_ids"] if c in registry}
        root = Path(manifest["_root"])
        rng = Xoshiro256StarStar(1)
        for entry in manifest["files"]:
            count = entry["pulse_count"]
            k = max(1, int(round(count * fraction)))
            picks = sorted({rng.randint(0, count - 1) for _ in range(k)})
            _, records = read_class_file(root / entry["path"], indices=picks)
            for rec in records:
                rep = oracle.audit_record(rec, config, registry)
                audit_results.append({"path": entry["path"],
                                      "class_id": rec.label,
                                      "report": rep.as_dict()})
    audit_ok = all(r["report"]["passed"] for r in audit_results)
    ok = report["ok"] and audit_ok

    width = max((len(r["path"]) for r in report["files"]), default=4)
    print(f"{'file':<{width}}  status")
    for item in report["files"]:
        status = "ok" if item["ok"] else item["error"]
        print(f"{item['path']:<{width}}  {status}")
    print(f"hash/checksum: {'PASS' if report['ok'] else 'FAIL'}; "
          f"oracle audit: {'PASS' if audit_ok else 'FAIL'} "
          f"({len(audit_results)} pulses sampled)")
    if args.report:
        payload = {"ok": ok, "files": report["files"], "audits": audit_results}
        Path(args.report).write_text(json.dumps(payload, indent=2) + "\n")
    return EXIT_OK if ok else EXIT_DATA


def cmd_spectrify(args):
    if args.preset not in tfr.PRESETS:
        raise ConfigError(f"unknown preset: {args.preset}")
    manifest = dataset.read_manifest(args.manifest)
    fs = manifest["config"]["sample_rate"]
    root = Path(manifest["_root"])
    out_root = Path(args.out)
    count = 0
    for entry in manifest["files"]:
        _, records = read_class_file(root / entry["path"])
        dest = out_root / dataset.snr_dirname(entry["snr_db"]) / entry["class_id"]
        dest.mkdir(parents=True, exist_ok=True)
        for idx, rec in enumerate(records):
            img = tfr.apply_preset(rec.iq, args.preset,
                                   carrier_hz=rec.params.carrier_hz,
                                   sample_rate=fs)
            if args.format == "png":
                tfr.save_png(img, dest / f"{idx:04d}.png")
            else:
                tfr.save_raw(img, dest / f"{idx:04d}.aimcimg")
            count += 1
    log.info("wrote %d %s images under %s", count, args.preset, out_root)
    return EXIT_OK


def cmd_eval(args):
    manifest = dataset.read_manifest(args.manifest)
    features = benchmark.load_features(manifest)
    report = benchmark.run_experiment(manifest, kind=args.kind,
                                      subset=args.subset,
                                      split_seed=args.split_seed,
                                      features=features)
    paths = benchmark.write_report(report, args.out)
    print(f"{'snr_db':>8}  accuracy_pct")
    for snr in report.snr_levels_db:
        print(f"{snr:>8g}  {report.accuracy_pct[snr]:.2f}")
    for p in paths:
        log.info("wrote %s", p)
    return EXIT_OK


def cmd_pack(args):
    manifest = dataset.read_manifest(args.manifest)
    name_map = json.loads(args.name_map) if args.name_map else None
    written = dataset.export_hdf5(manifest, args.out, name_map=name_map)
    log.info("exported %d HDF5 files under %s", len(written), args.out)
    return EXIT_OK


def cmd_info(args):
    if args.manifest:
        manifest = dataset.read_manifest(args.manifest)
        cfg = manifest["config"]
        total = sum(e["byte_len"] for e in manifest["files"])
        print(f"master seed:      {manifest['master_seed']}")
        print(f"classes:          {len(manifest['class_ids'])}")
        print(f"snr levels (dB):  {', '.join(f'{s:g}' for s in cfg['snr_levels_db'])}")
        print(f"pulses per class: {cfg['pulses_per_class']}")
        print(f"files:            {len(manifest['files'])} ({total / 1e6:.1f} MB)")
        return EXIT_OK
    if args.config:
        config = load_config(args.config)
        config.validate(register_default_classes())
        print(json.dumps(config.to_dict(), indent=2, sort_keys=True))
        return EXIT_OK
    registry = register_default_classes()
    print(f"{'class':<14} {'family':<7} law")
    for cls in registry.values():
        print(f"{cls.id:<14} {cls.family.value:<7} {cls.law}")
    counts = {}
    for cls in registry.values():
        counts[cls.family.value] = counts.get(cls.family.value, 0) + 1
    print(f"total {len(registry)} classes: " +
          ", ".join(f"{k}={v}" for k, v in counts.items()))
    return EXIT_OK


def _parser():
    parser = argparse.ArgumentParser(
        prog="aimc-forge",
        description="Deterministic radar intrapulse-modulation dataset forge")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    default_jobs = int(os.environ.get("AIMC_FORGE_JOBS", "1"))

    p = sub.add_parser("gen", help="generate a corpus")
    p.add_argument("--config", help="TOML or JSON config file")
    p.add_argument("--out", required=True, help="corpus output directory")
    p.add_argument("--jobs", type=int, default=default_jobs)
    p.add_argument("--seed", type=int, help="override master_seed")
    p.add_argument("--snr", help="comma-separated SNR levels override")
    p.add_argument("--classes", help="comma-separated class subset")
    p.add_argument("--pulses", type=int, help="override pulses_per_class")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="check corpus integrity")
    p.add_argument("--manifest", required=True)
    p.add_argument("--sample", type=float, default=5.0,
                   help="per-file deep-check sample percentage")
    p.add_argument("--no-audit", action="store_true",
                   help="skip oracle re-synthesis audit")
    p.add_argument("--report", help="write the JSON report here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("spectrify", help="render preprocessed images")
    p.add_argument("--manifest", required=True)
    p.add_argument("--preset", required=True,
                   help="one of " + ", ".join(tfr.PRESETS))
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("png", "raw"), default="png")
    p.set_defaults(func=cmd_spectrify)

    p = sub.add_parser("eval", help="run the baseline benchmark")
    p.add_argument("--manifest", required=True)
    p.add_argument("--kind", choices=("same_snr", "all_to_x"), required=True)
    p.add_argument("--subset", choices=("all", "fm_only"), default="all")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pack", help="export the corpus to HDF5")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--name-map", help="JSON object renaming HDF5 datasets")
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("info", help="describe the registry, a config, or a corpus")
    p.add_argument("--config")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_info)
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_USAGE
    except ForgeError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_DATA
    except FileNotFoundError as exc:
        log.error("missing file: %s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
