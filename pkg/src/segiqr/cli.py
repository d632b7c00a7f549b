"""File-based CLI: each stage reads upstream artifacts, writes its own format
plus a provenance sidecar, and stages compose only through files.

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from segiqr import desknet_config_path
from segiqr.attribution.features import (
    FeatureRecord,
    extract_features,
    write_feature_csv,
)
from segiqr.bench import run_cell, write_bench_csv, write_scatter_csv
from segiqr.data.cifar10 import load_cifar10, read_batch_file
from segiqr.data.manifest import (
    ExperimentManifest,
    assemble_experiment,
    build_experiment,
    sha256_file,
)
from segiqr.data.reports import ReportCell, read_report, write_report
from segiqr.detector.dataset import FeatureDataset, split_train_test
from segiqr.detector.evaluate import evaluate, load_model, save_model
from segiqr.detector.gbt import GbtHyper, train_gbt
from segiqr.detector.logistic import LogisticHyper, train_logistic
from segiqr.attribution.features import read_feature_csv
from segiqr.data.atomic import atomic_write_text
from segiqr.errors import ConfigError, DataError, NumericError, SegIqrError
from segiqr.nn.config import load_arch_config
from segiqr.nn.train import TrainHyper, evaluate_accuracy, train
from segiqr.nn.network import build_network
from segiqr.nn.weights_io import load_weights, save_weights
from segiqr.segmentation.label_map import read_label_maps, write_label_maps
from segiqr.specs import parse_attack_spec, parse_mode_spec, parse_segmentation_spec


def _provenance(path: Path, doc: dict):
    atomic_write_text(path.with_name(path.name + ".provenance.json"),
                      json.dumps(doc, indent=2, sort_keys=True))


def _load_net(args):
    arch = load_arch_config(args.arch if args.arch else desknet_config_path())
    return load_weights(args.model, arch), arch


def _echo(args, skip=("func",)):
    def conv(v):
        if isinstance(v, Path):
            return str(v)
        if isinstance(v, (list, tuple)):
            return [conv(x) for x in v]
        return v
    return {k: conv(v) for k, v in vars(args).items()
            if k not in skip and not callable(v)}


# -- subcommands -------------------------------------------------------

def cmd_train_model(args):
    arch = load_arch_config(args.arch if args.arch else desknet_config_path())
    train_set, test_set = load_cifar10(args.data)
    if args.limit:
        train_set.images = train_set.images[:args.limit]
        train_set.labels = train_set.labels[:args.limit]
    net = build_network(arch, seed=args.seed)
    hyper = TrainHyper(lr=args.lr, momentum=args.momentum, epochs=args.epochs,
                       batch_size=args.batch_size, seed=args.seed)
    history = []
    net = train(net, train_set.images, train_set.labels, hyper,
                on_epoch=lambda e, loss: history.append((e, loss)) or
                print(f"epoch {e}: loss {loss:.4f}", flush=True))
    acc = evaluate_accuracy(net, test_set.images, test_set.labels)
    print(f"test accuracy: {acc:.4f} over {len(test_set)} images")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model_path = out / "model.sfw"
    save_weights(net, model_path)
    _provenance(model_path, {
        "stage": "train-model", "args": _echo(args),
        "test_accuracy": acc, "loss_history": history,
        "model_sha256": sha256_file(model_path),
        "parameter_count": net.count_parameters(),
    })
    print(f"wrote {model_path}")
    return 0


def cmd_attack(args):
    net, arch = _load_net(args)
    _, test_set = load_cifar10(args.data)
    spec = parse_attack_spec(args.attack)
    manifest = ExperimentManifest(
        attack={"method": spec.method, "seed": args.seed, **spec.extra},
        epsilons=spec.epsilons,
        segmentation={}, taps={},
        batch_count=args.batches, batch_size=args.batch_size,
        sample_seed=args.seed, split_seed=args.split_seed,
    )
    out = Path(args.out)
    manifest = build_experiment(net, test_set, manifest, out)
    for role in ("benign", "adversarial"):
        for entry in manifest.files[role]:
            print(f"{role}: {entry['path']} eps={entry['epsilon']}")
    print(f"wrote {out / 'manifest.json'}")
    return 0


def cmd_segment(args):
    seg = parse_segmentation_spec(args.segmentation)
    batch = read_batch_file(args.data)
    hwc = batch.images.transpose(0, 2, 3, 1)
    maps = [seg.segment(hwc[i]) for i in range(len(batch))]
    out = Path(args.out)
    write_label_maps(out, maps)
    counts = [m.segment_count for m in maps]
    _provenance(out, {
        "stage": "segment", "args": _echo(args),
        "segmentation": seg.describe(),
        "data_sha256": sha256_file(args.data),
        "segment_counts": {"min": min(counts), "max": max(counts),
                           "mean": float(np.mean(counts))},
    })
    print(f"wrote {out} ({len(maps)} maps, mean segments {np.mean(counts):.1f})")
    return 0


def _extract_one(net, images, ids, seg, maps, mode, label, attack_name, epsilon, workers):
    taps = mode.taps(net)
    vectors = extract_features(net, images, maps, taps, image_ids=ids, workers=workers)
    return [FeatureRecord(image_id=v.image_id, source=v.image_id, attack=attack_name,
                          epsilon=epsilon, label=label, features=v.values)
            for v in vectors]


def cmd_extract(args):
    net, arch = _load_net(args)
    mode = parse_mode_spec(args.mode)
    workers = args.workers
    records = []
    seg = parse_segmentation_spec(args.segmentation) if args.segmentation else None

    def maps_for(images):
        if args.maps:
            return read_label_maps(args.maps)
        if seg is None:
            raise ConfigError("need --maps or --segmentation")
        hwc = images.transpose(0, 2, 3, 1)
        return [seg.segment(hwc[i]) for i in range(len(images))]

    if args.manifest:
        data = assemble_experiment(args.manifest)
        for b, (ben, adv) in enumerate(zip(data.benign, data.adversarial)):
            eps = data.adversarial_epsilons[b]
            method = data.manifest.attack["method"]
            records += _extract_one(net, ben.images, ben.source_ids, seg, maps_for(ben.images),
                                    mode, "benign", "none", 0.0, workers)
            records += _extract_one(net, adv.images, adv.source_ids, seg, maps_for(adv.images),
                                    mode, "adversarial", method, eps, workers)
            print(f"batch {b}: extracted {len(ben)} benign + {len(adv)} adversarial")
    else:
        if not args.data:
            raise ConfigError("need --data or --manifest")
        batch = read_batch_file(args.data)
        records = _extract_one(net, batch.images, batch.source_ids, seg,
                               maps_for(batch.images), mode, args.label,
                               args.attack_name, args.epsilon, workers)
    out = Path(args.out)
    prov = {
        "stage": "extract", "args": _echo(args),
        "segmentation": seg.describe() if seg else {"from_maps": str(args.maps)},
        "taps": mode.taps(net).describe(),
        "model_sha256": sha256_file(args.model),
        "forward_passes": net.pass_counter.value,
    }
    write_feature_csv(out, records, provenance=prov)
    print(f"wrote {out} ({len(records)} rows, {net.pass_counter.value} forward passes)")
    return 0


def _load_feature_dataset(paths) -> FeatureDataset:
    records = []
    for p in paths:
        records += read_feature_csv(p)
    return FeatureDataset.from_records(records, provenance={"feature_files": [str(p) for p in paths]})


def cmd_train_detector(args):
    ds = _load_feature_dataset(args.features)
    train_ds, _ = split_train_test(ds, train_fraction=args.train_fraction, seed=args.split_seed)
    if args.detector == "gbt":
        model = train_gbt(train_ds, GbtHyper(trees=args.trees, depth=args.depth,
                                             lr=args.lr, subsample=args.subsample,
                                             seed=args.seed))
    else:
        model = train_logistic(train_ds, LogisticHyper(lr=args.lr, epochs=args.epochs, l2=args.l2))
    out = Path(args.out)
    prov = {
        "stage": "train-detector", "args": _echo(args),
        "feature_files": {str(p): sha256_file(p) for p in args.features},
        "train_rows": len(train_ds), "dimension": ds.dimension,
    }
    save_model(model, out, provenance=prov)
    print(f"wrote {out} ({args.detector}, trained on {len(train_ds)} rows)")
    return 0


def cmd_evaluate(args):
    model, model_prov = load_model(args.detector)
    ds = _load_feature_dataset(args.features)
    _, test_ds = split_train_test(ds, train_fraction=args.train_fraction, seed=args.split_seed)
    report = evaluate(model, test_ds)
    cell = ReportCell(attack=args.attack_name, segmentation=args.segmentation_name,
                      mode=args.mode_name, auc=report.auc, accuracy=report.accuracy,
                      benign_count=report.benign_count,
                      adversarial_count=report.adversarial_count)
    out = Path(args.out)
    write_report(out, [cell])
    _provenance(out, {"stage": "evaluate", "args": _echo(args),
                      "detector_provenance": model_prov})
    print(f"AUC {report.auc:.4f}  accuracy {report.accuracy:.4f} "
          f"({report.benign_count} benign / {report.adversarial_count} adversarial test rows)")
    print(f"wrote {out}")
    return 0


def cmd_bench(args):
    net, arch = _load_net(args)
    _, test_set = load_cifar10(args.data)
    images = test_set.images[:args.images]
    segs = [parse_segmentation_spec(s) for s in args.segmentation]
    modes = [parse_mode_spec(m) for m in args.mode]
    records = []
    for seg in segs:
        for mode in modes:
            rec = run_cell(net, images, seg, mode, reps=args.reps,
                           batch_size=args.batch_size, workers=args.workers)
            records.append(rec)
            print(f"{rec.segmentation} / {rec.mode}: "
                  f"{rec.wall_time_per_batch_s:.3f}s per {args.batch_size}-image batch, "
                  f"{rec.forward_passes} passes, {rec.attribution_bytes} bytes")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_bench_csv(out / "bench.csv", records)
    write_scatter_csv(out / "scatter.csv", records)
    _provenance(out / "bench.csv", {"stage": "bench", "args": _echo(args)})
    print(f"wrote {out / 'bench.csv'}")
    return 0


def cmd_report(args):
    cells = []
    for p in args.inputs:
        cells += read_report(p)
    write_report(args.out, cells)
    for c in cells:
        print(f"{c.attack:>10} {c.segmentation:>24} {c.mode:>12}  AUC {c.auc:.4f}")
    print(f"wrote {args.out}")
    return 0


# -- parser ------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segiqr",
        description="Segment-occlusion IQR features for adversarial image detection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, default=None,
                       help="JSON file of default flag values for this subcommand")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("train-model", help="train the classifier on a CIFAR-layout dataset")
    add_common(p)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--arch", type=Path, default=None, help="architecture config (default: shipped desknet)")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--epochs", type=int, default=8)
    p.add_argument("--lr", type=float, default=0.02)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--limit", type=int, default=0, help="cap the training images (0 = all)")
    p.set_defaults(func=cmd_train_model)

    p = sub.add_parser("attack", help="build benign/adversarial batches plus a manifest")
    add_common(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--arch", type=Path, default=None)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--attack", required=True, help="e.g. fgsm:eps=0.02,0.06,0.1")
    p.add_argument("--batches", type=int, default=3)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("segment", help="write label maps for one batch file")
    add_common(p)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--segmentation", required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("extract", help="occlusion sweep -> IQR feature CSV")
    add_common(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--arch", type=Path, default=None)
    p.add_argument("--data", type=Path, default=None)
    p.add_argument("--manifest", type=Path, default=None)
    p.add_argument("--maps", type=Path, default=None)
    p.add_argument("--segmentation", default=None)
    p.add_argument("--mode", required=True, help="1d | output | multilayer:per_layer=..,last_layers=..")
    p.add_argument("--label", choices=("benign", "adversarial"), default="benign")
    p.add_argument("--attack-name", default="none")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train-detector", help="fit the benign/adversarial classifier")
    add_common(p)
    p.add_argument("--features", type=Path, nargs="+", required=True)
    p.add_argument("--detector", choices=("gbt", "logistic"), default="gbt")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--subsample", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_train_detector)

    p = sub.add_parser("evaluate", help="score the detector on the held-out split")
    add_common(p)
    p.add_argument("--detector", type=Path, required=True)
    p.add_argument("--features", type=Path, nargs="+", required=True)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--attack-name", default="unknown")
    p.add_argument("--segmentation-name", default="unknown")
    p.add_argument("--mode-name", default="unknown")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="time/memory grid over (segmentation, mode) cells")
    add_common(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--arch", type=Path, default=None)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--segmentation", action="append", required=True)
    p.add_argument("--mode", action="append", required=True)
    p.add_argument("--images", type=int, default=128)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="merge evaluation report CSVs")
    add_common(p)
    p.add_argument("--inputs", type=Path, nargs="+", required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_report)

    return parser


def _apply_config_file(parser, argv):
    """--config gives per-flag defaults; explicit flags still win."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", type=Path, default=None)
    known, _ = probe.parse_known_args(argv[1:] if argv and not argv[0].startswith("-") else argv)
    if known.config is None:
        return argv
    try:
        doc = json.loads(Path(known.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"{known.config}: cannot read config: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError(f"{known.config}: config must be a JSON object of flag defaults")
    for action in parser._subparsers._group_actions[0].choices.values():  # noqa: SLF001
        action.set_defaults(**{k.replace("-", "_"): v for k, v in doc.items()})
    return argv


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = make_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 4
    except SegIqrError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
