"""Experiment manifests: seeded, checksummed dataset assembly.

A manifest pins the attack spec, epsilon grid, batch layout, seeds, and the
benign/adversarial batch files with their checksums, so reassembling from
the same manifest yields a bit-identical dataset.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from segiqr.attacks import AttackParams, attack_batch
from segiqr.data.atomic import atomic_write_text
from segiqr.data.cifar10 import ImageBatch, read_batch_file, write_batch_file
from segiqr.errors import ChecksumError, ConfigError, DataError
from segiqr.nn.network import Network


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class ExperimentManifest:
    attack: dict                       # method + per-method settings
    epsilons: list[float]
    segmentation: dict
    taps: dict
    batch_count: int
    batch_size: int
    sample_seed: int
    split_seed: int
    files: dict = field(default_factory=dict)   # role -> [{path, sha256, epsilon}]

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentManifest":
        doc = json.loads(text)
        return cls(**{k: doc[k] for k in (
            "attack", "epsilons", "segmentation", "taps", "batch_count",
            "batch_size", "sample_seed", "split_seed", "files")})


def save_manifest(manifest: ExperimentManifest, path: str | Path):
    atomic_write_text(Path(path), manifest.to_json())


def load_manifest(path: str | Path) -> ExperimentManifest:
    return ExperimentManifest.from_json(Path(path).read_text(encoding="utf-8"))


def epsilon_for_batch(epsilons: list[float], batch_index: int, batch_count: int) -> float:
    """Deterministic epsilon thirds: the batch list is cut into len(epsilons)
    equal runs, first run at the first epsilon, and so on."""
    share = batch_index * len(epsilons) // batch_count
    return float(epsilons[share])


def build_experiment(net: Network, pool: ImageBatch, manifest: ExperimentManifest,
                     out_dir: str | Path) -> ExperimentManifest:
    """Samples benign batches from the pool, attacks each one at its batch's
    epsilon, and writes every batch file plus the manifest with checksums.

    Failed attacks stay in the adversarial batches, matching a generation
    criterion of "any misclassification"; residual accuracy is recorded in
    the sidecar metadata.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_total = manifest.batch_count * manifest.batch_size
    if n_total > len(pool):
        raise ConfigError(f"pool holds {len(pool)} images, manifest needs {n_total}")
    rng = np.random.default_rng(manifest.sample_seed)
    order = rng.permutation(len(pool))[:n_total]
    files = {"benign": [], "adversarial": []}
    for b in range(manifest.batch_count):
        idx = order[b * manifest.batch_size:(b + 1) * manifest.batch_size]
        images = pool.images[idx]
        labels = pool.labels[idx]
        eps = epsilon_for_batch(manifest.epsilons, b, manifest.batch_count)
        params = AttackParams(**{**manifest.attack, "epsilon": eps})
        results, summary = attack_batch(net, images, labels, params)
        adv_images = np.stack([r.image for r in results])

        benign_path = out_dir / f"benign_{b:03d}.bin"
        adv_path = out_dir / f"adversarial_{b:03d}.bin"
        write_batch_file(benign_path, images, labels)
        write_batch_file(adv_path, adv_images, labels)
        meta = {
            "method": params.method,
            "epsilon": eps,
            "seed": params.seed,
            "source_indices": [int(i) for i in idx],
            "success_mask": [bool(r.success) for r in results],
            "accuracy_after_attack": summary.accuracy,
        }
        atomic_write_text(adv_path.with_suffix(".json"), json.dumps(meta, indent=2))
        files["benign"].append({"path": benign_path.name, "sha256": sha256_file(benign_path),
                                "epsilon": 0.0})
        files["adversarial"].append({"path": adv_path.name, "sha256": sha256_file(adv_path),
                                     "epsilon": eps})
    manifest.files = files
    save_manifest(manifest, out_dir / "manifest.json")
    return manifest


@dataclass
class ExperimentData:
    benign: list[ImageBatch]
    adversarial: list[ImageBatch]
    adversarial_epsilons: list[float]
    manifest: ExperimentManifest


def assemble_experiment(manifest_path: str | Path) -> ExperimentData:
    """Loads every referenced batch, verifying checksums, and pairs benign
    with adversarial batches in manifest order."""
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    base = manifest_path.parent
    if set(manifest.files) != {"benign", "adversarial"}:
        raise DataError(f"{manifest_path}: manifest must reference benign and adversarial files")
    if len(manifest.files["benign"]) != len(manifest.files["adversarial"]):
        raise DataError(f"{manifest_path}: benign/adversarial batch counts differ")

    def load_side(role):
        batches = []
        for entry in manifest.files[role]:
            path = base / entry["path"]
            if not path.exists():
                raise DataError(f"{path}: referenced by manifest but missing")
            digest = sha256_file(path)
            if digest != entry["sha256"]:
                raise ChecksumError(
                    f"{path}: checksum mismatch, expected {entry['sha256']}, found {digest}"
                )
            batches.append(read_batch_file(path))
        return batches

    benign = load_side("benign")
    adversarial = load_side("adversarial")
    eps = [float(e["epsilon"]) for e in manifest.files["adversarial"]]
    return ExperimentData(benign=benign, adversarial=adversarial,
                          adversarial_epsilons=eps, manifest=manifest)
