from segiqr.data.atomic import atomic_write_bytes, atomic_write_text
from segiqr.data.cifar10 import (
    ImageBatch,
    images_to_pixels,
    load_cifar10,
    parse_records,
    pixels_to_images,
    read_batch_file,
    records_to_bytes,
    write_batch_file,
)
from segiqr.data.manifest import (
    ExperimentData,
    ExperimentManifest,
    assemble_experiment,
    build_experiment,
    epsilon_for_batch,
    load_manifest,
    save_manifest,
    sha256_file,
)
from segiqr.data.reports import ReportCell, read_report, write_report
from segiqr.data.synthetic import synth_dataset, write_synthetic_cifar_dir

__all__ = [
    "ExperimentData",
    "ExperimentManifest",
    "ImageBatch",
    "ReportCell",
    "assemble_experiment",
    "atomic_write_bytes",
    "atomic_write_text",
    "build_experiment",
    "epsilon_for_batch",
    "images_to_pixels",
    "load_cifar10",
    "load_manifest",
    "parse_records",
    "pixels_to_images",
    "read_batch_file",
    "read_report",
    "records_to_bytes",
    "save_manifest",
    "sha256_file",
    "synth_dataset",
    "write_batch_file",
    "write_report",
]
