"""Evaluation report CSV: one row per (attack, segmentation, mode) cell."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

from segiqr.data.atomic import atomic_write_bytes
from segiqr.errors import FormatError

REPORT_COLUMNS = ["attack", "segmentation", "mode", "auc", "accuracy",
                  "benign_count", "adversarial_count"]


@dataclass
class ReportCell:
    attack: str
    segmentation: str
    mode: str
    auc: float
    accuracy: float
    benign_count: int
    adversarial_count: int


def write_report(path: str | Path, cells: list[ReportCell]):
    """An empty cell list still writes the header row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for c in cells:
        writer.writerow([c.attack, c.segmentation, c.mode, repr(float(c.auc)),
                         repr(float(c.accuracy)), c.benign_count, c.adversarial_count])
    atomic_write_bytes(Path(path), buf.getvalue().encode("utf-8"))


def read_report(path: str | Path) -> list[ReportCell]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != REPORT_COLUMNS:
        raise FormatError(f"{path}: unexpected report header")
    cells = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(REPORT_COLUMNS):
            raise FormatError(f"{path}: line {i} has {len(row)} fields")
        cells.append(ReportCell(attack=row[0], segmentation=row[1], mode=row[2],
                                auc=float(row[3]), accuracy=float(row[4]),
                                benign_count=int(row[5]), adversarial_count=int(row[6])))
    return cells
