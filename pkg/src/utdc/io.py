"""CSV/JSON ingestion and report output.

File formats
------------
logits CSV    header ``logit_0,...,logit_{k-1}``, one row per sample
labels CSV    header ``label``, one integer per row
features CSV  header ``f_0,...,f_{d-1}``
meta records  JSON array of ``{"accuracy", "features_path"}`` or
              ``{"accuracy", "frechet_sq"}`` objects
"""
from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import __version__, maps, metrics
from .accuracy import MetaDatasetRecord, summarize_features
from .errors import (
    HeaderMismatchError,
    LabelOutOfRangeError,
    MissingFileError,
    NonFiniteValueError,
    ParseError,
    ReportIOError,
    RowCountMismatchError,
)
from .maps import CalibrationMap
from .metrics import PredictionSet

TABLE_METRICS = ("ada_ece", "ece", "nll", "brier")
RELIABILITY_COLUMNS = ("bin_index", "bin_confidence", "bin_accuracy", "bin_count")


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"file not found: {path}")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise HeaderMismatchError(f"{path}: empty file, expected a header row")
    return [h.strip() for h in rows[0]], rows[1:]


def _read_matrix(path, prefix: str) -> np.ndarray:
    header, rows = _read_rows(path)
    expected = [f"{prefix}_{j}" for j in range(len(header))]
    if header != expected or not header:
        raise HeaderMismatchError(
            f"{path}: header {header} does not match {prefix}_0..{prefix}_{len(header) - 1}"
        )
    out = np.empty((len(rows), len(header)))
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ParseError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
        for j, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(f"{path}: row {i}, column {header[j]}: "
                                 f"cannot parse {cell!r}") from None
            if not math.isfinite(value):
                raise NonFiniteValueError(
                    f"{path}: non-finite value {cell!r} at row {i}, column {header[j]}"
                )
            out[i, j] = value
    return out


def load_labels(path) -> np.ndarray:
    header, rows = _read_rows(path)
    if header != ["label"]:
        raise HeaderMismatchError(f"{path}: header {header} does not match ['label']")
    labels = np.empty(len(rows), dtype=np.int64)
    for i, row in enumerate(rows):
        if len(row) != 1:
            raise ParseError(f"{path}: row {i} has {len(row)} cells, expected 1")
        try:
            labels[i] = int(row[0])
        except ValueError:
            raise ParseError(f"{path}: row {i}: cannot parse label {row[0]!r}") from None
    return labels


def load_prediction_set(logits_path, labels_path=None) -> PredictionSet:
    logits = _read_matrix(logits_path, "logit")
    if logits.shape[0] == 0:
        raise ParseError(f"{logits_path}: no data rows")
    labels = None
    if labels_path is not None:
        labels = load_labels(labels_path)
        if labels.shape[0] != logits.shape[0]:
            raise RowCountMismatchError(
                f"{labels_path} has {labels.shape[0]} rows, {logits_path} has {logits.shape[0]}"
            )
        k = logits.shape[1]
        bad = np.flatnonzero((labels < 0) | (labels >= k))
        if bad.size:
            raise LabelOutOfRangeError(
                f"{labels_path}: label {labels[bad[0]]} at row {bad[0]} outside [0, {k})"
            )
    return PredictionSet(logits, labels)


def load_features(path) -> np.ndarray:
    return _read_matrix(path, "f")


def load_meta_records(path) -> list[MetaDatasetRecord]:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"file not found: {path}")
    try:
        entries = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(entries, list):
        raise ParseError(f"{path}: expected a JSON array of records")
    records = []
    for i, entry in enumerate(entries):
        if "accuracy" not in entry:
            raise ParseError(f"{path}: record {i} has no 'accuracy'")
        if "frechet_sq" in entry:
            records.append(MetaDatasetRecord(float(entry["accuracy"]),
                                             frechet_sq=float(entry["frechet_sq"])))
        elif "features_path" in entry:
            fp = Path(entry["features_path"])
            if not fp.is_absolute():
                fp = path.parent / fp
            records.append(MetaDatasetRecord(float(entry["accuracy"]),
                                             summary=summarize_features(load_features(fp))))
        else:
            raise ParseError(f"{path}: record {i} needs 'frechet_sq' or 'features_path'")
    return records


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc.strerror or exc}") from None


def csv_text(header: Iterable[str], rows: Iterable[Iterable]) -> str:
    lines = [",".join(header)]
    lines += [",".join(str(c) for c in row) for row in rows]
    return "\n".join(lines) + "\n"


def fmt_float(x: float) -> str:
    """Shortest decimal that round-trips to the same double."""
    return repr(float(x))


def save_matrix(path, values: np.ndarray, prefix: str) -> None:
    header = [f"{prefix}_{j}" for j in range(values.shape[1])]
    body = ([format(v, ".17g") for v in row] for row in values.tolist())
    atomic_write_text(path, csv_text(header, body))


def save_prediction_set(preds: PredictionSet, logits_path, labels_path=None) -> None:
    save_matrix(logits_path, preds.logits, "logit")
    if labels_path is not None:
        save_labels(labels_path, preds.require_labels("saving labels"))


def save_labels(path, labels) -> None:
    atomic_write_text(path, csv_text(["label"], ([int(y)] for y in labels)))


def dump_json(data) -> str:
    return json.dumps(data, indent=2, allow_nan=False) + "\n"


def save_map(path, cmap: CalibrationMap) -> None:
    atomic_write_text(path, dump_json(cmap.to_dict()))


def load_map(path) -> CalibrationMap:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"file not found: {path}")
    try:
        return CalibrationMap.from_dict(json.loads(path.read_text()))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None


@dataclass
class Report:
    methods: list = field(default_factory=list)       # MethodResult.to_dict() rows
    utdc: Optional[dict] = None
    estimator: Optional[dict] = None
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    tool_version: str = __version__

    def to_dict(self) -> dict:
        out = {
            "tool_version": self.tool_version,
            "config": self.config,
            "estimator": self.estimator,
            "utdc": self.utdc,
            "methods": self.methods,
        }
        out.update(self.extra)
        return out


def table_rows(report: Report) -> list[list[str]]:
    rows = []
    for m in report.methods:
        tm = m.get("target_metrics") or {}
        cells = [f"{100 * tm[name]:.2f}" if name in tm else "" for name in TABLE_METRICS]
        temp = m["map"]["parameters"].get("temperature") if m["map"]["kind"] == "temperature" else None
        rows.append([m["method"], *cells, "" if temp is None else fmt_float(temp)])
    return rows


def emit_report(report: Report, output_dir, formats=("json", "csv")) -> dict[str, Path]:
    """Write ``report.json`` and/or ``table.csv`` into ``output_dir``."""
    output_dir = Path(output_dir)
    written = {}
    if "json" in formats:
        written["json"] = output_dir / "report.json"
        atomic_write_text(written["json"], dump_json(report.to_dict()))
    if "csv" in formats:
        written["csv"] = output_dir / "table.csv"
        header = ["method", *TABLE_METRICS, "temperature"]
        atomic_write_text(written["csv"], csv_text(header, table_rows(report)))
    return written


def reliability_rows(preds: PredictionSet, cmap: CalibrationMap,
                     M: int = metrics.DEFAULT_BINS) -> list[dict]:
    preds.require_labels("reliability data")
    calibrated = maps.apply_map(cmap, preds)
    part = metrics.partition_equal_mass(metrics.profile(calibrated), M)
    return [
        {"bin_index": m, "bin_confidence": float(part.bin_confidence[m]),
         "bin_accuracy": float(part.bin_accuracy[m]), "bin_count": int(part.bin_count[m])}
        for m in range(M)
    ]


def emit_reliability_data(preds: PredictionSet, cmap: CalibrationMap, M: int, path) -> list[dict]:
    rows = reliability_rows(preds, cmap, M)
    body = ([r["bin_index"], fmt_float(r["bin_confidence"]), fmt_float(r["bin_accuracy"]), r["bin_count"]]
            for r in rows)
    atomic_write_text(path, csv_text(RELIABILITY_COLUMNS, body))
    return rows


def read_csv_dicts(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
