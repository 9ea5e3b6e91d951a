"""Dataset ingestion: LIBSVM sparse text and numeric CSV."""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from ..errors import ParseError


@dataclass(frozen=True)
class Dataset:
    """Dense feature matrix (rows = samples) with one label per row."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.features.ndim != 2 or self.labels.ndim != 1:
            raise ParseError("features must be 2-D and labels 1-D")
        if self.features.shape[0] != self.labels.shape[0]:
            raise ParseError(
                f"{self.features.shape[0]} rows vs {self.labels.shape[0]} labels"
            )

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


def _as_lines(text):
    if isinstance(text, str):
        return io.StringIO(text)
    return text


def parse_libsvm(text) -> Dataset:
    """Parse LIBSVM sparse lines ``<label> <idx>:<val> ...``.

    Feature indices are 1-based and must be strictly increasing within a
    line; the dense matrix is sized by the largest index in the file.
    Binary labels are remapped to {0, 1} with the smaller original label
    becoming 0 (so {-1,+1} and {1,2} both land on {0,1}).
    """
    rows: list[dict[int, float]] = []
    raw_labels: list[float] = []
    max_index = 0
    for lineno, line in enumerate(_as_lines(text), start=1):
        line = line.strip()
        if not line:
            continue
        tokens = line.split()
        try:
            raw_labels.append(float(tokens[0]))
        except ValueError:
            raise ParseError(f"bad label {tokens[0]!r}", line=lineno) from None
        entries: dict[int, float] = {}
        prev_index = 0
        for token in tokens[1:]:
            idx_str, _, val_str = token.partition(":")
            try:
                idx = int(idx_str)
                val = float(val_str)
            except ValueError:
                raise ParseError(f"bad token {token!r}", line=lineno) from None
            if idx <= prev_index:
                raise ParseError(
                    f"index {idx} not strictly increasing", line=lineno
                )
            prev_index = idx
            entries[idx] = val
        max_index = max(max_index, prev_index)
        rows.append(entries)

    features = np.zeros((len(rows), max_index))
    for i, entries in enumerate(rows):
        for idx, val in entries.items():
            features[i, idx - 1] = val
    labels = _remap_binary_labels(np.array(raw_labels))
    return Dataset(features=features, labels=labels)


def _remap_binary_labels(raw: np.ndarray) -> np.ndarray:
    if raw.size == 0:
        return raw
    values = np.unique(raw)
    if values.size > 2:
        raise ParseError(f"expected binary labels, found {values.size} distinct")
    if values.size == 1:
        return np.zeros_like(raw)
    return np.where(raw == values[0], 0.0, 1.0)


def serialize_libsvm(dataset: Dataset) -> str:
    """Inverse of parse_libsvm for datasets whose last column is realized."""
    lines = []
    for i in range(dataset.n_rows):
        label = dataset.labels[i]
        parts = [repr(int(label)) if label == int(label) else repr(float(label))]
        row = dataset.features[i]
        for j in np.nonzero(row)[0]:
            parts.append(f"{j + 1}:{row[j]!r}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


def scan_libsvm_counts(text) -> tuple[int, int]:
    """Independent row/feature count of a LIBSVM file (no parsing into arrays)."""
    n_rows = 0
    max_index = 0
    for line in _as_lines(text):
        line = line.strip()
        if not line:
            continue
        n_rows += 1
        last = line.split()[-1]
        if ":" in last:
            max_index = max(max_index, int(last.split(":")[0]))
    return n_rows, max_index


def parse_csv_numeric(text, target_column: int) -> Dataset:
    """Parse a rectangular numeric CSV (optional single header row).

    All non-target columns are standardized to zero mean / unit variance
    (constant columns become all zeros); the target column is kept raw
    as labels.
    """
    rows: list[list[float]] = []
    width = None
    for lineno, line in enumerate(_as_lines(text), start=1):
        line = line.strip()
        if not line:
            continue
        cells = line.split(",")
        if width is None:
            width = len(cells)
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                continue  # header row
        else:
            if len(cells) != width:
                raise ParseError(
                    f"expected {width} columns, got {len(cells)}", line=lineno
                )
            try:
                rows.append([float(c) for c in cells])
            except ValueError as exc:
                raise ParseError(f"non-numeric cell: {exc}", line=lineno) from None
    if width is None:
        raise ParseError("empty csv")
    if not 0 <= target_column < width:
        raise ParseError(f"target column {target_column} out of range 0..{width - 1}")
    table = np.array(rows)
    labels = table[:, target_column]
    features = np.delete(table, target_column, axis=1)
    features = standardize_columns(features)
    return Dataset(features=features, labels=labels)


def standardize_columns(features: np.ndarray, var_floor: float = 1e-12) -> np.ndarray:
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    centered = features - mean
    out = np.zeros_like(centered)
    live = std > var_floor
    out[:, live] = centered[:, live] / std[live]
    return out
