"""Labeled vector datasets and their CSV persistence.

CSV layout: header ``label,f0,...,f{d-1}``, one sample per row, labels as
non-negative base-10 integers, features as decimal reals.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    n_classes: int

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(0, 0)
        if X.ndim != 2:
            raise DataError("features must form a 2-D array")
        if y.shape != (X.shape[0],):
            raise DataError("need exactly one label per sample")
        if y.size and not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.equal(np.mod(y, 1), 0)):
                raise DataError("labels must be integers")
        y = y.astype(np.int64)
        if y.size and (y.min() < 0 or y.max() >= self.n_classes):
            raise DataError(f"labels must lie in [0, {self.n_classes})")
        if not np.all(np.isfinite(X)):
            raise DataError("features must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "n_classes", int(self.n_classes))

    @classmethod
    def from_arrays(cls, X, y, n_classes: int | None = None) -> "LabeledDataset":
        y = np.asarray(y, dtype=np.int64)
        if n_classes is None:
            n_classes = int(y.max()) + 1 if y.size else 0
        return cls(np.asarray(X, dtype=np.float64), y, n_classes)

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.n_classes)

    def subset(self, index) -> "LabeledDataset":
        return LabeledDataset(self.X[index], self.y[index], self.n_classes)

    def concat(self, other: "LabeledDataset") -> "LabeledDataset":
        if other.d != self.d:
            raise DataError(f"dimension mismatch: {self.d} vs {other.d}")
        return LabeledDataset(np.vstack([self.X, other.X]),
                              np.concatenate([self.y, other.y]),
                              max(self.n_classes, other.n_classes))


def load_dataset(path, n_classes: int | None = None) -> LabeledDataset:
    """Read a labeled CSV; ``n_classes`` defaults to ``1 + max(label)``."""
    path = os.fspath(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0] != "label":
        raise DataError(f"{path}: header must start with 'label' followed by feature columns")
    width = len(header)
    X, y = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != width:
            raise DataError(f"{path}: line {lineno}: expected {width} fields, got {len(row)}")
        try:
            label = int(row[0].strip(), 10)
        except ValueError:
            raise DataError(f"{path}: line {lineno}: non-integer label {row[0]!r}") from None
        if label < 0:
            raise DataError(f"{path}: line {lineno}: negative label {label}")
        try:
            values = [float(c) for c in row[1:]]
        except ValueError:
            raise DataError(f"{path}: line {lineno}: non-numeric feature") from None
        y.append(label)
        X.append(values)
    if not X:
        raise DataError(f"{path}: no samples")
    y = np.array(y, dtype=np.int64)
    if n_classes is None:
        n_classes = int(y.max()) + 1
    try:
        return LabeledDataset(np.array(X, dtype=np.float64), y, n_classes)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def save_dataset(dataset: LabeledDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label"] + [f"f{j}" for j in range(dataset.d)])
        for label, row in zip(dataset.y, dataset.X):
            writer.writerow([int(label)] + [repr(float(v)) for v in row])
