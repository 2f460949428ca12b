"""Dataset ingestion and preparation.

Three on-disk formats are read: LIBSVM sparse text, numeric CSV with a
designated label column, and the IDX image/label binary pair. Labels are
normalized to 0-based integers; binary files using {-1, +1} become {0, 1}.
Every example keeps two labels: the (possibly noise-flipped) training label
the learner sees and the true label used for judging predictions.
"""

from __future__ import annotations

import csv as _csv
import dataclasses
import struct
from pathlib import Path

import numpy as np
from scipy import sparse as sp


@dataclasses.dataclass(frozen=True)
class LabeledExample:
    x: np.ndarray
    label: int
    true_label: int


@dataclasses.dataclass
class Dataset:
    """Feature matrix plus paired training/true label vectors."""

    name: str
    X: np.ndarray | sp.csr_matrix
    labels: np.ndarray
    true_labels: np.ndarray
    n_features: int
    n_classes: int
    sparse: bool

    def __len__(self) -> int:
        return self.labels.shape[0]

    def example(self, i: int) -> LabeledExample:
        if self.sparse:
            x = self.X[i].toarray().ravel()
        else:
            x = self.X[i]
        return LabeledExample(x, int(self.labels[i]), int(self.true_labels[i]))

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset(self.name, self.X[indices], self.labels[indices].copy(),
                       self.true_labels[indices].copy(), self.n_features,
                       self.n_classes, self.sparse)


def _make(name, X, labels, n_classes, sparse_flag) -> Dataset:
    labels = np.asarray(labels, dtype=np.int64)
    return Dataset(name, X, labels, labels.copy(),
                   X.shape[1], n_classes, sparse_flag)


def _normalize_binary_label(raw: float, where: str) -> int:
    if raw == -1.0 or raw == 0.0:
        return 0
    if raw == 1.0:
        return 1
    raise ValueError(f"{where}: label {raw} not in {{-1,+1}} or {{0,1}}")


def parse_libsvm(path, n_features: int | None = None, name: str | None = None) -> Dataset:
    """Read LIBSVM sparse text: one 'label idx:val ...' line per example.

    Indices are 1-based in the file. The feature count defaults to the
    largest index seen; passing n_features overrides it (it must cover the
    data). Malformed tokens raise with the offending line number.
    """
    path = Path(path)
    rows, cols, vals, labels = [], [], [], []
    max_idx = 0
    with path.open("r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split()
            try:
                raw = float(tokens[0])
            except ValueError:
                raise ValueError(f"{path.name} line {lineno}: bad label {tokens[0]!r}") from None
            labels.append(_normalize_binary_label(raw, f"{path.name} line {lineno}"))
            row = len(labels) - 1
            for tok in tokens[1:]:
                idx_s, _, val_s = tok.partition(":")
                if not val_s:
                    raise ValueError(f"{path.name} line {lineno}: token {tok!r} is not idx:val")
                try:
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise ValueError(f"{path.name} line {lineno}: token {tok!r} is not idx:val") from None
                if idx < 1:
                    raise ValueError(f"{path.name} line {lineno}: index {idx} is not 1-based")
                max_idx = max(max_idx, idx)
                rows.append(row)
                cols.append(idx - 1)
                vals.append(val)
    if n_features is None:
        n_features = max_idx
    elif n_features < max_idx:
        raise ValueError(f"n_features={n_features} below largest index {max_idx}")
    X = sp.coo_matrix((vals, (rows, cols)), shape=(len(labels), n_features)).tocsr()
    return _make(name or path.stem, X, labels, 2, True)


def write_libsvm(dataset: Dataset, path) -> None:
    """Serialize in the same 1-based sparse text format parse_libsvm reads."""
    path = Path(path)
    X = dataset.X.tocsr() if dataset.sparse else sp.csr_matrix(dataset.X)
    with path.open("w", encoding="ascii") as fh:
        for i in range(len(dataset)):
            row = X.getrow(i)
            parts = [str(int(dataset.labels[i]))]
            for j, v in zip(row.indices, row.data):
                parts.append(f"{j + 1}:{v:.17g}")
            fh.write(" ".join(parts) + "\n")


def parse_csv(path, label_column: int = -1, scale_minmax: bool = False,
              name: str | None = None) -> Dataset:
    """Read a numeric CSV; one column holds integer labels, the rest features.

    Row order is preserved (time-ordered streams rely on this). Ragged rows
    raise with the row number. scale_minmax rescales every feature column to
    [0, 1]; constant columns map to 0.
    """
    path = Path(path)
    rows = []
    width = None
    with path.open("r", newline="", encoding="ascii") as fh:
        for rowno, rec in enumerate(_csv.reader(fh), start=1):
            if not rec:
                continue
            if width is None:
                width = len(rec)
            elif len(rec) != width:
                raise ValueError(f"{path.name} row {rowno}: {len(rec)} fields, expected {width}")
            try:
                rows.append([float(v) for v in rec])
            except ValueError:
                if rowno == 1:
                    width = None  # header row, skip it
                    continue
                raise ValueError(f"{path.name} row {rowno}: non-numeric field") from None
    if not rows:
        raise ValueError(f"{path.name}: no data rows")
    table = np.asarray(rows, dtype=float)
    label_column = label_column % table.shape[1]
    raw_labels = table[:, label_column]
    X = np.delete(table, label_column, axis=1)
    labels, n_classes = _normalize_labels(raw_labels, path.name)
    if scale_minmax:
        lo = X.min(axis=0)
        span = X.max(axis=0) - lo
        span[span == 0.0] = 1.0
        X = (X - lo) / span
    return _make(name or path.stem, X, labels, n_classes, False)


def _normalize_labels(raw: np.ndarray, where: str) -> tuple[np.ndarray, int]:
    vals = set(np.unique(raw).tolist())
    if vals <= {-1.0, 1.0}:
        return (raw > 0).astype(np.int64), 2
    if np.any(raw != np.round(raw)) or raw.min() < 0:
        raise ValueError(f"{where}: labels must be integers >= 0 or -1/+1")
    labels = raw.astype(np.int64)
    return labels, max(2, int(labels.max()) + 1)


def write_csv(dataset: Dataset, path) -> None:
    """Serialize as numeric CSV with the label in the last column."""
    X = np.asarray(dataset.X.todense()) if dataset.sparse else dataset.X
    table = np.column_stack([X, dataset.labels.astype(float)])
    with Path(path).open("w", newline="", encoding="ascii") as fh:
        writer = _csv.writer(fh)
        for row in table:
            writer.writerow([f"{v:.17g}" for v in row])


IDX_IMAGE_MAGIC = 2051
IDX_LABEL_MAGIC = 2049


def parse_idx(images_path, labels_path, name: str | None = None) -> Dataset:
    """Read an IDX image/label file pair (big-endian, magic 2051/2049).

    Pixels are scaled to [0, 1] by dividing by 255; each image becomes one
    flat row of rows*cols features. Labels must be one byte per image and
    the counts must agree.
    """
    images_path, labels_path = Path(images_path), Path(labels_path)
    with images_path.open("rb") as fh:
        magic, count, n_rows, n_cols = struct.unpack(">IIII", fh.read(16))
        if magic != IDX_IMAGE_MAGIC:
            raise ValueError(f"{images_path.name}: bad magic {magic}, expected {IDX_IMAGE_MAGIC}")
        pixels = np.frombuffer(fh.read(), dtype=np.uint8)
    if pixels.size != count * n_rows * n_cols:
        raise ValueError(f"{images_path.name}: truncated image payload")
    with labels_path.open("rb") as fh:
        magic, label_count = struct.unpack(">II", fh.read(8))
        if magic != IDX_LABEL_MAGIC:
            raise ValueError(f"{labels_path.name}: bad magic {magic}, expected {IDX_LABEL_MAGIC}")
        labels = np.frombuffer(fh.read(), dtype=np.uint8)
    if labels.size != label_count:
        raise ValueError(f"{labels_path.name}: truncated label payload")
    if label_count != count:
        raise ValueError(f"image count {count} != label count {label_count}")
    X = pixels.reshape(count, n_rows * n_cols).astype(float) / 255.0
    return _make(name or images_path.stem, X, labels.astype(np.int64), 10, False)


def flip_labels(dataset: Dataset, fraction: float, seed: int) -> Dataset:
    """Flip each binary training label independently with the given
    probability; true labels are preserved for evaluation."""
    if dataset.n_classes != 2:
        raise ValueError("label flipping is defined for binary datasets only")
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    rng = np.random.default_rng(seed)
    flip = rng.random(len(dataset)) < fraction
    labels = np.where(flip, 1 - dataset.labels, dataset.labels)
    return Dataset(dataset.name, dataset.X, labels, dataset.true_labels.copy(),
                   dataset.n_features, dataset.n_classes, dataset.sparse)


def split_shuffle(dataset: Dataset, train_fraction: float, seed: int,
                  shuffle: bool = True) -> tuple[Dataset, Dataset]:
    """Split into train/test after an optional seeded shuffle.

    With shuffle=False the stream order is kept and the split is a plain
    prefix/suffix cut (time-ordered data must never be shuffled).
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be strictly between 0 and 1")
    n = len(dataset)
    order = np.random.default_rng(seed).permutation(n) if shuffle else np.arange(n)
    cut = int(n * train_fraction)
    return dataset.subset(order[:cut]), dataset.subset(order[cut:])


def synthetic_linear(n: int, n_features: int, seed: int,
                     flip_fraction: float = 0.0, name: str = "synthetic") -> Dataset:
    """Linearly separable Gaussian features labeled by a random teacher.

    Demo and test plumbing: standard normal features, label = sign of the
    teacher margin, optional independent label flips.
    """
    rng = np.random.default_rng(seed)
    teacher = rng.standard_normal(n_features)
    X = rng.standard_normal((n, n_features))
    labels = (X @ teacher >= 0.0).astype(np.int64)
    ds = _make(name, X, labels, 2, False)
    if flip_fraction > 0.0:
        ds = flip_labels(ds, flip_fraction, seed + 1)
    return ds
