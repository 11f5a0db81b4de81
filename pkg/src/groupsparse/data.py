"""Datasets: CSV and IDX loading, min-max scaling, splitting and batching."""

from __future__ import annotations

import csv
import gzip
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
GZIP_MAGIC = b"\x1f\x8b"


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    image_shape: tuple[int, int] | None = None
    name: str = ""

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise ValueError(f"features must be a matrix, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValueError(f"{y.size} labels for {X.shape[0]} samples")
        if not np.issubdtype(y.dtype, np.integer):
            if not np.all(y == np.round(y)):
                raise ValueError("labels must be integers")
            y = y.astype(np.int64)
        if np.isnan(X).any():
            raise ValueError("features contain NaN")
        if y.size and (y.min() < 0 or y.max() >= self.n_classes):
            raise ValueError(f"labels must lie in [0, {self.n_classes})")
        if self.image_shape is not None:
            shape = tuple(int(s) for s in self.image_shape)
            if len(shape) != 2 or shape[0] * shape[1] != X.shape[1]:
                raise ValueError(f"image shape {shape} inconsistent with {X.shape[1]} features")
            object.__setattr__(self, "image_shape", shape)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y.astype(np.int64))

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        return replace(self, features=self.features[idx], labels=self.labels[idx])

    def one_hot(self) -> np.ndarray:
        return one_hot(self.labels, self.n_classes)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path, name=None) -> Dataset:
    """Numeric CSV whose last column is the integer class label.

    A first row with any non-numeric cell is treated as a header.
    """
    path = Path(path)
    with open(path, newline="") as f:
        rows = [r for r in csv.reader(f) if r]
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    if width < 2:
        raise ValueError(f"{path}: need at least one feature column and a label column")
    for i, r in enumerate(rows):
        if len(r) != width:
            raise ValueError(f"{path}: row {i} has {len(r)} cells, expected {width}")
    try:
        table = np.array(rows, dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric cell ({exc})") from None
    labels = table[:, -1]
    if np.any(labels != np.round(labels)) or labels.min() < 0:
        raise ValueError(f"{path}: labels must be non-negative integers")
    labels = labels.astype(np.int64)
    return Dataset(table[:, :-1], labels, int(labels.max()) + 1, name=name or path.stem)


def _read_maybe_gzip(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == GZIP_MAGIC:
        raw = gzip.decompress(raw)
    return raw


def _parse_idx(raw: bytes, magic: int, path) -> tuple[tuple[int, ...], bytes]:
    if len(raw) < 8:
        raise ValueError(f"{path}: truncated IDX header")
    found = struct.unpack(">I", raw[:4])[0]
    if found != magic:
        raise ValueError(f"{path}: bad IDX magic 0x{found:08x}, expected 0x{magic:08x}")
    ndim = raw[3]
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise ValueError(f"{path}: truncated IDX header")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    payload = raw[header:]
    if len(payload) < int(np.prod(dims)):
        raise ValueError(f"{path}: truncated payload, {len(payload)} of {int(np.prod(dims))} bytes")
    return dims, payload[: int(np.prod(dims))]


def load_idx(images_path, labels_path, n_classes=None, name="idx") -> Dataset:
    """IDX image/label pair (raw or gzip). Pixels are returned unscaled."""
    dims, pixels = _parse_idx(_read_maybe_gzip(images_path), IDX_IMAGES_MAGIC, images_path)
    (n_labels,), labels = _parse_idx(_read_maybe_gzip(labels_path), IDX_LABELS_MAGIC, labels_path)
    n, rows, cols = dims
    if n != n_labels:
        raise ValueError(f"{n} images but {n_labels} labels")
    X = np.frombuffer(pixels, dtype=np.uint8).reshape(n, rows * cols).astype(np.float64)
    y = np.frombuffer(labels, dtype=np.uint8).astype(np.int64)
    if n_classes is None:
        n_classes = int(y.max()) + 1 if n else 1
    return Dataset(X, y, n_classes, image_shape=(rows, cols), name=name)


def write_idx(images, labels, images_path, labels_path, compress=False):
    """Write uint8 images ``(n, rows, cols)`` and labels in IDX format."""
    images = np.asarray(images)
    labels = np.asarray(labels)
    if images.ndim != 3 or labels.shape != (images.shape[0],):
        raise ValueError("expected images (n, rows, cols) and n labels")
    opener = gzip.open if compress else open
    with opener(images_path, "wb") as f:
        f.write(struct.pack(">I3I", IDX_IMAGES_MAGIC, *images.shape))
        f.write(images.astype(np.uint8).tobytes())
    with opener(labels_path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0]))
        f.write(labels.astype(np.uint8).tobytes())


def normalize_minmax(dataset: Dataset) -> Dataset:
    """Affine map of every column onto [0, 1]; constant columns become 0."""
    X = dataset.features
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    Z = np.where(span > 0, (X - lo) / safe, 0.0)
    return replace(dataset, features=Z)


def split(dataset: Dataset, test_fraction=0.25, seed=0) -> tuple[Dataset, Dataset]:
    """Uniform random train/test split; the test side gets ``floor(N * fraction)`` samples."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    n = len(dataset)
    n_test = int(np.floor(n * test_fraction))
    if n_test == 0 or n_test == n:
        raise ValueError(f"test fraction {test_fraction} leaves an empty side for {n} samples")
    perm = np.random.default_rng(seed).permutation(n)
    return dataset.subset(perm[n_test:]), dataset.subset(perm[:n_test])


def one_hot(labels, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"labels out of range for {n_classes} classes")
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


def minibatches(n_samples: int, batch_size: int, epoch_seed) -> list[np.ndarray]:
    """Shuffled consecutive index slices; the last one may be short."""
    if batch_size < 1:
        raise ValueError("batch_size must be at least 1")
    perm = np.random.default_rng(epoch_seed).permutation(n_samples)
    return [perm[i:i + batch_size] for i in range(0, n_samples, batch_size)]


def synth_blobs(n_per_class, informative_d, noise_d, n_classes=2, seed=0, separation=4.0) -> Dataset:
    """Gaussian classes on the informative columns followed by pure-noise columns.

    Two classes sit ``separation`` standard deviations apart with the gap
    shared equally by the informative columns; more classes get means on a
    sphere of radius ``separation`` in random directions. The result is
    min-max scaled.
    """
    if min(n_per_class, informative_d, n_classes) < 1 or noise_d < 0:
        raise ValueError("sizes must be positive")
    rng = np.random.default_rng(seed)
    if n_classes == 2:
        # +-half the separation, spread evenly so every informative column carries signal
        signs = rng.choice([-1.0, 1.0], size=informative_d)
        means = np.outer([0.5, -0.5], signs) * separation / np.sqrt(informative_d)
    else:
        means = rng.normal(size=(n_classes, informative_d))
        means *= separation / np.linalg.norm(means, axis=1, keepdims=True)
    labels = np.repeat(np.arange(n_classes), n_per_class)
    informative = means[labels] + rng.normal(size=(labels.size, informative_d))
    noise = rng.normal(size=(labels.size, noise_d))
    ds = Dataset(np.hstack([informative, noise]), labels, n_classes, name="blobs")
    return normalize_minmax(ds)


def load_digits() -> Dataset:
    """The 1797-sample 8x8 handwritten digits set shipped with scikit-learn."""
    from sklearn.datasets import load_digits as _sk_digits

    bunch = _sk_digits()
    return Dataset(bunch.data, bunch.target, 10, image_shape=(8, 8), name="digits")
