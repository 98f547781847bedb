"""Datasets: IDX (MNIST distribution format) files, synthetic blobs, batching."""
import gzip
import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, FormatError

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


@dataclass
class Dataset:
    inputs: np.ndarray  # (M, d), values in [0, 1]
    labels: np.ndarray  # (M, C), one-hot
    name: str = ""
    checksum: str = ""

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.inputs.ndim != 2 or self.labels.ndim != 2:
            raise ConfigurationError("dataset inputs and labels must be 2-D")
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise ConfigurationError(
                f"{self.inputs.shape[0]} inputs but {self.labels.shape[0]} labels"
            )
        if self.inputs.size and (self.inputs.min() < 0.0 or self.inputs.max() > 1.0):
            raise ConfigurationError("dataset inputs must lie in [0, 1]")
        lab = self.labels
        if lab.size and not (np.isin(lab, (0.0, 1.0)).all() and (lab.sum(axis=1) == 1.0).all()):
            raise ConfigurationError("dataset labels must be one-hot rows")

    def __len__(self):
        return self.inputs.shape[0]

    @property
    def n_classes(self):
        return self.labels.shape[1]

    @property
    def class_ids(self):
        return np.argmax(self.labels, axis=1)

    def take(self, idx, name=None):
        idx = np.asarray(idx)
        return Dataset(self.inputs[idx], self.labels[idx], name or self.name, self.checksum)


def one_hot(labels, n_classes=None):
    labels = np.asarray(labels, dtype=np.int64)
    if n_classes is None:
        n_classes = int(labels.max()) + 1 if labels.size else 1
    out = np.zeros((labels.shape[0], n_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def _read_bytes(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _parse_idx(raw, expected_magic, what):
    if len(raw) < 4:
        raise FormatError("magic", f"{what} file shorter than its magic number")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise FormatError(
            "magic", f"{what} file has magic 0x{magic:08x}, expected 0x{expected_magic:08x}"
        )
    ndim = magic & 0xFF
    header_len = 4 + 4 * ndim
    if len(raw) < header_len:
        raise FormatError("dimensions", f"{what} header truncated")
    dims = struct.unpack(">" + "I" * ndim, raw[4:header_len])
    n_values = int(np.prod(dims))
    body = raw[header_len:]
    if len(body) != n_values:
        field = "pixels" if what == "images" else "labels"
        raise FormatError(field, f"expected {n_values} bytes of data, got {len(body)}")
    return dims, np.frombuffer(body, dtype=np.uint8)


def load_idx(images_path, labels_path, name=None):
    """Load an IDX image/label pair (optionally gzip-compressed)."""
    raw_img = _read_bytes(images_path)
    raw_lab = _read_bytes(labels_path)
    dims, pixels = _parse_idx(raw_img, IMAGES_MAGIC, "images")
    (n_labels,), labels = _parse_idx(raw_lab, LABELS_MAGIC, "labels")
    n = dims[0]
    if n != n_labels:
        raise FormatError("count", f"{n} images but {n_labels} labels")
    inputs = pixels.reshape(n, -1).astype(np.float64) / 255.0
    digest = hashlib.sha256(raw_img + raw_lab).hexdigest()
    return Dataset(inputs, one_hot(labels), name or str(images_path), digest)


def write_idx(dataset, images_path, labels_path, shape=None, compress=None):
    """Write ``dataset`` as IDX files; pixels are rounded to multiples of 1/255.

    ``shape`` is the per-image ``(rows, cols)``; square images are assumed
    when the input dimension is a perfect square, otherwise ``(1, d)``.
    """
    n, d = dataset.inputs.shape
    if shape is None:
        r = int(round(np.sqrt(d)))
        shape = (r, r) if r * r == d else (1, d)
    pixels = np.clip(np.rint(dataset.inputs * 255.0), 0, 255).astype(np.uint8)
    labels = dataset.class_ids.astype(np.uint8)
    img = struct.pack(">IIII", IMAGES_MAGIC, n, *shape) + pixels.tobytes()
    lab = struct.pack(">II", LABELS_MAGIC, n) + labels.tobytes()
    for path, payload in ((images_path, img), (labels_path, lab)):
        gz = compress if compress is not None else str(path).endswith(".gz")
        with open(path, "wb") as fh:
            # mtime=0 keeps the compressed bytes reproducible
            fh.write(gzip.compress(payload, mtime=0) if gz else payload)


def stratified_order(class_ids):
    """Indices interleaved round-robin over classes, each class in file order."""
    class_ids = np.asarray(class_ids)
    per_class = [list(np.flatnonzero(class_ids == c)) for c in np.unique(class_ids)]
    order = []
    depth = max(len(p) for p in per_class) if per_class else 0
    for j in range(depth):
        for p in per_class:
            if j < len(p):
                order.append(p[j])
    return np.asarray(order, dtype=np.int64)


def desk_subset(dataset, n, skip=0):
    """Deterministic label-stratified subset of ``n`` samples.

    ``skip`` samples at the front of the round-robin order are passed over,
    so disjoint train/test subsets can be cut from one source.
    """
    order = stratified_order(dataset.class_ids)
    if skip + n > len(order):
        raise ConfigurationError(f"subset of {n} (+{skip} skipped) exceeds {len(order)} samples")
    return dataset.take(order[skip : skip + n], name=f"{dataset.name}[{skip}:{skip + n}]")


def _simplex_centers(n_classes, dim, separation):
    if dim >= n_classes:
        return np.eye(n_classes, dim) * (separation / np.sqrt(2.0))
    if dim == 1:
        return (np.arange(n_classes) * separation)[:, None]
    # regular polygon in the first two coordinates, neighbours `separation` apart
    radius = separation / (2.0 * np.sin(np.pi / n_classes))
    angles = 2.0 * np.pi * np.arange(n_classes) / n_classes
    centers = np.zeros((n_classes, dim))
    centers[:, 0] = radius * np.cos(angles)
    centers[:, 1] = radius * np.sin(angles)
    return centers


def synthetic_gaussian_blobs(n_classes, n_per_class, dim, seed, separation, name="blobs"):
    """Isotropic unit-variance Gaussian classes, min-max scaled into [0, 1]."""
    if n_classes < 1 or n_per_class < 1 or dim < 1 or separation < 0:
        raise ConfigurationError("blob parameters must be positive")
    rng = np.random.default_rng(seed)
    centers = _simplex_centers(n_classes, dim, separation)
    X = np.concatenate([c + rng.standard_normal((n_per_class, dim)) for c in centers])
    y = np.repeat(np.arange(n_classes), n_per_class)
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    span[span == 0] = 1.0
    X = (X - lo) / span
    order = stratified_order(y)
    return Dataset(X[order], one_hot(y[order], n_classes), name, f"seed={seed}")


def batch_indices(n_samples, batch_size, epoch_seed):
    """Disjoint full batches from a seeded shuffle; the remainder is dropped."""
    if not 1 <= batch_size <= n_samples:
        raise ConfigurationError(f"batch size {batch_size} not in [1, {n_samples}]")
    perm = np.random.default_rng(epoch_seed).permutation(n_samples)
    n_batches = n_samples // batch_size
    return [perm[i * batch_size : (i + 1) * batch_size] for i in range(n_batches)]


def batches(dataset, batch_size, epoch_seed):
    """Yield ``(inputs, labels)`` batches for one epoch."""
    for idx in batch_indices(len(dataset), batch_size, epoch_seed):
        yield dataset.inputs[idx], dataset.labels[idx]
