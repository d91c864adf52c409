"""Dataset ingestion (IDX image files) and synthetic correlated data.

The IDX format is the big-endian binary layout of the classic
handwritten-digit files: a 4-byte magic (2051 for images, 2049 for
labels), big-endian 4-byte dimension sizes, then a raw unsigned-byte
payload.  Files may be gzip-compressed; compression is detected from
the 0x1f 0x8b prefix rather than the file name.
"""

from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "load_mnist",
    "save_idx",
    "subsample",
    "label_proportions",
    "synthetic_gaussian",
    "desk_split",
    "default_data_dir",
    "bundled_mnist_paths",
]

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049


@dataclass(frozen=True)
class Dataset:
    """A batch of flattened inputs with integer class labels."""

    inputs: np.ndarray   # (M, D) float64
    labels: np.ndarray   # (M,) integers in 0..9
    name: str

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "labels", y)
        if x.ndim != 2:
            raise ValueError(f"inputs must be 2-D, got shape {x.shape}")
        if len(y) != x.shape[0]:
            raise ValueError(
                f"label count {len(y)} does not match input count {x.shape[0]}"
            )

    def __len__(self) -> int:
        return self.inputs.shape[0]


def _read_binary(path) -> bytes:
    with open(path, "rb") as f:
        head = f.read(2)
        rest = f.read()
    raw = head + rest
    if head == b"\x1f\x8b":
        return gzip.decompress(raw)
    return raw


def _parse_idx(buf: bytes, expected_magic: int, path) -> np.ndarray:
    if len(buf) < 8:
        raise ValueError(f"{path}: truncated IDX header ({len(buf)} bytes)")
    magic, n = struct.unpack(">ii", buf[:8])
    if magic != expected_magic:
        raise ValueError(
            f"{path}: bad IDX magic {magic}, expected {expected_magic}"
        )
    if expected_magic == LABEL_MAGIC:
        payload = buf[8:]
        if len(payload) != n:
            raise ValueError(
                f"{path}: expected {n} label bytes, found {len(payload)}"
            )
        return np.frombuffer(payload, dtype=np.uint8).copy()
    rows, cols = struct.unpack(">ii", buf[8:16])
    payload = buf[16:]
    if len(payload) != n * rows * cols:
        raise ValueError(
            f"{path}: expected {n * rows * cols} pixel bytes, found {len(payload)}"
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape(n, rows * cols).copy()


def load_mnist(images_path, labels_path, name: str = "mnist") -> Dataset:
    """Load an IDX image/label file pair into a Dataset.

    Pixels are scaled to [0, 1] by dividing by 255 and are not
    centered: the positive pixel values are what make distinct digit
    images positively correlated (input ⟨c⟩ ≈ 0.4), the starting point
    of every correlation-propagation experiment here.
    """
    images = _parse_idx(_read_binary(images_path), IMAGE_MAGIC, images_path)
    labels = _parse_idx(_read_binary(labels_path), LABEL_MAGIC, labels_path)
    if images.shape[0] != labels.shape[0]:
        raise ValueError(
            f"image/label count mismatch: {images.shape[0]} images, "
            f"{labels.shape[0]} labels"
        )
    return Dataset(inputs=images.astype(np.float64) / 255.0, labels=labels, name=name)


def save_idx(ds: Dataset, images_path, labels_path) -> None:
    """Write a Dataset back out as an IDX file pair (gzip if '.gz').

    Pixel bytes are recovered as round(255·x), so datasets that came
    from an IDX file round-trip bit-exactly.  784-wide inputs are
    stored with 28×28 image dimensions, anything else as 1×D.
    """
    m, d = ds.inputs.shape
    rows, cols = (28, 28) if d == 784 else (1, d)
    pixels = np.clip(np.round(ds.inputs * 255.0), 0, 255).astype(np.uint8)
    img_buf = struct.pack(">iiii", IMAGE_MAGIC, m, rows, cols) + pixels.tobytes()
    lab_buf = struct.pack(">ii", LABEL_MAGIC, m) + ds.labels.astype(np.uint8).tobytes()
    for path, buf in ((images_path, img_buf), (labels_path, lab_buf)):
        data = gzip.compress(buf, mtime=0) if str(path).endswith(".gz") else buf
        with open(path, "wb") as f:
            f.write(data)


def subsample(ds: Dataset, n: int, seed: int) -> Dataset:
    """Uniform random subset of n examples, deterministic per seed."""
    m = len(ds)
    if not 1 <= n <= m:
        raise ValueError(f"subsample size {n} out of range 1..{m}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(m, size=n, replace=False))
    return Dataset(
        inputs=ds.inputs[idx], labels=ds.labels[idx], name=f"{ds.name}[{n}]"
    )


def label_proportions(ds: Dataset) -> dict[int, float]:
    """Fraction of each label value present, as a balance diagnostic."""
    values, counts = np.unique(ds.labels, return_counts=True)
    return {int(v): float(c) / len(ds) for v, c in zip(values, counts)}


def synthetic_gaussian(m: int, d: int, rho: float, seed: int) -> Dataset:
    """Gaussian rows with known pairwise population correlation rho.

    Uses the equicorrelated construction: per dimension, the M row
    values are an affine mix of a shared and a private standard normal,
    giving E[x_a·x_b]/D = rho for every pair a ≠ b and unit variances.
    Labels are assigned round-robin.  Unlike image data the values are
    unbounded; this generator exists to provide ground truth for
    correlation estimators, not to mimic pixels.
    """
    if not abs(rho) < 1:
        raise ValueError(f"|rho| must be < 1, got {rho}")
    if rho < 0 and m > 1 and rho <= -1.0 / (m - 1):
        raise ValueError(
            f"rho={rho} is infeasible for {m} equicorrelated rows "
            f"(needs rho > {-1.0 / (m - 1):.4f})"
        )
    rng = np.random.default_rng(seed)
    if rho >= 0:
        shared = rng.standard_normal((1, d))
        private = rng.standard_normal((m, d))
        x = np.sqrt(rho) * shared + np.sqrt(1.0 - rho) * private
    else:
        cov = np.full((m, m), rho) + (1.0 - rho) * np.eye(m)
        chol = np.linalg.cholesky(cov)
        x = chol @ rng.standard_normal((m, d))
    labels = np.arange(m, dtype=np.int64) % 10
    return Dataset(inputs=x, labels=labels, name=f"gaussian(rho={rho})")


def desk_split(ds: Dataset, train: int = 10_000, val: int = 2_000):
    """Leading examples split into train/validation, in stored order.

    The desk-scale default (first 12000 examples, 10000/2000) keeps a
    full training experiment within laptop minutes while preserving the
    natural example order that the input-correlation reference values
    were measured on.
    """
    if len(ds) < train + val:
        raise ValueError(
            f"dataset has {len(ds)} examples, need {train + val} for the split"
        )
    tr = Dataset(ds.inputs[:train], ds.labels[:train], f"{ds.name}-train")
    va = Dataset(
        ds.inputs[train:train + val], ds.labels[train:train + val],
        f"{ds.name}-val",
    )
    return tr, va


def default_data_dir() -> Path:
    """Directory holding bundled datasets.

    Resolution order: the EDGEOFCHAOS_DATA environment variable, else
    the repository's ``data/`` directory located relative to this file
    (which works for editable installs and source checkouts).
    """
    env = os.environ.get("EDGEOFCHAOS_DATA")
    if env:
        return Path(env)
    here = Path(__file__).resolve()
    for parent in here.parents:
        candidate = parent / "data"
        if (candidate / "mnist").is_dir():
            return candidate
    raise FileNotFoundError(
        "could not locate the bundled data directory; set EDGEOFCHAOS_DATA"
    )


def bundled_mnist_paths() -> tuple[Path, Path]:
    """Paths of the bundled 12000-example digit subset (gzipped IDX)."""
    d = default_data_dir() / "mnist"
    return (
        d / "train-images-12k-idx3-ubyte.gz",
        d / "train-labels-12k-idx1-ubyte.gz",
    )
