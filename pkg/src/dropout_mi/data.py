"""IDX (MNIST) reading and writing."""
from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    def __init__(self, path, offset: int, message: str):
        super().__init__(f"{path}: at byte {offset}: {message}")
        self.path = str(path)
        self.offset = offset


@dataclass
class IdxDataset:
    images: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return self.labels.shape[0]

    def split(self, n_first: int) -> tuple["IdxDataset", "IdxDataset"]:
        return (IdxDataset(self.images[:n_first], self.labels[:n_first]),
                IdxDataset(self.images[n_first:], self.labels[n_first:]))


def _read_bytes(path) -> bytes:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _parse(path, raw: bytes, magic: int, ndim: int, limit: int | None) -> np.ndarray:
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise IdxFormatError(path, len(raw), f"file too short for a {ndim}-d IDX header")
    (found,) = struct.unpack(">I", raw[:4])
    if found != magic:
        raise IdxFormatError(path, 0, f"bad magic 0x{found:08x}, expected 0x{magic:08x}")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    count = dims[0]
    item = int(np.prod(dims[1:], dtype=np.int64)) if ndim > 1 else 1
    expected = header + count * item
    if len(raw) < expected:
        raise IdxFormatError(path, len(raw), f"truncated: header declares {count} items "
                                             f"({expected} bytes), file has {len(raw)}")
    take = count if limit is None else min(count, limit)
    data = np.frombuffer(raw, dtype=np.uint8, count=take * item, offset=header)
    return data.reshape((take,) + tuple(dims[1:]))


def load_idx(images_path, labels_path, limit: int | None = None) -> IdxDataset:
    """Read an IDX image/label pair; pixels are scaled to [0, 1] and flattened.

    Gzipped files are accepted transparently.
    """
    if limit is not None and limit < 0:
        raise ValueError("limit must be non-negative")
    img_raw, lab_raw = _read_bytes(images_path), _read_bytes(labels_path)
    images = _parse(images_path, img_raw, IMAGES_MAGIC, 3, limit)
    labels = _parse(labels_path, lab_raw, LABELS_MAGIC, 1, limit)
    n_img = struct.unpack(">I", img_raw[4:8])[0]
    n_lab = struct.unpack(">I", lab_raw[4:8])[0]
    if n_img != n_lab:
        raise IdxFormatError(labels_path, 4, f"label count {n_lab} does not match image count {n_img}")
    flat = images.reshape(images.shape[0], int(np.prod(images.shape[1:]))).astype(np.float64) / 255.0
    return IdxDataset(flat, labels.astype(np.int64))


def write_idx(images: np.ndarray, labels: np.ndarray, images_path, labels_path, compress: bool = False) -> None:
    """Write uint8 images (count x rows x cols) and labels in IDX layout."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    if images.ndim != 3 or labels.ndim != 1 or images.shape[0] != labels.shape[0]:
        raise ValueError("images must be (count, rows, cols) and labels (count,)")
    img = struct.pack(">IIII", IMAGES_MAGIC, *images.shape) + images.tobytes()
    lab = struct.pack(">II", LABELS_MAGIC, labels.shape[0]) + labels.tobytes()
    for path, blob in ((images_path, img), (labels_path, lab)):
        Path(path).write_bytes(gzip.compress(blob, mtime=0) if compress else blob)


def find_idx_pair(directory, split: str = "train") -> tuple[Path, Path]:
    """Locate ``<split>-images-idx3-ubyte[.gz]`` and the matching labels file."""
    d = Path(directory)
    prefix = "train" if split == "train" else "t10k"
    for suffix in ("", ".gz"):
        img = d / f"{prefix}-images-idx3-ubyte{suffix}"
        lab = d / f"{prefix}-labels-idx1-ubyte{suffix}"
        if img.exists() and lab.exists():
            return img, lab
    raise FileNotFoundError(f"no {prefix} IDX pair in {d}")
