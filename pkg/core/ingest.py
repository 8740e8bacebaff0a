"""
Dataset loaders: MNIST IDX files, headered numeric CSV and synthetic blobs.
"""
import csv
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .domain import UNLABELED, Dataset, make_rng
from .exceptions import (
    BadMagic,
    ConfigError,
    CountMismatch,
    InvalidDataset,
    MissingColumn,
    NonNumericCell,
    RaggedRows,
    SubsampleTooLarge,
    TruncatedPayload,
)

logger = logging.getLogger(__name__)

IDX_IMAGES = 0x00000803
IDX_LABELS = 0x00000801


@dataclass(frozen=True)
class IdxHeader:
    magic: int
    dims: tuple

    @property
    def size(self):
        return int(np.prod(self.dims, dtype=np.int64))

    def to_bytes(self):
        return struct.pack(f">I{len(self.dims)}I", self.magic, *self.dims)


def parse_idx(data, expected_magic=None):
    if len(data) < 4:
        raise TruncatedPayload("file shorter than the IDX magic number")
    (magic,) = struct.unpack('>I', data[:4])
    if magic not in (IDX_IMAGES, IDX_LABELS) or (expected_magic is not None and magic != expected_magic):
        raise BadMagic(f"unexpected IDX magic 0x{magic:08x}")
    ndim = magic & 0xFF
    end = 4 + 4 * ndim
    if len(data) < end:
        raise TruncatedPayload("IDX header is truncated")
    header = IdxHeader(magic=magic, dims=struct.unpack(f'>{ndim}I', data[4:end]))
    payload = data[end:]
    if len(payload) != header.size:
        raise TruncatedPayload(f"IDX payload holds {len(payload)} bytes, header announces {header.size}")
    return header, np.frombuffer(payload, dtype=np.uint8).reshape(header.dims)


def write_idx(path, array):
    array = np.asarray(array, dtype=np.uint8)
    magic = IDX_IMAGES if array.ndim == 3 else IDX_LABELS
    header = IdxHeader(magic=magic, dims=tuple(int(n) for n in array.shape))
    Path(path).write_bytes(header.to_bytes() + array.tobytes())


def _read_bytes(path):
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def load_idx(images_path, labels_path):
    _, images = parse_idx(_read_bytes(images_path), IDX_IMAGES)
    _, labels = parse_idx(_read_bytes(labels_path), IDX_LABELS)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatch(f"{images.shape[0]} images but {labels.shape[0]} labels")
    n, rows, cols = images.shape
    logger.info("loaded %d IDX images of %dx%d from %s", n, rows, cols, images_path)
    return Dataset(
        X=images.reshape(n, rows * cols).T / 255.0,
        labels=labels.astype(np.int64) + 1,
        n_classes=10,
        name=Path(images_path).name,
        image_shape=(rows, cols),
    )


def _stratified_quota(counts, n_keep):
    quota = np.zeros_like(counts)
    remaining = n_keep
    open_classes = np.ones(counts.size, dtype=bool)
    while remaining > 0:
        active = np.flatnonzero(open_classes)
        share, extra = divmod(remaining, active.size)
        for rank, i in enumerate(active):
            quota[i] += share + (rank < extra)
        overflow = np.maximum(quota - counts, 0)
        quota -= overflow
        open_classes &= quota < counts
        remaining = int(overflow.sum())
    return quota


def subsample_and_rescale(ds, n_keep, side, seed):
    if n_keep > ds.n:
        raise SubsampleTooLarge(f"cannot keep {n_keep} of {ds.n} samples")
    classes, counts = np.unique(ds.labels, return_counts=True)
    rng = make_rng(seed)
    keep = []
    for c, quota in zip(classes, _stratified_quota(counts, n_keep)):
        members = np.flatnonzero(ds.labels == c)
        keep.extend(rng.choice(members, size=int(quota), replace=False))
    keep = np.sort(np.asarray(keep, dtype=np.int64))
    subset = ds.subset(keep)

    height, width = ds.image_shape or (int(round(np.sqrt(ds.D))),) * 2
    if height * width != ds.D:
        raise ConfigError(f"cannot view {ds.D} features as {height}x{width} images")
    if (side, side) == (height, width):
        return subset

    images = subset.X.T.reshape(-1, height, width)
    factors = (side / height, side / width)
    resized = np.stack([
        ndimage.zoom(image, factors, order=1, mode='nearest', grid_mode=True)
        for image in images
    ])
    logger.info("rescaled %d images from %dx%d to %dx%d", len(images), height, width, side, side)
    return subset.with_matrix(resized.reshape(len(images), side * side).T, image_shape=(side, side))


def read_table(path):
    """Header and raw rows; ragged rows raise."""
    try:
        handle = open(path, newline='')
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise RaggedRows(f"{path} has no header row")
        rows = []
        for line, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise RaggedRows(f"{path}:{line} has {len(record)} cells, header has {len(header)}")
            rows.append(record)
    return header, rows


def _number(cell, path, line, column):
    try:
        return float(cell)
    except ValueError:
        raise NonNumericCell(f"{path}:{line} column {column!r} holds {cell!r}") from None


def _label(cell, path, line, column):
    # an empty cell is the only unlabeled marker
    value = _number(cell, path, line, column)
    if not value.is_integer() or value < 1:
        raise InvalidDataset(f"{path}:{line} column {column!r} holds {cell!r}; labels are integers from 1")
    return int(value)


def read_matrix(path, label_column=None):
    """Feature names, an (rows x features) matrix and labels (None without a label column)."""
    header, rows = read_table(path)
    label_index = None
    if label_column:
        if label_column not in header:
            raise MissingColumn(f"{path} has no column named {label_column!r}")
        label_index = header.index(label_column)
    features = [i for i in range(len(header)) if i != label_index]

    values = np.array(
        [[_number(row[i], path, line, header[i]) for i in features] for line, row in enumerate(rows, start=2)],
        dtype=float,
    ).reshape(len(rows), len(features))
    labels = None
    if label_index is not None:
        labels = np.full(len(rows), UNLABELED, dtype=np.int64)
        for line, row in enumerate(rows, start=2):
            cell = row[label_index].strip()
            if cell:
                labels[line - 2] = _label(cell, path, line, label_column)
    return [header[i] for i in features], values, labels


def load_csv(path, label_column=None):
    _, values, labels = read_matrix(path, label_column)
    if labels is None:
        labels = np.full(values.shape[0], UNLABELED, dtype=np.int64)
    n_classes = int(max(labels.max(initial=0), 1))
    return Dataset(X=values.T, labels=labels, n_classes=n_classes, name=Path(path).name)


def write_csv(path, matrix, header, labels=None, label_column='label'):
    """Rows of ``matrix`` become CSV rows; floats are written round-trip exact."""
    matrix = np.asarray(matrix, dtype=float)
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(list(header) + ([label_column] if labels is not None else []))
        for i, row in enumerate(matrix):
            cells = [repr(float(v)) for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])) if labels[i] != UNLABELED else '')
            writer.writerow(cells)


def make_blobs(n_per_class, classes, D, separation, noise_std, seed):
    if min(n_per_class, classes, D) < 1 or separation < 0 or noise_std < 0:
        raise ConfigError("blob sizes must be positive")
    if classes > D:
        raise ConfigError(f"{classes} axis-aligned blob centres need D >= {classes}")
    rng = make_rng(seed)
    blocks = []
    for c in range(classes):
        centre = np.zeros((D, 1))
        centre[c] = separation
        blocks.append(centre + noise_std * rng.standard_normal((D, n_per_class)))
    labels = np.repeat(np.arange(1, classes + 1), n_per_class)
    return Dataset(X=np.hstack(blocks), labels=labels, n_classes=classes, name=f"blobs{classes}x{n_per_class}")
