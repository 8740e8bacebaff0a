"""
On-disk formats.

Model file (binary, little-endian)::

    7 bytes   magic b"CLFEFA1"
    8 bytes   D as uint64
    8 bytes   d as uint64
    8*D*d     P in row-major order as float64
    rest      UTF-8 ``key=value`` lines holding the hyper-parameters

JSON reports carry a ``schema`` field; CSV files always start with a header.
"""
import csv
import json
import logging
import struct
from pathlib import Path

import numpy as np

from .domain import HyperParams, Projection
from .exceptions import BadMagic, ConfigError, TruncatedPayload

logger = logging.getLogger(__name__)

MODEL_MAGIC = b'CLFEFA1'
_SHAPE = struct.Struct('<QQ')


def save_model(path, projection, params):
    P = np.asarray(projection, dtype='<f8')
    D, d = P.shape
    blob = MODEL_MAGIC + _SHAPE.pack(D, d) + np.ascontiguousarray(P).tobytes(order='C') + params.to_text().encode()
    Path(path).write_bytes(blob)
    logger.info("model written to %s (D=%d, d=%d)", path, D, d)


def load_model(path):
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read model {path}: {exc}") from exc
    if not blob.startswith(MODEL_MAGIC):
        raise BadMagic(f"{path} is not a model file")
    offset = len(MODEL_MAGIC)
    if len(blob) < offset + _SHAPE.size:
        raise TruncatedPayload(f"{path}: header is truncated")
    D, d = _SHAPE.unpack_from(blob, offset)
    offset += _SHAPE.size
    end = offset + 8 * D * d
    if len(blob) < end:
        raise TruncatedPayload(f"{path}: projection payload is truncated")
    P = np.frombuffer(blob[offset:end], dtype='<f8').reshape(D, d)
    return Projection(P.astype(float)), HyperParams.from_text(blob[end:].decode())


def write_json(path, payload):
    with open(path, 'w') as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write('\n')


def write_rows(path, fieldnames, rows):
    with open(path, 'w', newline='') as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames, lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({key: repr(value) if isinstance(value, float) else value for key, value in row.items()})


def write_loss_trace(path, report):
    write_rows(
        path,
        ['iteration', 'loss', 'inner_steps'],
        ({'iteration': i + 1, 'loss': float(loss), 'inner_steps': steps}
         for i, (loss, steps) in enumerate(zip(report.loss_trace, report.inner_steps))),
    )


def write_eval_report(directory, report):
    directory = Path(directory)
    write_json(directory / 'eval_report.json', report.as_dict())
    write_rows(directory / 'eval_repeats.csv', ['repeat', 'accuracy', 'recall', 'components', 'converged'], report.rows())


def write_grid(path, cells):
    rows = [cell.row() for cell in cells]
    write_rows(path, list(rows[0]), rows)
