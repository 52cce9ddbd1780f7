"""Cluster-wise dimension reduction.

A record ``y`` is stored as the index of its most probable component and its
``d`` coordinates ``W_k^T (y - mu_k)`` in that component's basis. Coordinates
are only meaningful together with their cluster id.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import _check_matrix, _check_vector, weighted_log_densities

RAW_SAMPLE_BYTES = 8
CLUSTER_ID_BYTES = 2
# headline compression figure the size report is checked against
CLAIMED_RATIO = 0.97


class CompressedRecord(NamedTuple):
    cluster_id: int
    coords: np.ndarray


@dataclass(frozen=True, eq=False)
class CompressedDataset:
    """Compressed records held column-wise.

    ``cluster_ids`` has shape (N,) and ``coords`` shape (N, d); record ``i`` is
    ``(cluster_ids[i], coords[i])``.
    """

    model: object
    cluster_ids: np.ndarray
    coords: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.cluster_ids, dtype=np.int64).reshape(-1)
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape != (ids.shape[0], self.model.d):
            raise ValueError(f"coords shape {coords.shape} does not match {ids.shape[0]} records of d={self.model.d}")
        if ids.size and (ids.min() < 0 or ids.max() >= self.model.K):
            raise ValueError("cluster id out of range")
        object.__setattr__(self, "cluster_ids", ids)
        object.__setattr__(self, "coords", coords)

    @property
    def count(self):
        return self.cluster_ids.shape[0]

    def __len__(self):
        return self.count

    def __getitem__(self, i):
        return CompressedRecord(int(self.cluster_ids[i]), self.coords[i])

    @property
    def records(self):
        return [self[i] for i in range(self.count)]

    @classmethod
    def from_records(cls, model, records):
        records = list(records)
        ids = np.array([r.cluster_id for r in records], dtype=np.int64)
        coords = np.array([r.coords for r in records], dtype=np.float64).reshape(len(records), model.d)
        return cls(model, ids, coords)


def project(comp, y):
    y = _check_vector(comp, y)
    return comp.basis.T @ (y - comp.mean)


def reconstruct(comp, coords):
    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape != (comp.d,):
        raise ValueError(f"expected {comp.d} coordinates, got shape {coords.shape}")
    return comp.basis @ coords + comp.mean


def reduce_record(model, y):
    y = _check_vector(model.components[0], y)
    k = int(np.argmax(weighted_log_densities(model, y[None, :])[0]))
    return CompressedRecord(k, project(model.components[k], y))


def reconstruct_record(model, rec):
    k = int(rec.cluster_id)
    if not 0 <= k < model.K:
        raise IndexError(f"cluster id {k} out of range for K={model.K}")
    return reconstruct(model.components[k], rec.coords)


def reduce_dataset(model, data, chunk_size=65_536):
    """Vectorized :func:`reduce_record` over the rows of ``data``."""
    X = _check_matrix(model.M, data)
    ids = np.empty(X.shape[0], dtype=np.int64)
    coords = np.empty((X.shape[0], model.d))
    for start in range(0, X.shape[0], chunk_size):
        block = X[start:start + chunk_size]
        lab = np.argmax(weighted_log_densities(model, block), axis=1)
        ids[start:start + block.shape[0]] = lab
        for k in np.unique(lab):
            sel = lab == k
            c = model.components[k]
            coords[start + np.flatnonzero(sel)] = (block[sel] - c.mean) @ c.basis
    return CompressedDataset(model, ids, coords)


def reconstruct_dataset(compressed):
    model = compressed.model
    out = np.empty((compressed.count, model.M))
    for k in range(model.K):
        sel = compressed.cluster_ids == k
        if sel.any():
            c = model.components[k]
            out[sel] = compressed.coords[sel] @ c.basis.T + c.mean
    return out


def reconstruction_mae(data, compressed):
    """Mean absolute error between ``data`` and the reconstructed records."""
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != compressed.count:
        raise ValueError(f"data has {X.shape[0] if X.ndim else 0} rows, compressed has {compressed.count}")
    return float(np.mean(np.abs(X - reconstruct_dataset(compressed))))


def compressed_size_bytes(count, d, coord_bytes=8, include_ids=False):
    """Storage for ``count`` records of ``d`` coordinates (+ 2-byte ids)."""
    if coord_bytes not in (4, 8):
        raise ValueError("coord_bytes must be 4 or 8")
    count, d = int(count), int(d)
    if count <= 0 or d <= 0:
        raise ValueError("count and d must be positive")
    return count * d * coord_bytes + (count * CLUSTER_ID_BYTES if include_ids else 0)


def compression_report(count, M, d, coord_bytes=8, original_bytes=None, include_ids=False):
    """Compressed size and ratios against the raw-float and a stated original size.

    ``ratio_raw`` uses ``count * M * 8`` bytes as the original and
    ``ratio_stated`` uses ``original_bytes`` when given. ``discrepancy`` is set
    when the raw-float ratio falls short of the 97% headline figure, and
    ``size_mismatch`` when the stated original differs from the raw-float size
    by more than 1%.
    """
    size = compressed_size_bytes(count, d, coord_bytes, include_ids)
    raw = int(count) * int(M) * RAW_SAMPLE_BYTES
    report = {
        "count": int(count),
        "M": int(M),
        "d": int(d),
        "coord_bytes": coord_bytes,
        "include_ids": include_ids,
        "compressed_bytes": size,
        "compressed_gb": size / 1e9,
        "raw_bytes": raw,
        "ratio_raw": 1.0 - size / raw,
        "original_bytes": None,
        "ratio_stated": None,
        "discrepancy": bool(1.0 - size / raw < CLAIMED_RATIO),
        "size_mismatch": False,
    }
    if original_bytes is not None:
        ratio = 1.0 - size / float(original_bytes)
        report["original_bytes"] = float(original_bytes)
        report["ratio_stated"] = ratio
        report["size_mismatch"] = bool(abs(float(original_bytes) - raw) > 0.01 * raw)
    return report
