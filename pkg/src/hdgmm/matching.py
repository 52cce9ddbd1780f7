"""Dictionary matching: exhaustive, SVD-compressed and cluster-routed.

All three searches work on unit-normalized real signals. Full and SVD
matching maximize the signed inner product; HD-GMM matching routes the query
to its most responsible clusters and searches their reduced coordinates.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple
import weakref

import numpy as np

from . import kernels
from .model import responsibilities


@dataclass(eq=False)
class Dictionary:
    """Simulated signals (N, M) with their parameter labels (N, P)."""

    signals: np.ndarray
    labels: np.ndarray
    label_names: tuple = ()

    def __post_init__(self):
        self.signals = np.ascontiguousarray(self.signals, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.float64)
        if labels.ndim == 1:
            labels = labels[:, None]
        self.labels = np.ascontiguousarray(labels)
        if self.signals.ndim != 2:
            raise ValueError("signals must be a 2-d array")
        if self.labels.shape[0] != self.signals.shape[0]:
            raise ValueError(
                f"{self.signals.shape[0]} signals but {self.labels.shape[0]} label rows"
            )
        if not (np.all(np.isfinite(self.signals)) and np.all(np.isfinite(self.labels))):
            raise ValueError("dictionary contains non-finite values")
        names = tuple(self.label_names) or tuple(f"p{j}" for j in range(self.labels.shape[1]))
        if len(names) != self.labels.shape[1]:
            raise ValueError(f"{len(names)} label names for {self.labels.shape[1]} label columns")
        self.label_names = names

    @property
    def N(self):
        return self.signals.shape[0]

    @property
    def M(self):
        return self.signals.shape[1]

    @property
    def P(self):
        return self.labels.shape[1]

    @cached_property
    def unit_signals(self):
        return normalize_signals(self.signals)


class MatchResult(NamedTuple):
    index: int
    score: float
    params: np.ndarray


@dataclass(frozen=True, eq=False)
class SvdCompressed:
    basis: np.ndarray
    coords: np.ndarray
    column_mean: np.ndarray
    singular_values: np.ndarray

    @property
    def d(self):
        return self.basis.shape[1]


def normalize_signals(signals):
    """Scale every row to unit Euclidean norm."""
    X = np.asarray(signals, dtype=np.float64)
    single = X.ndim == 1
    X2 = X[None, :] if single else X
    norms = np.linalg.norm(X2, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"row {int(zero[0])} has zero norm")
    out = X2 / norms[:, None]
    return out[0] if single else out


def full_match(dictionary, query):
    """Best inner-product match against every normalized dictionary signal."""
    if dictionary.N == 0:
        raise ValueError("empty dictionary")
    q = normalize_signals(np.asarray(query, dtype=np.float64))
    i, score = kernels.argmax_dot(dictionary.unit_signals, q)
    return MatchResult(i, score, dictionary.labels[i])


def svd_compress(dictionary, d, center=False):
    """Rank-``d`` truncated SVD of the normalized signal matrix."""
    X = dictionary.unit_signals
    if not 1 <= d <= min(X.shape):
        raise ValueError(f"d={d} must lie in [1, min(N, M)={min(X.shape)}]")
    mean = X.mean(axis=0) if center else np.zeros(X.shape[1])
    _, s, Vt = np.linalg.svd(X - mean if center else X, full_matrices=False)
    basis = np.ascontiguousarray(Vt[:d].T)
    coords = np.ascontiguousarray((X - mean) @ basis)
    return SvdCompressed(basis, coords, mean, s)


def svd_reconstruct(sc, i):
    return sc.basis @ sc.coords[i] + sc.column_mean


def svd_reconstruct_all(sc):
    return sc.coords @ sc.basis.T + sc.column_mean


def svd_match(sc, labels, query):
    q = normalize_signals(np.asarray(query, dtype=np.float64))
    c = sc.basis.T @ (q - sc.column_mean)
    i, score = kernels.argmax_dot(sc.coords, c)
    return MatchResult(i, score, np.asarray(labels)[i])


class ClusterIndex:
    """Records of a compressed dataset grouped by cluster, in dictionary order."""

    def __init__(self, compressed):
        ids = compressed.cluster_ids
        order = np.argsort(ids, kind="stable")
        bounds = np.searchsorted(ids[order], np.arange(compressed.model.K + 1))
        self.members = []
        self.coords = []
        for k in range(compressed.model.K):
            sel = order[bounds[k]:bounds[k + 1]]
            self.members.append(sel)
            self.coords.append(np.ascontiguousarray(compressed.coords[sel]))


_index_cache = weakref.WeakKeyDictionary()


def cluster_index(compressed):
    idx = _index_cache.get(compressed)
    if idx is None:
        idx = _index_cache[compressed] = ClusterIndex(compressed)
    return idx


def hdgmm_match(compressed, labels, model, query, top_n=1, metric="coords"):
    """Nearest compressed record among the ``top_n`` most responsible clusters.

    The query is normalized, reduced in each scanned cluster's basis and
    compared to that cluster's records by Euclidean distance between reduced
    coordinates (``metric="coords"``). With ``metric="full"`` the query's
    distance to each cluster subspace is added, which makes the distance the
    one between the query and the reconstructed record; within a cluster both
    metrics rank identically. Ties go to the lowest dictionary index.
    """
    model = compressed.model if model is None else model
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    if metric not in ("coords", "full"):
        raise ValueError(f"unknown metric {metric!r}")
    q = normalize_signals(np.asarray(query, dtype=np.float64))
    r = responsibilities(model, q)
    clusters = np.argsort(-r, kind="stable")[:top_n]
    index = cluster_index(compressed)
    best = None
    for k in clusters:
        members = index.members[k]
        if members.size == 0:
            continue
        c = model.components[k]
        diff = q - c.mean
        qc = c.basis.T @ diff
        j, d2 = kernels.nearest_row(index.coords[k], qc)
        if metric == "full":
            d2 += max(float(diff @ diff) - float(qc @ qc), 0.0)
        cand = (d2, int(members[j]))
        if best is None or cand < best:
            best = cand
    if best is None:
        raise ValueError("all scanned clusters are empty")
    d2, i = best
    return MatchResult(i, float(np.sqrt(d2)), np.asarray(labels)[i])


def match_many(match_fn, queries, threads=1):
    """Apply ``match_fn`` to every query row; results keep query order."""
    queries = np.asarray(queries, dtype=np.float64)
    if threads is None or threads <= 1:
        return [match_fn(q) for q in queries]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(match_fn, queries))


def param_mae(estimated, reference):
    """Per-parameter mean absolute difference."""
    est = np.asarray(estimated, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if est.shape != ref.shape:
        raise ValueError(f"shape mismatch {est.shape} vs {ref.shape}")
    if est.ndim == 1:
        est, ref = est[:, None], ref[:, None]
    return np.mean(np.abs(est - ref), axis=0)
