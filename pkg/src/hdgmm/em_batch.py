"""In-memory EM for HD-GMM, k-means++ initialization and BIC model selection."""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import linalg

from . import kernels
from .errors import DegenerateComponentError, InsufficientDataError
from .model import Component, HdGmmModel, _check_matrix, noise_floor, responsibilities_batch
from .stiefel import fix_signs

EMPTY_MASS_REL = 1e-8


@dataclass
class WeightedMoments:
    """Responsibility-weighted sums per component.

    ``mass[k] = sum_i r_ik``, ``first[k] = sum_i r_ik y_i`` and
    ``scatter[k] = sum_i r_ik y_i y_i^T``.
    """

    mass: np.ndarray
    first: np.ndarray
    scatter: np.ndarray

    @property
    def K(self):
        return self.mass.shape[0]


@dataclass
class FitTrace:
    log_likelihood: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    records: int = 0
    starved: int = 0
    eval_batches: list = field(default_factory=list)

    def is_monotone(self, slack=1e-9):
        ll = np.asarray(self.log_likelihood)
        return bool(np.all(np.diff(ll) >= -slack))


def e_step(model, data):
    """Responsibilities (N, K) and the log-likelihood of ``data``."""
    resp, lse = responsibilities_batch(model, data)
    return resp, math.fsum(lse)


def accumulate_moments(data, resp):
    X = np.asarray(data, dtype=np.float64)
    R = np.asarray(resp, dtype=np.float64)
    if X.ndim != 2 or R.ndim != 2 or R.shape[0] != X.shape[0]:
        raise ValueError(f"shape mismatch: data {X.shape}, responsibilities {R.shape}")
    K, M = R.shape[1], X.shape[1]
    scatter = np.empty((K, M, M))
    for k in range(K):
        Xk = X * R[:, k, None]
        S = Xk.T @ X
        scatter[k] = 0.5 * (S + S.T)
    return WeightedMoments(R.sum(axis=0), R.T @ X, scatter)


def spectral_update(S, d, floor_b=None):
    """Leading spectrum, basis and trailing noise of a covariance matrix.

    Returns ``(a, W, b)`` where ``a`` holds the ``d`` largest eigenvalues in
    descending order, ``W`` the matching eigenvectors (sign-normalized) and
    ``b`` the mean of the discarded eigenvalues, obtained from the trace.
    ``b`` is clamped to ``[floor_b, a_d - floor_b]``.
    """
    M = S.shape[0]
    evals, evecs = linalg.eigh(S, subset_by_index=[M - d, M - 1])
    a, b = clamp_spectrum(evals[::-1], float(np.trace(S)), M, floor_b)
    return a, fix_signs(evecs[:, ::-1]), b


def clamp_spectrum(a, trace, M, floor_b=None):
    """Noise variance from the trace identity, with ``floor <= b <= a_d - floor``."""
    a = np.asarray(a, dtype=np.float64)
    floor = noise_floor(a[0]) if floor_b is None else float(floor_b)
    a = np.maximum(a, 2.0 * floor)
    b = (trace - float(a.sum())) / (M - a.shape[0])
    b = min(max(b, floor), float(a[-1]) - floor)
    return a, b


def m_step(moments, N, d, floor_b=None):
    """Closed-form M-step for a common reduced dimension ``d``."""
    comps = []
    for k in range(moments.K):
        n = float(moments.mass[k])
        if not n >= EMPTY_MASS_REL * N:
            raise DegenerateComponentError(k, mass=n)
        mu = moments.first[k] / n
        S = moments.scatter[k] / n - np.outer(mu, mu)
        S = 0.5 * (S + S.T)
        a, W, b = spectral_update(S, d, floor_b)
        comps.append(Component(n / N, mu, a, b, W))
    return HdGmmModel(tuple(comps))


def _kmeanspp(X, K, rng):
    n = X.shape[0]
    centers = np.empty((K, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    diff = X - centers[0]
    d2 = np.einsum("ij,ij->i", diff, diff)
    for k in range(1, K):
        total = d2.sum()
        if total > 0:
            i = int(rng.choice(n, p=d2 / total))
        else:
            i = int(rng.integers(n))
        centers[k] = X[i]
        diff = X - centers[k]
        np.minimum(d2, np.einsum("ij,ij->i", diff, diff), out=d2)
    return centers


def _update_centers(X, labels, centers):
    out = centers.copy()
    for k in range(centers.shape[0]):
        members = labels == k
        if members.any():
            out[k] = X[members].mean(axis=0)
    return out


def _reseed_small(X, labels, centers, min_size):
    K = centers.shape[0]
    for _ in range(K):
        counts = np.bincount(labels, minlength=K)
        small = np.flatnonzero(counts < min_size)
        if small.size == 0:
            return labels
        k = int(small[0])
        big = int(np.argmax(counts))
        members = np.flatnonzero(labels == big)
        diff = X[members] - centers[big]
        far = members[np.argmax(np.einsum("ij,ij->i", diff, diff))]
        centers[k] = X[far]
        labels, _ = kernels.assign_nearest(X, centers)
        centers[:] = _update_centers(X, labels, centers)
    labels = labels.copy()
    counts = np.bincount(labels, minlength=K)
    for k in np.flatnonzero(counts < min_size):
        big = int(np.argmax(counts))
        members = np.flatnonzero(labels == big)
        diff = X[members] - centers[big]
        order = np.argsort(-np.einsum("ij,ij->i", diff, diff), kind="stable")
        take = members[order[: min_size - counts[k]]]
        labels[take] = k
        counts = np.bincount(labels, minlength=K)
    return labels


def _lloyd(X, K, rng, iters):
    centers = _kmeanspp(X, K, rng)
    labels, d2 = kernels.assign_nearest(X, centers)
    for _ in range(iters):
        centers = _update_centers(X, labels, centers)
        new_labels, d2 = kernels.assign_nearest(X, centers)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels, centers, math.fsum(d2)


def init_model(data, K, d, seed=0, max_subsample=50_000, lloyd_iters=10, floor_b=None, n_init=5):
    """Hard-clustering initialization: k-means++ seeding, Lloyd iterations, per-cluster PCA.

    ``n_init`` seeded restarts are run from one generator and the clustering
    with the smallest within-cluster sum of squares is kept (first on ties).
    Clusters left with fewer than ``d + 2`` members are re-seeded at the
    farthest point of the largest cluster.
    """
    X = _check_matrix(np.asarray(data).shape[-1], data)
    min_size = d + 2
    if X.shape[0] < K * min_size:
        raise InsufficientDataError(
            f"need at least K*(d+2) = {K * min_size} records, got {X.shape[0]}"
        )
    if n_init < 1:
        raise ValueError("n_init must be >= 1")
    rng = np.random.default_rng(seed)
    if X.shape[0] > max_subsample:
        idx = np.sort(rng.choice(X.shape[0], size=max_subsample, replace=False))
        X = X[idx]
    best = None
    for _ in range(n_init):
        run = _lloyd(X, K, rng, lloyd_iters)
        if best is None or run[2] < best[2]:
            best = run
    labels, centers, _ = best
    labels = _reseed_small(X, labels, centers, min_size)
    resp = np.zeros((X.shape[0], K))
    resp[np.arange(X.shape[0]), labels] = 1.0
    return m_step(accumulate_moments(X, resp), X.shape[0], d, floor_b)


def fit_batch(data, K, d, max_iter=200, rel_tol=1e-7, seed=0, init=None, floor_b=None):
    """Fit by EM until the relative log-likelihood gain drops below ``rel_tol``.

    Returns the fitted model and a :class:`FitTrace` whose i-th entry is the
    log-likelihood of the model produced after i M-steps.
    """
    X = _check_matrix(np.asarray(data).shape[-1], data)
    N = X.shape[0]
    if N <= K * (d + 2):
        raise InsufficientDataError(f"need more than K*(d+2) = {K * (d + 2)} records")
    model = init if init is not None else init_model(X, K, d, seed=seed, floor_b=floor_b)
    trace = FitTrace(records=N)
    prev = None
    for it in range(max_iter + 1):
        resp, ll = e_step(model, X)
        trace.log_likelihood.append(ll)
        if prev is not None and ll - prev <= rel_tol * abs(prev):
            trace.converged = True
            break
        if it == max_iter:
            break
        try:
            model = m_step(accumulate_moments(X, resp), N, d, floor_b)
        except DegenerateComponentError as exc:
            raise DegenerateComponentError(exc.component, exc.mass, it + 1) from None
        trace.iterations = it + 1
        prev = ll
    return model, trace


def param_count(K, M, d):
    """Free parameters: weights, means, basis orientations and spectra."""
    if not 1 <= d <= M - 1:
        raise ValueError(f"need 1 <= d <= M-1, got d={d}, M={M}")
    return (K - 1) + K * M + K * d * (2 * M - d - 1) // 2 + K * (d + 1)


def bic(model, data):
    X = _check_matrix(model.M, data)
    _, ll = e_step(model, X)
    return -2.0 * ll + param_count(model.K, model.M, model.d) * math.log(X.shape[0])


@dataclass
class BicScan:
    table: list
    best: tuple

    def as_rows(self):
        return [dict(row) for row in self.table]


def bic_scan(data, K_grid, d_grid, max_iter=200, rel_tol=1e-7, seed=0):
    """Fit every (K, d) pair with the same seed and pick the BIC minimizer.

    Cells whose fit fails are kept in the table with an ``error`` entry and are
    excluded from the argmin. Ties go to the first cell in grid order.
    """
    K_grid, d_grid = list(K_grid), list(d_grid)
    if not K_grid or not d_grid:
        raise ValueError("empty grid")
    X = _check_matrix(np.asarray(data).shape[-1], data)
    N, M = X.shape
    table, best, best_val = [], None, math.inf
    for K in K_grid:
        for d in d_grid:
            row = {"K": int(K), "d": int(d), "bic": None, "log_likelihood": None,
                   "params": None, "iterations": None, "error": None}
            try:
                model, trace = fit_batch(X, K, d, max_iter=max_iter, rel_tol=rel_tol, seed=seed)
                ll = trace.log_likelihood[-1]
                p = param_count(K, M, d)
                row.update(bic=-2.0 * ll + p * math.log(N), log_likelihood=ll,
                           params=p, iterations=trace.iterations)
            except (DegenerateComponentError, InsufficientDataError, ValueError,
                    np.linalg.LinAlgError) as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
            table.append(row)
            if row["bic"] is not None and row["bic"] < best_val:
                best_val, best = row["bic"], (int(K), int(d))
    return BicScan(table, best)
