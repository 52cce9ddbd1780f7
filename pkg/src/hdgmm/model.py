"""HD-GMM parameterization and density computations.

Each component covariance has a spiked spectrum: ``d`` leading variances
``a_1 >= ... >= a_d`` along the orthonormal columns of ``W`` and a single
noise variance ``b`` on the orthogonal complement, i.e.

    Sigma = W diag(a - b) W^T + b I.

Nothing here ever forms an ``M x M`` matrix except :func:`covariance_dense`,
which exists as a reference for testing.
"""
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels

LOG_2PI = float(np.log(2.0 * np.pi))
ORTHO_TOL = 1e-10
WEIGHT_TOL = 1e-12
NOISE_FLOOR_REL = 1e-12


def noise_floor(a_max):
    """Smallest admissible noise variance given the leading signal variance."""
    return NOISE_FLOOR_REL * max(float(a_max), 1.0)


@dataclass(frozen=True, eq=False)
class Component:
    """One mixture component.

    Parameters
    ----------
    weight : float
        Mixing proportion in (0, 1].
    mean : ndarray, shape (M,)
    signal_variances : ndarray, shape (d,)
        Leading eigenvalues, sorted descending, all strictly above the noise.
    noise_variance : float
        Repeated trailing eigenvalue ``b``; clamped from below to
        ``1e-12 * max(a_1, 1)``.
    basis : ndarray, shape (M, d)
        Orthonormal columns spanning the component subspace.
    """

    weight: float
    mean: np.ndarray
    signal_variances: np.ndarray
    noise_variance: float
    basis: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64).reshape(-1)
        a = np.array(self.signal_variances, dtype=np.float64).reshape(-1)
        W = np.array(self.basis, dtype=np.float64)
        if W.ndim == 1:
            W = W[:, None]
        M, d = mean.shape[0], a.shape[0]
        if W.shape != (M, d):
            raise ValueError(f"basis has shape {W.shape}, expected {(M, d)}")
        if not 1 <= d <= M - 1:
            raise ValueError(f"need 1 <= d <= M-1, got d={d}, M={M}")
        if not (0.0 < self.weight <= 1.0):
            raise ValueError(f"weight {self.weight} outside (0, 1]")
        b = max(float(self.noise_variance), noise_floor(a[0]))
        if np.any(np.diff(a) > 0):
            raise ValueError("signal variances must be sorted in descending order")
        if not a[-1] > b:
            raise ValueError(f"smallest signal variance {a[-1]} must exceed noise {b}")
        err = np.linalg.norm(W.T @ W - np.eye(d))
        if err > ORTHO_TOL:
            raise ValueError(f"basis columns not orthonormal (|W^T W - I| = {err:.3g})")
        for arr in (mean, a, W):
            arr.setflags(write=False)
        object.__setattr__(self, "weight", float(self.weight))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "signal_variances", a)
        object.__setattr__(self, "noise_variance", b)
        object.__setattr__(self, "basis", W)

    @property
    def M(self):
        return self.mean.shape[0]

    @property
    def d(self):
        return self.signal_variances.shape[0]

    def replace(self, **changes):
        fields = dict(
            weight=self.weight,
            mean=self.mean,
            signal_variances=self.signal_variances,
            noise_variance=self.noise_variance,
            basis=self.basis,
        )
        fields.update(changes)
        return Component(**fields)


@dataclass(frozen=True, eq=False)
class HdGmmModel:
    """A K-component HD-GMM with common ambient dimension M and reduced dimension d."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a model needs at least one component")
        M, d = comps[0].M, comps[0].d
        for k, c in enumerate(comps):
            if (c.M, c.d) != (M, d):
                raise ValueError(f"component {k} has (M, d)={(c.M, c.d)}, expected {(M, d)}")
        total = sum(c.weight for c in comps)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1")
        object.__setattr__(self, "components", comps)

    @property
    def K(self):
        return len(self.components)

    @property
    def M(self):
        return self.components[0].M

    @property
    def d(self):
        return self.components[0].d

    @cached_property
    def weights(self):
        return np.array([c.weight for c in self.components])

    @cached_property
    def means(self):
        return np.stack([c.mean for c in self.components])

    @cached_property
    def signal_variances(self):
        return np.stack([c.signal_variances for c in self.components])

    @cached_property
    def noise_variances(self):
        return np.array([c.noise_variance for c in self.components])

    @cached_property
    def bases(self):
        return np.stack([c.basis for c in self.components])

    @cached_property
    def log_dets(self):
        return np.array([log_det_cov(c) for c in self.components])

    def permuted(self, order):
        return HdGmmModel(tuple(self.components[i] for i in order))


def _check_vector(comp, y):
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (comp.M,):
        raise ValueError(f"expected a vector of length {comp.M}, got shape {y.shape}")
    return y


def _check_matrix(M, data):
    X = np.asarray(data, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != M:
        raise ValueError(f"expected data with {M} columns, got shape {X.shape}")
    return X


def covariance_dense(comp):
    """Dense ``W diag(a-b) W^T + b I``. Reference use only."""
    W = comp.basis
    S = (W * (comp.signal_variances - comp.noise_variance)) @ W.T
    S = 0.5 * (S + S.T)
    S[np.diag_indices_from(S)] += comp.noise_variance
    return S


def mahalanobis_sq(comp, y):
    """(y-mu)^T Sigma^{-1} (y-mu) in O(Md) time without any M x M matrix."""
    diff = _check_vector(comp, y) - comp.mean
    z = comp.basis.T @ diff
    zz = z * z
    resid = max(float(diff @ diff) - float(zz.sum()), 0.0)
    return float(zz @ (1.0 / comp.signal_variances)) + resid / comp.noise_variance


def log_det_cov(comp):
    return float(np.sum(np.log(comp.signal_variances))) + (comp.M - comp.d) * float(
        np.log(comp.noise_variance)
    )


def log_component_density(comp, y):
    """log N(y; mu, Sigma) for one component (weight not included)."""
    return -0.5 * (comp.M * LOG_2PI + log_det_cov(comp) + mahalanobis_sq(comp, y))


def component_log_densities(model, data):
    """Matrix of log N(y_i; theta_k), shape (N, K)."""
    X = _check_matrix(model.M, data)
    out = np.empty((X.shape[0], model.K))
    for k, c in enumerate(model.components):
        diff = X - c.mean
        sqnorm = np.einsum("ij,ij->i", diff, diff)
        proj = diff @ c.basis
        quad = kernels.spiked_quadform(
            sqnorm, proj, 1.0 / c.signal_variances, 1.0 / c.noise_variance
        )
        out[:, k] = -0.5 * (model.M * LOG_2PI + model.log_dets[k] + quad)
    return out


def weighted_log_densities(model, data):
    return component_log_densities(model, data) + np.log(model.weights)


def responsibilities(model, y):
    """Posterior cluster probabilities r_k(y) for a single observation."""
    y = _check_vector(model.components[0], y)
    logp = np.array(
        [np.log(c.weight) + log_component_density(c, y) for c in model.components]
    )
    resp, _ = kernels.normalize_log_rows(logp[None, :])
    return resp[0]


def responsibilities_batch(model, data):
    """Responsibilities (N, K) and per-row log mixture density (N,)."""
    return kernels.normalize_log_rows(weighted_log_densities(model, data))


def log_likelihood(model, data):
    """Total log-likelihood; the row sum is exact (``math.fsum``) so it does not
    depend on summation order."""
    _, lse = responsibilities_batch(model, data)
    return math.fsum(lse)


def assign(model, data):
    """Most probable component per row; ties go to the lowest index."""
    return np.argmax(weighted_log_densities(model, data), axis=1)
