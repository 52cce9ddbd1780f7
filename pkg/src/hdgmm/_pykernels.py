"""Pure numpy implementations of the hot kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and the same tie-breaking rules (lowest index wins).
"""
import numpy as np


def spiked_quadform(sqnorm, proj, inv_a, inv_b):
    """Quadratic form sum_j z_j^2/a_j + (|y-mu|^2 - |z|^2)/b, row-wise."""
    zz = proj * proj
    resid = sqnorm - zz.sum(axis=1)
    np.maximum(resid, 0.0, out=resid)
    return zz @ inv_a + resid * inv_b


def normalize_log_rows(logp):
    """Row-wise log-sum-exp; returns (exp(logp - lse), lse)."""
    logp = np.asarray(logp, dtype=np.float64)
    top = logp.max(axis=1)
    shifted = logp - top[:, None]
    np.exp(shifted, out=shifted)
    total = shifted.sum(axis=1)
    shifted /= total[:, None]
    return shifted, top + np.log(total)


def argmax_dot(X, q):
    scores = X @ q
    i = int(np.argmax(scores))
    return i, float(scores[i])


def nearest_row(C, q):
    diff = C - q
    d2 = np.einsum("ij,ij->i", diff, diff)
    i = int(np.argmin(d2))
    return i, float(d2[i])


def assign_nearest(X, C):
    """Index of the nearest row of C for every row of X, and the squared distance."""
    d2 = np.empty((X.shape[0], C.shape[0]))
    for k in range(C.shape[0]):
        diff = X - C[k]
        d2[:, k] = np.einsum("ij,ij->i", diff, diff)
    labels = np.argmin(d2, axis=1)
    return labels.astype(np.intp), d2[np.arange(X.shape[0]), labels]
