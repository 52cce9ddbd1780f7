"""Dense reference computations used as independent oracles in the tests.

Nothing here imports the package's numerical code; everything is built from
the dense covariance and generic numpy/scipy routines.
"""
import numpy as np
from scipy import special, stats


def dense_cov(W, a, b):
    M = W.shape[0]
    # full orthonormal completion, then V diag(lambda) V^T
    Q, _ = np.linalg.qr(np.hstack([W, np.eye(M)]))
    Q[:, : W.shape[1]] = W
    lam = np.full(M, float(b))
    lam[: W.shape[1]] = a
    return (Q * lam) @ Q.T


def dense_logpdf(y, mean, W, a, b):
    return float(stats.multivariate_normal(mean, dense_cov(W, a, b)).logpdf(y))


def dense_mahalanobis(y, mean, W, a, b):
    S = dense_cov(W, a, b)
    diff = y - mean
    return float(diff @ np.linalg.solve(S, diff))


def dense_logdet(W, a, b):
    sign, val = np.linalg.slogdet(dense_cov(W, a, b))
    assert sign > 0
    return float(val)


def dense_responsibilities(logp):
    return np.exp(logp - special.logsumexp(logp, axis=1, keepdims=True))


def top_eigenspace(S, d):
    evals, evecs = np.linalg.eigh(S)
    return evals[::-1][:d], evecs[:, ::-1][:, :d]


def subspace_angle_max(X, Y):
    Qx, _ = np.linalg.qr(X)
    Qy, _ = np.linalg.qr(Y)
    s = np.linalg.svd(Qx.T @ Qy, compute_uv=False)
    return float(np.arccos(np.clip(s.min(), -1.0, 1.0)))
