"""Basis update on the Stiefel manifold.

Minimizes the basis-dependent part of the expected complete-data negative
log-likelihood of one component,

    f(X) = sum_j (1/a_j - 1/b) x_j^T S x_j,     X^T X = I,

with a curvilinear search along the Cayley transform. The retraction only
solves a ``2d x 2d`` linear system, so each iteration is O(M^2 d) for the
``S X`` product and O(M d^2) otherwise.

Stationary points of ``f`` that are not minimizers are saddles where every
column is an eigenvector of ``S`` (e.g. a warm start sitting on a trailing
eigenvector). A gradient method cannot leave those, so when the projected
gradient vanishes the solver tries a deterministic escape: column reordering,
then swapping the weakest column for the dominant direction of ``S`` in the
orthogonal complement of span(X).
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

ORTHO_CHECK = 1e-8
# trial points losing more orthonormality than this in one step are rejected
FEASIBILITY_GUARD = 1e-12


class SingularRetractionError(np.linalg.LinAlgError):
    """The 2d x 2d Cayley system is singular for this step; shrink the step."""


@dataclass(frozen=True)
class StiefelSettings:
    max_iter: int = 50
    grad_tol: float = 1e-7
    c1: float = 1e-4
    rho: float = 0.5
    tau0: float = 1e-2
    tau_min: float = 1e-14
    tau_max: float = 1e6
    grow: bool = True
    step_rule: str = "armijo"
    ritz: bool = True
    escape_saddles: bool = True
    escape_power_iters: int = 60
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if not self.tau_min < self.tau0:
            raise ValueError("tau_min must be smaller than tau0")
        if self.step_rule not in ("armijo", "bb"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")


class StiefelResult(NamedTuple):
    basis: np.ndarray
    iterations: int
    grad_norm: float
    status: str


def _check_orthonormal(X, tol=ORTHO_CHECK):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("expected an M x d matrix")
    err = np.linalg.norm(X.T @ X - np.eye(X.shape[1]))
    if err > tol:
        raise ValueError(f"X is not orthonormal (|X^T X - I| = {err:.3g})")
    return X


def _coefs(a, b):
    return 1.0 / np.asarray(a, dtype=np.float64) - 1.0 / float(b)


def objective(S, a, b, X):
    X = _check_orthonormal(X)
    c = _coefs(a, b)
    return float(np.einsum("ij,ij->j", X, S @ X) @ c)


def euclidean_grad(S, a, b, X):
    """Gradient 2 S X diag(1/a - 1/b) of :func:`objective` (S symmetric)."""
    return 2.0 * (S @ X) * _coefs(a, b)


def cayley_retract(X, G, tau):
    """Cayley curve Y(tau) = (I + tau/2 A)^{-1} (I - tau/2 A) X, A = G X^T - X G^T.

    Evaluated through the low-rank factorization A = U V^T with U = [G, X],
    V = [X, -G], which needs a single 2d x 2d solve.
    """
    if tau == 0.0:
        return np.array(X, dtype=np.float64, copy=True)
    d = X.shape[1]
    U = np.hstack([G, X])
    V = np.hstack([X, -G])
    inner = np.eye(2 * d) + 0.5 * tau * (V.T @ U)
    try:
        sol = np.linalg.solve(inner, V.T @ X)
    except np.linalg.LinAlgError as exc:
        raise SingularRetractionError(str(exc)) from None
    if not np.all(np.isfinite(sol)):
        raise SingularRetractionError("non-finite Cayley solve")
    return X - tau * (U @ sol)


def _slope_sq(G, X):
    # -d/dtau f(Y(tau)) at tau=0, i.e. half the squared norm of the skew field
    A = G.T @ X
    return max(float(np.sum(G * G) - np.trace(A @ A)), 0.0)


def _gershgorin_shift(S):
    off = np.abs(S).sum(axis=1) - np.abs(np.diag(S))
    return max(0.0, -float(np.min(np.diag(S) - off)))


def _ritz(S, c, X, f):
    """Best basis of span(X): Ritz vectors of S, largest paired with the most
    negative weight. Returns (X, f), unchanged if no improvement."""
    H = X.T @ (S @ X)
    _, Q = np.linalg.eigh(0.5 * (H + H.T))
    Y = X @ Q[:, ::-1]
    fY = float(np.einsum("ij,ij->j", Y, S @ Y) @ c)
    return (Y, fY) if fY < f else (X, f)


def _escape(S, c, X, f, settings):
    """Try to leave a saddle; returns a strictly better feasible X or None."""
    tol = 1e-12 * (1.0 + abs(f))
    rq = np.einsum("ij,ij->j", X, S @ X)
    order = np.argsort(-rq, kind="stable")
    if not np.array_equal(order, np.arange(X.shape[1])):
        if float(c @ rq[order]) < f - tol:
            return X[:, order]
    M, d = X.shape
    if d >= M:
        return None
    shift = _gershgorin_shift(S)
    rng = np.random.default_rng(settings.seed)
    v = rng.standard_normal(M)
    best_v, best_r = None, -np.inf
    for _ in range(settings.escape_power_iters):
        v -= X @ (X.T @ v)
        v -= X @ (X.T @ v)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return None
        v /= nv
        Sv = S @ v
        r = float(v @ Sv)
        if r > best_r:
            best_v, best_r = v.copy(), r
        v = Sv + shift * v
    gain = c * (best_r - rq)
    j = int(np.argmin(gain))
    if gain[j] >= -tol:
        return None
    v = best_v - X @ (X.T @ best_v)
    v -= X @ (X.T @ v)
    v /= np.linalg.norm(v)
    Y = X.copy()
    Y[:, j] = v
    return Y


def optimize(S, a, b, X0, settings=None, callback=None):
    """Minimize :func:`objective` over orthonormal X starting from ``X0``.

    Parameters
    ----------
    S : ndarray (M, M)
        Symmetric (covariance) matrix.
    a, b : spectrum with every ``a_j > b > 0``.
    X0 : ndarray (M, d)
        Orthonormal warm start.
    settings : StiefelSettings, optional
    callback : callable, optional
        Called as ``callback(X, f)`` on the start point and every accepted iterate.

    Returns
    -------
    StiefelResult
        ``(basis, iterations, grad_norm, status)`` with status one of
        ``"converged"``, ``"max_iter"`` or ``"stalled"`` (step fell below tau_min).
    """
    settings = settings or StiefelSettings()
    S = np.asarray(S, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if not np.all(a > b) or b <= 0:
        raise ValueError("need a_j > b > 0")
    X = _check_orthonormal(X0).copy()
    c = _coefs(a, b)
    eye = np.eye(X.shape[1])

    def f_of(Y):
        return float(np.einsum("ij,ij->j", Y, S @ Y) @ c)

    f = f_of(X)
    if callback is not None:
        callback(X, f)
    if settings.ritz:
        X, f = _ritz(S, c, X, f)
    tau_trial = settings.tau0
    prev = None
    status = "max_iter"
    it = 0
    G = euclidean_grad(S, a, b, X)
    g2 = _slope_sq(G, X)
    while it < settings.max_iter:
        if np.sqrt(g2) <= settings.grad_tol:
            Y = _escape(S, c, X, f, settings) if settings.escape_saddles else None
            if Y is None:
                status = "converged"
                break
            X, f = Y, f_of(Y)
            it += 1
            if callback is not None:
                callback(X, f)
            G = euclidean_grad(S, a, b, X)
            g2 = _slope_sq(G, X)
            prev = None
            continue
        if settings.step_rule == "bb" and prev is not None:
            dX, dG = X - prev[0], G - prev[1]
            denom = abs(float(np.sum(dX * dG)))
            if denom > 0:
                tau_trial = min(float(np.sum(dX * dX)) / denom, settings.tau_max)
        tau = tau_trial
        accepted = None
        while tau >= settings.tau_min:
            try:
                Y = cayley_retract(X, G, tau)
            except SingularRetractionError:
                tau *= settings.rho
                continue
            if np.linalg.norm(Y.T @ Y - eye) > np.linalg.norm(X.T @ X - eye) + FEASIBILITY_GUARD:
                tau *= settings.rho
                continue
            fY = f_of(Y)
            if fY <= f - settings.c1 * tau * g2:
                accepted = (Y, fY)
                break
            tau *= settings.rho
        if accepted is None:
            status = "stalled"
            break
        prev = (X, G)
        X, f = accepted
        if settings.ritz:
            X, f = _ritz(S, c, X, f)
        it += 1
        if callback is not None:
            callback(X, f)
        if settings.grow:
            tau_trial = min(tau / settings.rho, settings.tau_max)
        G = euclidean_grad(S, a, b, X)
        g2 = _slope_sq(G, X)
    else:
        if np.sqrt(g2) <= settings.grad_tol:
            status = "converged"
    return StiefelResult(X, it, float(np.sqrt(g2)), status)


def fix_signs(X):
    """Flip columns so the largest-magnitude entry of each is positive."""
    X = np.array(X, dtype=np.float64, copy=True)
    idx = np.argmax(np.abs(X), axis=0)
    signs = np.sign(X[idx, np.arange(X.shape[1])])
    signs[signs == 0] = 1.0
    return X * signs


def principal_angles(X, Y):
    """Principal angles (radians, ascending) between span(X) and span(Y)."""
    X = _check_orthonormal(X)
    Y = _check_orthonormal(Y)
    sv = np.linalg.svd(X.T @ Y, compute_uv=False)
    return np.sort(np.arccos(np.clip(sv, 0.0, 1.0)))


def orthonormalize(X):
    """Nearest matrix with orthonormal columns (polar factor)."""
    U, _, Vt = np.linalg.svd(np.asarray(X, dtype=np.float64), full_matrices=False)
    return U @ Vt
