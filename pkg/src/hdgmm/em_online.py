"""Streaming (online) EM for HD-GMM.

Each mini-batch contributes expected sufficient statistics ``(r, r y, r y y^T)``
per component; these are blended into running statistics with a
Robbins-Monro step ``gamma_t = (t + t0)^(-alpha)`` and the model is re-derived
from the running statistics. Weights, means and the spectrum are closed form;
the basis is either read off an eigendecomposition or refined on the Stiefel
manifold from the previous basis.
"""
from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from .em_batch import FitTrace, accumulate_moments, clamp_spectrum, spectral_update
from .errors import InsufficientDataError
from .model import LOG_2PI, HdGmmModel, _check_matrix, covariance_dense, responsibilities_batch
from .stiefel import StiefelSettings, fix_signs, optimize, orthonormalize


@dataclass
class SuffStats:
    """Running statistics: mass ``s0`` (K,), first moment ``s1`` (K, M),
    second moment ``S2`` (K, M, M) and the number of updates ``t``."""

    s0: np.ndarray
    s1: np.ndarray
    S2: np.ndarray
    t: int = 0

    @property
    def K(self):
        return self.s0.shape[0]

    @property
    def M(self):
        return self.s1.shape[1]

    def copy(self):
        return SuffStats(self.s0.copy(), self.s1.copy(), self.S2.copy(), self.t)


@dataclass(frozen=True)
class OnlineConfig:
    alpha: float = 0.6
    t0: float = 0.0
    batch_size: int = 256
    n_burn: int | None = None
    basis_mode: str = "stiefel"
    stiefel: StiefelSettings = field(default_factory=StiefelSettings)
    alternations: int = 2
    s0_floor: float = 1e-6
    eval_every: int = 10
    floor_b: float | None = None
    checkpoint_path: str | None = None
    checkpoint_every: int = 0

    def __post_init__(self):
        if not 0.5 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0.5, 1], got {self.alpha}")
        if self.t0 < 0:
            raise ValueError("t0 must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.basis_mode not in ("eigen", "stiefel"):
            raise ValueError(f"unknown basis mode {self.basis_mode!r}")

    def burn_in(self, K, d):
        return 10 * K * d if self.n_burn is None else int(self.n_burn)


def expected_stats(model, batch):
    """Batch-averaged responsibility-weighted statistics under ``model``."""
    X = _check_matrix(model.M, batch)
    resp, _ = responsibilities_batch(model, X)
    mom = accumulate_moments(X, resp)
    B = X.shape[0]
    return SuffStats(mom.mass / B, mom.first / B, mom.scatter / B, 0)


def stats_from_model(model):
    """Population statistics implied by a model (used as the starting point)."""
    K, M = model.K, model.M
    S2 = np.empty((K, M, M))
    for k, c in enumerate(model.components):
        S2[k] = c.weight * (covariance_dense(c) + np.outer(c.mean, c.mean))
    return SuffStats(model.weights.copy(), model.weights[:, None] * model.means, S2, 0)


def step_size(t, cfg):
    if t < 1:
        raise ValueError("step index starts at 1")
    return float((t + cfg.t0) ** (-cfg.alpha))


def sa_update(stats, increment, gamma):
    """(1 - gamma) * stats + gamma * increment, with the step counter advanced.

    Written as a convex combination so that ``gamma = 1`` replaces exactly.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"step size {gamma} outside (0, 1]")
    return SuffStats(
        (1.0 - gamma) * stats.s0 + gamma * increment.s0,
        (1.0 - gamma) * stats.s1 + gamma * increment.s1,
        (1.0 - gamma) * stats.S2 + gamma * increment.S2,
        stats.t + 1,
    )


def _stiefel_spectrum(S, prev, cfg):
    M, d = S.shape[0], prev.d
    W = orthonormalize(prev.basis)
    a, b = prev.signal_variances, prev.noise_variance
    trace = float(np.trace(S))
    for _ in range(max(cfg.alternations, 1)):
        W = optimize(S, a, b, W, cfg.stiefel).basis
        a = np.einsum("ij,ij->j", W, S @ W)
        order = np.argsort(-a, kind="stable")
        a, W = a[order], W[:, order]
        a, b = clamp_spectrum(a, trace, M, cfg.floor_b)
    return a, fix_signs(W), b


def m_step_online(stats, prev, cfg):
    """Model from running statistics.

    Components whose running mass is below ``cfg.s0_floor`` are starved: they
    keep their previous parameters (weight included) and the remaining weights
    are rescaled to fill the rest of the simplex.

    Returns
    -------
    model : HdGmmModel
    starved : list of int
    """
    starved = [k for k in range(stats.K) if not stats.s0[k] >= cfg.s0_floor]
    if len(starved) == stats.K:
        return prev, starved
    live = [k for k in range(stats.K) if k not in starved]
    kept = sum(prev.components[k].weight for k in starved)
    live_mass = float(sum(stats.s0[k] for k in live))
    comps = list(prev.components)
    for k in live:
        s0 = float(stats.s0[k])
        mu = stats.s1[k] / s0
        S = stats.S2[k] / s0 - np.outer(mu, mu)
        S = 0.5 * (S + S.T)
        if cfg.basis_mode == "eigen":
            a, W, b = spectral_update(S, prev.d, cfg.floor_b)
        else:
            a, W, b = _stiefel_spectrum(S, prev.components[k], cfg)
        weight = s0 / live_mass if not starved else (1.0 - kept) * s0 / live_mass
        comps[k] = prev.components[k].replace(
            weight=weight, mean=mu, signal_variances=a, noise_variance=b, basis=W
        )
    return HdGmmModel(tuple(comps)), starved


@dataclass(frozen=True)
class NaturalParams:
    """Natural parameters in factored form.

    The full parameter is ``[linear, 1/2 sum_j quad_j vec(w_j w_j^T), isotropic]``
    with ``quad_j = 1/b - 1/a_j``; the ``M x M`` block is never formed.
    """

    linear: np.ndarray
    quad: np.ndarray
    basis: np.ndarray
    isotropic: float

    def inner(self, y):
        """<s(y), phi> for s(y) = [y, vec(y y^T), y^T y]."""
        z = self.basis.T @ y
        return float(y @ self.linear) + 0.5 * float(self.quad @ (z * z)) + self.isotropic * float(y @ y)


def phi(comp):
    W, a, b, mu = comp.basis, comp.signal_variances, comp.noise_variance, comp.mean
    linear = W @ ((1.0 / a - 1.0 / b) * (W.T @ mu)) + mu / b
    return NaturalParams(linear, 1.0 / b - 1.0 / a, W, -0.5 / b)


def psi(comp):
    W, a, b, mu = comp.basis, comp.signal_variances, comp.noise_variance, comp.mean
    z = W.T @ mu
    return (
        0.5 * float(np.sum((1.0 / a - 1.0 / b) * z * z + np.log(a)))
        + float(mu @ mu) / (2.0 * b)
        + 0.5 * (comp.M - comp.d) * math.log(b)
    )


def exp_family_log_density(comp, y):
    """log N(y) written as log h(y) + <s(y), phi> - psi with log h = -(M/2) log 2 pi."""
    y = np.asarray(y, dtype=np.float64)
    return -0.5 * comp.M * LOG_2PI + phi(comp).inner(y) - psi(comp)


def iter_batches(stream, batch_size):
    """Regroup an iterable of record chunks into mini-batches of ``batch_size``.

    The final batch may be shorter. Chunks are consumed lazily.
    """
    pending, have = [], 0
    for chunk in stream:
        chunk = np.asarray(chunk, dtype=np.float64)
        if chunk.ndim == 1:
            chunk = chunk[None, :]
        while chunk.shape[0]:
            take = min(batch_size - have, chunk.shape[0])
            pending.append(chunk[:take])
            have += take
            chunk = chunk[take:]
            if have == batch_size:
                yield pending[0] if len(pending) == 1 else np.concatenate(pending)
                pending, have = [], 0
    if have:
        yield pending[0] if len(pending) == 1 else np.concatenate(pending)


@dataclass
class OnlineState:
    model: HdGmmModel
    stats: SuffStats
    records: int = 0


def fit_online(stream, K, d, cfg, init, holdout=None, state=None):
    """Fit an HD-GMM on a stream of record chunks.

    Parameters
    ----------
    stream : iterable of ndarray
        Chunks of shape (n_i, M) in any sizes; they are regrouped into
        mini-batches of ``cfg.batch_size``. Records are assumed to arrive in
        random order; a stream sorted by any structure drifts the estimate.
    K, d : int
        Must match ``init``.
    cfg : OnlineConfig
    init : HdGmmModel
        Starting model (also the warm start for the first Stiefel solves).
    holdout : ndarray, optional
        Records used to track the average held-out log-likelihood every
        ``cfg.eval_every`` batches.
    state : OnlineState, optional
        Resume from a checkpoint instead of ``init``.

    Returns
    -------
    (HdGmmModel, FitTrace)
    """
    if (init.K, init.d) != (K, d):
        raise ValueError(f"init has (K, d)={(init.K, init.d)}, expected {(K, d)}")
    if state is not None:
        model, stats, records = state.model, state.stats.copy(), state.records
    else:
        model, stats, records = init, stats_from_model(init), 0
    n_burn = cfg.burn_in(K, d)
    trace = FitTrace()
    if holdout is not None:
        holdout = _check_matrix(init.M, holdout)

    def evaluate():
        _, lse = responsibilities_batch(model, holdout)
        trace.log_likelihood.append(math.fsum(lse) / holdout.shape[0])
        trace.eval_batches.append(stats.t)

    for batch in iter_batches(stream, cfg.batch_size):
        inc = expected_stats(model, batch)
        stats = sa_update(stats, inc, step_size(stats.t + 1, cfg))
        records += batch.shape[0]
        if records >= n_burn:
            model, starved = m_step_online(stats, model, cfg)
            trace.starved += len(starved)
        if holdout is not None and stats.t % cfg.eval_every == 0:
            evaluate()
        if cfg.checkpoint_path and cfg.checkpoint_every and stats.t % cfg.checkpoint_every == 0:
            from .formats import write_checkpoint

            write_checkpoint(cfg.checkpoint_path, model, stats, records)
    if records < n_burn:
        raise InsufficientDataError(
            f"stream ended after {records} records, before the burn-in of {n_burn}"
        )
    if holdout is not None and (not trace.eval_batches or trace.eval_batches[-1] != stats.t):
        evaluate()
    if trace.starved:
        warnings.warn(f"{trace.starved} starved component updates during the online fit")
    trace.iterations = stats.t
    trace.records = records
    trace.converged = True
    return model, trace
