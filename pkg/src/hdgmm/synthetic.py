"""Synthetic data: a toy fingerprint dictionary, HD-GMM sampling, noise.

All randomness comes from explicit seeds.
"""
from dataclasses import dataclass

import numpy as np

from .matching import Dictionary
from .model import Component, HdGmmModel


@dataclass(frozen=True)
class DictionaryGrid:
    """Parameter grid and sequence timing for :func:`gen_synthetic_dictionary`.

    Times are in seconds and off-resonance in Hz. ``tr`` may be a scalar or a
    per-time-point schedule of length ``M``; with the default schedule the
    recovery factor varies over time, which keeps T1 identifiable after the
    signals are normalized.
    """

    t1: tuple = tuple(np.geomspace(0.2, 4.0, 40))
    t2: tuple = tuple(np.geomspace(0.02, 1.5, 25))
    df: tuple = tuple(np.linspace(0.0, 6.0, 20))
    M: int = 64
    dt: float = 0.01
    tr: object = None

    def schedule(self):
        if self.tr is None:
            return default_tr_schedule(self.M)
        tr = np.broadcast_to(np.asarray(self.tr, dtype=np.float64), (self.M,))
        return np.array(tr)


def default_tr_schedule(M, base=1.0):
    j = np.arange(M)
    return base * (1.0 + 0.9 * np.sin(2.0 * np.pi * 3.0 * j / M))


def gen_synthetic_dictionary(grid=None):
    """Toy relaxation signals over the Cartesian product of (T1, T2, df).

    ``s(t_j) = (1 - exp(-TR_j/T1)) * exp(-t_j/T2) * cos(2 pi df t_j)`` with
    ``t_j = j * dt``. Rows are ordered with df varying fastest, then T2, then T1.
    """
    grid = grid or DictionaryGrid()
    t1 = np.asarray(grid.t1, dtype=np.float64)
    t2 = np.asarray(grid.t2, dtype=np.float64)
    df = np.asarray(grid.df, dtype=np.float64)
    if t1.size == 0 or t2.size == 0 or df.size == 0:
        raise ValueError("empty parameter grid")
    if np.any(t1 <= 0) or np.any(t2 <= 0):
        raise ValueError("relaxation times must be positive")
    T1, T2, DF = (g.reshape(-1) for g in np.meshgrid(t1, t2, df, indexing="ij"))
    t = np.arange(grid.M) * grid.dt
    tr = grid.schedule()
    signals = (
        (1.0 - np.exp(-tr[None, :] / T1[:, None]))
        * np.exp(-t[None, :] / T2[:, None])
        * np.cos(2.0 * np.pi * DF[:, None] * t[None, :])
    )
    labels = np.stack([T1, T2, DF], axis=1)
    return Dictionary(signals, labels, ("T1", "T2", "df"))


def add_noise(signals, snr_db, seed):
    """White Gaussian noise with per-signal std ``(|y|/sqrt(M)) * 10^(-snr/20)``."""
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    X = np.asarray(signals, dtype=np.float64)
    single = X.ndim == 1
    X2 = X[None, :] if single else X
    rng = np.random.default_rng(seed)
    sigma = np.linalg.norm(X2, axis=1) / np.sqrt(X2.shape[1]) * 10.0 ** (-snr_db / 20.0)
    out = X2 + sigma[:, None] * rng.standard_normal(X2.shape)
    return out[0] if single else out


def random_model(K, M, d, seed, separation=10.0, spectrum=(4.0, 16.0), noise=1.0):
    """Random HD-GMM with Gaussian means scaled by ``separation`` and a
    uniformly drawn leading spectrum ``noise * U(spectrum)``."""
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.full(K, 5.0))
    comps = []
    for k in range(K):
        W, _ = np.linalg.qr(rng.standard_normal((M, d)))
        a = np.sort(rng.uniform(*spectrum, size=d))[::-1] * noise
        mean = separation * rng.standard_normal(M)
        comps.append(Component(weights[k], mean, a, noise, W))
    weights = np.array([c.weight for c in comps])
    weights /= weights.sum()
    return HdGmmModel(tuple(c.replace(weight=w) for c, w in zip(comps, weights)))


def _draw(model, n, rng):
    labels = rng.choice(model.K, size=n, p=model.weights)
    Y = np.empty((n, model.M))
    for k, c in enumerate(model.components):
        sel = np.flatnonzero(labels == k)
        if sel.size == 0:
            continue
        lat = rng.standard_normal((sel.size, model.d)) * np.sqrt(c.signal_variances - c.noise_variance)
        iso = rng.standard_normal((sel.size, model.M)) * np.sqrt(c.noise_variance)
        Y[sel] = c.mean + lat @ c.basis.T + iso
    return Y, labels


def sample_hdgmm(model, N, seed):
    """N draws from the mixture and their true component labels."""
    return _draw(model, int(N), np.random.default_rng(seed))


def stream_hdgmm(model, N, chunk_size, seed):
    """Generator of ``(chunk_size, M)`` draws totalling N records; nothing is retained."""
    rng = np.random.default_rng(seed)
    left = int(N)
    while left > 0:
        n = min(chunk_size, left)
        Y, _ = _draw(model, n, rng)
        yield Y
        left -= n
