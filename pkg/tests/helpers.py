import numpy as np

from hdgmm.model import Component, HdGmmModel

# filled by test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES = {}


def random_component(rng, M, d, weight=1.0, scale=1.0):
    W, _ = np.linalg.qr(rng.standard_normal((M, d)))
    b = float(rng.uniform(0.2, 2.0)) * scale
    a = np.sort(b + rng.uniform(0.1, 10.0, size=d) * scale)[::-1]
    mean = rng.standard_normal(M) * 3.0
    return Component(weight, mean, a, b, W)


def random_model(rng, K, M, d):
    w = rng.dirichlet(np.full(K, 3.0))
    comps = [random_component(rng, M, d) for _ in range(K)]
    w = w / w.sum()
    return HdGmmModel(tuple(c.replace(weight=wk) for c, wk in zip(comps, w)))
