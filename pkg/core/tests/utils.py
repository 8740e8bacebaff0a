import numpy as np

from core.domain import HyperParams
from core.ingest import make_blobs


def small_blobs(n_per_class=10, classes=3, D=5, seed=0):
    return make_blobs(n_per_class, classes, D, separation=10.0, noise_std=0.5, seed=seed)


def quick_params(**overrides):
    values = dict(sigma=1.0, lambda_=1.0, k=4, c=3, d=2, max_inner=50, max_outer=5)
    values.update(overrides)
    return HyperParams(**values)


def random_stochastic(rng, n, density=0.5):
    """Row-stochastic matrix with a zero diagonal and at least one entry per row."""
    S = rng.random((n, n)) * (rng.random((n, n)) < density)
    np.fill_diagonal(S, 0.0)
    for i in range(n):
        if not S[i].any():
            S[i, (i + 1) % n] = 1.0
    return S / S.sum(axis=1, keepdims=True)


QUICK_CONFIG = """\
# small blobs run
dataset.source = blobs
blobs.n_per_class = 10
k = 4
max_inner = 50
max_outer = 5
split.repeats = 2
"""
