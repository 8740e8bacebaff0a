"""
Adaptive neighbour graph: the closed-form S step and the spectral F step.

For fixed Y and F every row of S solves

    min_{s >= 0, sum(s) = 1}  sum_j d_ij s_j + gamma_i s_j^2

with d_ij = -H_ij log softmax_i(j) + lambda ||f_i - f_j||^2. Choosing gamma_i
from the (k+1)-th smallest distance leaves exactly k nonzero weights, so k is
the only knob. The diagonal of d is +inf: a sample is never its own neighbour.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _scipy_components
from scipy.spatial.distance import cdist

from .exceptions import (
    DegenerateRow,
    DimensionMismatch,
    EigenFailure,
    InsufficientNeighbors,
    NonFiniteIntermediate,
    NumericalError,
)
from .objective import log_softmax

logger = logging.getLogger(__name__)

GAMMA_FLOOR = 1e-12
ZERO_WEIGHT = 1e-14


def _readonly(array):
    out = np.array(array, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    S: np.ndarray
    support: np.ndarray = None
    gammas: np.ndarray = None
    gamma: float = 0.0

    def __post_init__(self):
        S = _readonly(self.S)
        object.__setattr__(self, 'S', S)
        if self.support is None:
            object.__setattr__(self, 'support', np.sum(S > ZERO_WEIGHT, axis=1))
        if self.gammas is None:
            object.__setattr__(self, 'gammas', np.zeros(S.shape[0]))

    def __array__(self, dtype=None, copy=None):
        return self.S if dtype is None else self.S.astype(dtype)

    @property
    def n(self):
        return self.S.shape[0]


@dataclass(frozen=True, eq=False)
class Laplacian:
    L: np.ndarray
    degree: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return self.L if dtype is None else self.L.astype(dtype)


@dataclass(frozen=True, eq=False)
class SpectralEmbedding:
    F: np.ndarray
    eigvals: np.ndarray = None

    def __array__(self, dtype=None, copy=None):
        return self.F if dtype is None else self.F.astype(dtype)


def pairwise_distances(Y, F, H, sigma, lambda_, exclude_self=False):
    H = np.asarray(H, dtype=float)
    log_p = log_softmax(Y, sigma, exclude_self)
    d = np.where(H != 0, -H * log_p, 0.0)
    if lambda_:
        F = np.asarray(F, dtype=float)
        d = d + lambda_ * cdist(F, F, 'sqeuclidean')
    np.fill_diagonal(d, np.inf)
    off_diagonal = ~np.eye(d.shape[0], dtype=bool)
    if not np.all(np.isfinite(d[off_diagonal])):
        raise NonFiniteIntermediate("pairwise distances contain NaN or Inf off the diagonal")
    return d


def gamma_for_row(d_sorted, k):
    d_sorted = np.asarray(d_sorted, dtype=float)
    finite = d_sorted[np.isfinite(d_sorted)]
    if finite.size < k + 1:
        raise InsufficientNeighbors(f"need {k + 1} finite distances, got {finite.size}")
    gamma = 0.5 * np.sum(finite[k] - finite[:k])
    return max(float(gamma), GAMMA_FLOOR)


def gamma_global(d, k):
    d = np.sort(np.asarray(d, dtype=float), axis=1)
    gammas = []
    for i, row in enumerate(d):
        try:
            gammas.append(gamma_for_row(row, k))
        except InsufficientNeighbors as exc:
            raise InsufficientNeighbors(f"row {i}: {exc}") from exc
    return float(np.mean(gammas))


def project_simplex(v):
    """Euclidean projection onto {s >= 0, sum(s) = 1} by sorting."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = ind[u - cssv / ind > 0][-1]
    theta = cssv[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def update_similarity_row(d_i, gamma_i, k):
    d_i = np.asarray(d_i, dtype=float)
    finite = np.isfinite(d_i)
    if not finite.any():
        raise DegenerateRow("every distance in the row is infinite")
    if finite.sum() < k:
        raise InsufficientNeighbors(f"need {k} finite distances, got {finite.sum()}")

    nearest = np.argsort(d_i, kind='stable')[:k]
    chosen = d_i[nearest]
    # s_j = (-d_j / (2 gamma) + eta)_+ with eta = 1/k + sum(chosen) / (2 k gamma);
    # tied distances give zero gaps, so rows stay exactly uniform at the gamma floor
    gaps = np.sum(chosen[None, :] - chosen[:, None], axis=1)
    weights = 1.0 / k + gaps / (2.0 * k * gamma_i)
    if np.any(weights < 0):
        weights = project_simplex(-chosen / (2.0 * gamma_i))

    row = np.zeros_like(d_i)
    row[nearest] = weights
    return row


def _row_gamma(sorted_finite, k):
    if sorted_finite.size > k:
        return gamma_for_row(sorted_finite, k), k
    # fewer than k+1 candidates: the farthest candidate stands in for d_{k+1}
    m = sorted_finite.size
    gamma = 0.5 * np.sum(sorted_finite[-1] - sorted_finite)
    return max(float(gamma), GAMMA_FLOOR), m


def update_similarity(Y, F, H, params):
    d = pairwise_distances(Y, F, H, params.sigma, params.lambda_, params.exclude_self)
    if params.mask_incompatible:
        d = np.where(np.asarray(H) == 0, np.inf, d)

    n = d.shape[0]
    S = np.zeros((n, n))
    gammas = np.zeros(n)
    clamped = 0
    for i in range(n):
        row = d[i]
        candidates = np.sort(row[np.isfinite(row)])
        try:
            if candidates.size == 0:
                raise DegenerateRow("no admissible neighbour")
            gammas[i], k_i = _row_gamma(candidates, params.k)
            S[i] = update_similarity_row(row, gammas[i], k_i)
        except NumericalError as exc:
            raise type(exc)(f"row {i}: {exc}") from exc
        clamped += k_i < params.k

    if clamped:
        logger.warning("%d of %d rows had fewer than k+1=%d candidates", clamped, n, params.k + 1)
    return SimilarityMatrix(S=S, gammas=gammas, gamma=float(gammas.mean()))


def laplacian(S):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionMismatch(f"similarity must be square, got {S.shape}")
    symmetric = (S + S.T) / 2
    degree = symmetric.sum(axis=1)
    return Laplacian(L=np.diag(degree) - symmetric, degree=degree)


def update_spectral(L, c):
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    if not 1 <= c <= n:
        raise DimensionMismatch(f"c={c} must lie in 1..{n}")
    try:
        eigvals, F = linalg.eigh(L, subset_by_index=[0, c - 1])
    except (linalg.LinAlgError, ValueError) as exc:
        raise EigenFailure(f"symmetric eigensolver failed: {exc}") from exc

    # largest-magnitude component of every eigenvector is made positive
    pivots = np.argmax(np.abs(F), axis=0)
    signs = np.sign(F[pivots, np.arange(c)])
    signs[signs == 0] = 1.0
    return SpectralEmbedding(F=F * signs, eigvals=eigvals)


def connected_components(S, threshold=1e-12):
    S = np.asarray(S, dtype=float)
    adjacency = (S + S.T) / 2 > threshold
    count, _ = _scipy_components(csr_matrix(adjacency), directed=False)
    return int(count)


def dump_coordinates(S, stream):
    """Write nonzero entries as 0-based ``i j value`` lines."""
    S = np.asarray(S, dtype=float)
    for i, j in zip(*np.nonzero(S)):
        stream.write(f"{i} {j} {float(S[i, j])!r}\n")
