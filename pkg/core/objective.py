"""
Contrastive objective over a learned positive structure.

With W = H * S (elementwise) the contrastive term is

    L(P) = sum_ij -W_ij * log( f(y_i, y_j) / sum_k f(y_i, y_k) )

where f is the exponentiated cosine similarity divided by the temperature
sigma. Logits are evaluated through log-sum-exp so small temperatures do not
overflow. The full objective adds gamma * ||S||_F^2 and 2 lambda Tr(F^T L_S F).
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .domain import project
from .exceptions import NonFinite

logger = logging.getLogger(__name__)

NORM_GUARD = 1e-12
FD_STEP = 1e-5


@dataclass(frozen=True)
class LossBreakdown:
    contrastive: float
    frobenius: float
    spectral: float
    total: float

    @classmethod
    def of(cls, contrastive, frobenius, spectral):
        return cls(contrastive, frobenius, spectral, contrastive + frobenius + spectral)

    def as_dict(self):
        return {
            'contrastive': self.contrastive,
            'frobenius': self.frobenius,
            'spectral': self.spectral,
            'total': self.total,
        }


@dataclass(frozen=True, eq=False)
class GradientReport:
    grad: np.ndarray
    fd_grad: Optional[np.ndarray] = None
    max_rel_err: Optional[float] = None


@dataclass(frozen=True, eq=False)
class MutualInfoBound:
    values: np.ndarray
    vacuous: np.ndarray

    def summary(self):
        active = ~self.vacuous
        return {
            'mean': float(self.values[active].mean()) if active.any() else 0.0,
            'vacuous_rows': int(self.vacuous.sum()),
        }


def kernel(y_i, y_j, sigma):
    y_i = np.asarray(y_i, dtype=float)
    y_j = np.asarray(y_j, dtype=float)
    norm_i = max(np.linalg.norm(y_i), NORM_GUARD)
    norm_j = max(np.linalg.norm(y_j), NORM_GUARD)
    return float(np.exp(np.dot(y_i, y_j) / (norm_i * norm_j * sigma)))


def _unit_columns(Y):
    norms = np.linalg.norm(Y, axis=0)
    guarded = np.maximum(norms, NORM_GUARD)
    return Y / guarded, norms, guarded


def _softmax_parts(Y, sigma, exclude_self):
    """Logits, log-softmax rows and the softmax itself over the denominator set."""
    Y_hat, norms, guarded = _unit_columns(np.asarray(Y, dtype=float))
    Z = (Y_hat.T @ Y_hat) / sigma
    Z_den = Z.copy()
    if exclude_self:
        np.fill_diagonal(Z_den, -np.inf)
    lse = logsumexp(Z_den, axis=1, keepdims=True)
    return Y_hat, norms, guarded, Z - lse, np.exp(Z_den - lse)


def log_softmax(Y, sigma, exclude_self=False):
    return _softmax_parts(Y, sigma, exclude_self)[3]


def _weights(H, S):
    return np.asarray(H, dtype=float) * np.asarray(S, dtype=float)


def row_losses(Y, H, S, sigma, exclude_self=False):
    W = _weights(H, S)
    log_p = log_softmax(Y, sigma, exclude_self)
    terms = np.where(W > 0, -W * np.where(W > 0, log_p, 0.0), 0.0)
    rows = terms.sum(axis=1)
    if not np.all(np.isfinite(rows)):
        raise NonFinite("contrastive loss is not finite")
    return rows


def infonce_loss(Y, H, S, sigma, exclude_self=False):
    return float(row_losses(Y, H, S, sigma, exclude_self).sum())


def spectral_term(S, F, lambda_):
    """2 lambda Tr(F^T L_S F), written as lambda * sum_ij S_ij ||f_i - f_j||^2."""
    if lambda_ == 0:
        return 0.0
    F = np.asarray(F, dtype=float)
    return float(lambda_ * np.sum(np.asarray(S, dtype=float) * cdist(F, F, 'sqeuclidean')))


def total_loss(Y, H, S, F, params, gamma=None):
    """Contrastive, Frobenius and spectral terms; ``gamma`` defaults to the global gamma stored on S."""
    if gamma is None:
        gamma = getattr(S, 'gamma', 0.0)
    S_values = np.asarray(S, dtype=float)
    return LossBreakdown.of(
        contrastive=infonce_loss(Y, H, S, params.sigma, params.exclude_self),
        frobenius=float(gamma * np.sum(S_values**2)),
        spectral=spectral_term(S_values, F, params.lambda_),
    )


def value_and_grad(X, P, H, S, sigma, exclude_self=False):
    """Contrastive loss at P and its gradient with respect to P.

    Chain rule through Y = P^T X, column normalisation and the log-softmax;
    columns whose norm sits under the guard are scaled but not projected.
    """
    X = np.asarray(X, dtype=float)
    P = np.asarray(P, dtype=float)
    Y = P.T @ X
    Y_hat, norms, guarded, log_p, p = _softmax_parts(Y, sigma, exclude_self)
    W = _weights(H, S)

    loss = -float(np.sum(np.where(W > 0, W * np.where(W > 0, log_p, 0.0), 0.0)))
    if not np.isfinite(loss):
        raise NonFinite("contrastive loss is not finite")

    grad_logits = p * W.sum(axis=1, keepdims=True) - W
    grad_cos = grad_logits / sigma
    grad_unit = Y_hat @ (grad_cos + grad_cos.T)
    radial = np.sum(Y_hat * grad_unit, axis=0)
    grad_Y = np.where(norms > NORM_GUARD, grad_unit - Y_hat * radial, grad_unit) / guarded
    grad = X @ grad_Y.T
    if not np.all(np.isfinite(grad)):
        raise NonFinite("contrastive gradient is not finite")
    return loss, grad


def central_difference(func, P, h=FD_STEP):
    P = np.array(P, dtype=float)
    out = np.zeros_like(P)
    for index in np.ndindex(P.shape):
        original = P[index]
        P[index] = original + h
        upper = func(P)
        P[index] = original - h
        lower = func(P)
        P[index] = original
        out[index] = (upper - lower) / (2 * h)
    return out


def fd_gradient(X, P, H, S, sigma, h=FD_STEP, exclude_self=False):
    return central_difference(lambda Q: infonce_loss(project(X, Q), H, S, sigma, exclude_self), P, h)


def gradient(X, P, H, S, sigma, check=False, h=FD_STEP, exclude_self=False):
    _, grad = value_and_grad(X, P, H, S, sigma, exclude_self)
    if not check:
        return GradientReport(grad)
    fd = fd_gradient(X, P, H, S, sigma, h, exclude_self)
    rel = np.abs(grad - fd) / (np.abs(fd) + 1e-8)
    return GradientReport(grad, fd, float(rel.max()))


def mi_lower_bound(Y, H, S, sigma, exclude_self=False):
    """Per-sample log((n-1)/n_i) - l_i; rows without positives report 0 and are flagged."""
    W = _weights(H, S)
    n = W.shape[0]
    off_diagonal = ~np.eye(n, dtype=bool)
    positives = np.sum((W > 0) & off_diagonal, axis=1)
    losses = row_losses(Y, H, S, sigma, exclude_self)
    vacuous = positives == 0
    values = np.zeros(n)
    active = ~vacuous
    values[active] = np.log((n - 1) / positives[active]) - losses[active]
    return MutualInfoBound(values=values, vacuous=vacuous)
