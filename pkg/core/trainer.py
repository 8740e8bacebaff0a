"""
Alternating minimisation over F, S and P.

Each outer iteration takes the spectral step for F, the closed-form step for
S, then runs Adam on the contrastive term for P from fresh moments. Both loops
stop when successive losses differ by at most their tolerance.
"""
import dataclasses
import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .domain import Projection, make_rng, project
from .exceptions import DegenerateRow, DescentViolation, NonFinite
from .graph import (
    SimilarityMatrix,
    connected_components,
    laplacian,
    pairwise_distances,
    update_similarity,
    update_spectral,
)
from .objective import infonce_loss, mi_lower_bound, total_loss, value_and_grad
from .supervision import build_indicator, check_mode

logger = logging.getLogger(__name__)

DESCENT_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def fresh(cls, shape):
        return cls(m=np.zeros(shape), v=np.zeros(shape), t=0)


def adam_step(state, g, params):
    """One Adam update; returns the new state and the increment to add to P."""
    adam = getattr(params, 'adam', params)
    g = np.asarray(g, dtype=float)
    t = state.t + 1
    m = adam.beta1 * state.m + (1 - adam.beta1) * g
    v = adam.beta2 * state.v + (1 - adam.beta2) * g**2
    m_hat = m / (1 - adam.beta1**t)
    v_hat = v / (1 - adam.beta2**t)
    return AdamState(m=m, v=v, t=t), -adam.alpha * m_hat / (np.sqrt(v_hat) + adam.epsilon)


def optimize_projection(X, P0, H, S, params):
    """Adam on the contrastive term; returns the lowest-loss P seen."""
    P = np.array(P0, dtype=float)
    loss, grad = value_and_grad(X, P, H, S, params.sigma, params.exclude_self)
    best_loss, best_P = loss, P.copy()
    state = AdamState.fresh(P.shape)

    for step in range(1, params.max_inner + 1):
        state, update = adam_step(state, grad, params)
        P = P + update
        try:
            new_loss, grad = value_and_grad(X, P, H, S, params.sigma, params.exclude_self)
        except NonFinite as exc:
            raise NonFinite(f"inner step {step}: {exc}") from exc
        if new_loss < best_loss:
            best_loss, best_P = new_loss, P.copy()
        done = abs(new_loss - loss) <= params.tol_inner
        loss = new_loss
        logger.debug("inner step %d: loss=%.6f", step, loss)
        if done:
            break

    return Projection(best_P), state.t, best_loss


def initial_projection(X, d, init='pca', seed=0):
    X = np.asarray(X, dtype=float)
    D = X.shape[0]
    if init == 'random':
        Q, _ = np.linalg.qr(make_rng(seed).standard_normal((D, d)))
        return Projection(Q)
    centered = X - X.mean(axis=1, keepdims=True)
    U, _, _ = np.linalg.svd(centered, full_matrices=True)
    P = U[:, :d]
    pivots = np.argmax(np.abs(P), axis=0)
    signs = np.sign(P[pivots, np.arange(d)])
    signs[signs == 0] = 1.0
    return Projection(P * signs)


def initial_similarity(X, H, k):
    """k-NN heat-kernel graph on X, restricted to label-compatible pairs."""
    X = np.asarray(X, dtype=float)
    dist = cdist(X.T, X.T, 'sqeuclidean')
    np.fill_diagonal(dist, np.inf)
    dist[np.asarray(H) == 0] = np.inf

    n = dist.shape[0]
    neighbours = []
    for i in range(n):
        m = int(np.isfinite(dist[i]).sum())
        if m == 0:
            raise DegenerateRow(f"row {i}: sample has no admissible neighbour")
        neighbours.append(np.argsort(dist[i], kind='stable')[:min(k, m)])

    bandwidth = float(np.mean([dist[i, idx[-1]] for i, idx in enumerate(neighbours)]))
    S = np.zeros((n, n))
    for i, idx in enumerate(neighbours):
        row = dist[i, idx]
        weights = np.exp(-(row - row.min()) / bandwidth) if bandwidth > 0 else np.ones(idx.size)
        S[i, idx] = weights / weights.sum()
    return SimilarityMatrix(S=S)


@dataclass(frozen=True, eq=False)
class FitReport:
    P: Projection
    S: SimilarityMatrix
    F: object
    Y: object
    loss_trace: list
    inner_steps: list
    components: int
    converged: bool
    wallclock: float
    params: object
    breakdown: object = None
    mi_bound: dict = field(default_factory=dict)

    @property
    def adam_steps(self):
        return int(sum(self.inner_steps))

    def as_dict(self):
        return {
            'converged': self.converged,
            'outer_iterations': len(self.loss_trace),
            'loss_trace': list(self.loss_trace),
            'inner_steps': list(self.inner_steps),
            'adam_steps': self.adam_steps,
            'components': self.components,
            'wallclock': self.wallclock,
            'gamma': self.S.gamma,
            'gamma_rows': {
                'min': float(np.min(self.S.gammas)),
                'max': float(np.max(self.S.gammas)),
            },
            'support': {
                'min': int(np.min(self.S.support)),
                'max': int(np.max(self.S.support)),
            },
            'loss': self.breakdown.as_dict() if self.breakdown else None,
            'mi_bound': self.mi_bound,
            'params': self.params.as_dict(),
            'D': int(self.P.P.shape[0]),
            'd': int(self.P.P.shape[1]),
        }


def _similarity_surrogate(d, S, gammas):
    S = np.asarray(S, dtype=float)
    linear = np.where(S > 0, d * np.where(S > 0, S, 0.0), 0.0).sum()
    return float(linear + np.sum(gammas * np.sum(S**2, axis=1)))


def _check_descent(stage, before, after):
    if after > before + DESCENT_SLACK:
        raise DescentViolation(f"{stage} step raised the objective from {before!r} to {after!r}")


def fit(dataset, mode, params, check_descent=False):
    started = time.perf_counter()
    mode = check_mode(dataset.labels, mode)
    params = params.for_mode(mode).resolve(dataset).validate(dataset.n, dataset.D)
    X = dataset.X
    H = build_indicator(dataset, mode)

    P = initial_projection(X, params.d, params.init, params.seed)
    S = initial_similarity(X, H, params.k)
    Y = project(X, P)
    F = None
    step_params = params
    loss_trace, inner_steps = [], []
    breakdown = None
    converged = False

    for outer in range(1, params.max_outer + 1):
        F_new = update_spectral(laplacian(S).L, params.c)
        if check_descent and F is not None:
            _check_descent(
                'spectral',
                total_loss(Y, H, S, F, step_params).total,
                total_loss(Y, H, S, F_new, step_params).total,
            )
        F = F_new

        S_new = update_similarity(Y, F, H, step_params)
        if check_descent:
            d = pairwise_distances(Y, F, H, step_params.sigma, step_params.lambda_, step_params.exclude_self)
            if step_params.mask_incompatible:
                d = np.where(np.asarray(H) == 0, np.inf, d)
            _check_descent(
                'similarity',
                _similarity_surrogate(d, S, S_new.gammas),
                _similarity_surrogate(d, S_new, S_new.gammas),
            )
        S = S_new

        if step_params.adaptive_lambda:
            found = connected_components(S)
            if found < params.c:
                step_params = dataclasses.replace(step_params, lambda_=step_params.lambda_ * 2)
            elif found > params.c:
                step_params = dataclasses.replace(step_params, lambda_=step_params.lambda_ / 2)

        start_loss = infonce_loss(Y, H, S, params.sigma, params.exclude_self)
        projection, steps, best_loss = optimize_projection(X, P.P, H, S, step_params)
        if check_descent:
            _check_descent('projection', start_loss, best_loss)
        P = projection
        Y = project(X, P)

        breakdown = total_loss(Y, H, S, F, step_params)
        loss_trace.append(breakdown.total)
        inner_steps.append(steps)
        logger.info(
            "outer %d: loss=%.6f contrastive=%.6f inner_steps=%d",
            outer, breakdown.total, breakdown.contrastive, steps,
        )
        if len(loss_trace) > 1 and abs(loss_trace[-1] - loss_trace[-2]) <= params.tol_outer:
            converged = True
            break

    components = connected_components(S)
    if components != params.c:
        logger.warning("graph has %d connected components, target was %d", components, params.c)
    return FitReport(
        P=P,
        S=S,
        F=F,
        Y=Y,
        loss_trace=loss_trace,
        inner_steps=inner_steps,
        components=components,
        converged=converged,
        wallclock=time.perf_counter() - started,
        params=step_params,
        breakdown=breakdown,
        mi_bound=mi_lower_bound(Y, H, S, params.sigma, params.exclude_self).summary(),
    )
