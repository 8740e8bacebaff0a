"""
Domain types shared by every module.

Matrix convention: samples are columns. A dataset holds X with shape (D, n),
a projection P has shape (D, d) and the embedding is Y = P^T X with shape (d, n).
Class labels are 1..C; ``UNLABELED`` (0) marks a sample without a label.
"""
import dataclasses
import enum
import hashlib
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import ConfigError, DimensionMismatch, InvalidDataset, NonFiniteInput

logger = logging.getLogger(__name__)

UNLABELED = 0


def _frozen(array, dtype=float):
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def make_rng(seed):
    return np.random.default_rng(seed)


def derive_seed(base, *keys):
    """Stable 63-bit seed for a sub-task (repeat, grid cell, ...)."""
    state = np.random.SeedSequence([int(base) & 0xFFFFFFFFFFFFFFFF, *[int(k) for k in keys]])
    return int(state.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


class SupervisionMode(str, enum.Enum):
    UNSUPERVISED = 'unsupervised'
    SUPERVISED = 'supervised'
    SEMI_SUPERVISED = 'semi_supervised'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace('-', '_')
        aliases = {'semi': 'semi_supervised', 'semisupervised': 'semi_supervised'}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ConfigError(f"unknown supervision mode {value!r}") from None


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    labels: np.ndarray
    n_classes: int
    name: str = 'dataset'
    image_shape: Optional[tuple] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise InvalidDataset(f"X must be a D x n matrix, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise NonFiniteInput(f"dataset {self.name!r} contains NaN or Inf")
        D, n = X.shape
        if n < 2 or D < 1:
            raise InvalidDataset(f"dataset {self.name!r} needs n >= 2 and D >= 1, got D={D}, n={n}")
        labels = np.zeros(n, dtype=np.int64) if self.labels is None else np.asarray(self.labels, dtype=np.int64)
        if labels.shape != (n,):
            raise InvalidDataset(f"expected {n} labels, got {labels.shape}")
        if self.n_classes < 1:
            raise InvalidDataset("n_classes must be >= 1")
        present = labels[labels != UNLABELED]
        if present.size and (present.min() < 1 or present.max() > self.n_classes):
            raise InvalidDataset(f"labels must lie in 1..{self.n_classes}")
        object.__setattr__(self, 'X', _frozen(X))
        object.__setattr__(self, 'labels', _frozen(labels, dtype=np.int64))

    @property
    def D(self):
        return self.X.shape[0]

    @property
    def n(self):
        return self.X.shape[1]

    @property
    def labeled(self):
        return self.labels != UNLABELED

    def subset(self, index, labels=None, name=None):
        index = np.asarray(index)
        return Dataset(
            X=self.X[:, index],
            labels=self.labels[index] if labels is None else labels,
            n_classes=self.n_classes,
            name=name or self.name,
            image_shape=self.image_shape,
        )

    def with_matrix(self, X, image_shape=None):
        return dataclasses.replace(self, X=X, image_shape=image_shape or self.image_shape)

    def fingerprint(self):
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(self.X).tobytes())
        digest.update(np.ascontiguousarray(self.labels).tobytes())
        digest.update(f"{self.X.shape}:{self.n_classes}".encode())
        return digest.hexdigest()


@dataclass(frozen=True)
class AdamParams:
    alpha: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


@dataclass(frozen=True)
class HyperParams:
    sigma: float = 1.0
    lambda_: float = 1.0
    k: int = 6
    c: Optional[int] = None
    d: int = 2
    adam: AdamParams = field(default_factory=AdamParams)
    tol_inner: float = 1e-3
    tol_outer: float = 1e-3
    max_inner: int = 500
    max_outer: int = 50
    seed: int = 0
    init: str = 'pca'
    exclude_self: bool = False
    adaptive_lambda: bool = False
    mask_incompatible: bool = True

    def __post_init__(self):
        a = self.adam
        if not (0 < a.beta1 < 1 and 0 < a.beta2 < 1 and a.epsilon > 0 and a.alpha > 0):
            raise ConfigError(f"invalid Adam parameters {a}")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        if self.lambda_ < 0:
            raise ConfigError("lambda must be nonnegative")
        if self.tol_inner <= 0 or self.tol_outer <= 0:
            raise ConfigError("tolerances must be positive")
        if self.max_inner < 0 or self.max_outer < 1:
            raise ConfigError("max_inner must be >= 0 and max_outer >= 1")
        if self.init not in ('pca', 'random'):
            raise ConfigError(f"unknown init {self.init!r}")

    def validate(self, n, D):
        if not 1 <= self.k <= n - 2:
            raise ConfigError(f"k={self.k} must satisfy 1 <= k <= n-2 (n={n})")
        if self.c is not None and not 1 <= self.c <= n:
            raise ConfigError(f"c={self.c} must satisfy 1 <= c <= n (n={n})")
        if not 1 <= self.d <= D:
            raise ConfigError(f"d={self.d} must satisfy 1 <= d <= D (D={D})")
        return self

    def for_mode(self, mode):
        if SupervisionMode.parse(mode) is SupervisionMode.SUPERVISED and self.lambda_ != 0:
            logger.warning("supervised mode forces lambda=0 (was %g)", self.lambda_)
            return dataclasses.replace(self, lambda_=0.0)
        return self

    def resolve(self, dataset):
        """Fill ``c`` from the class count when unset."""
        if self.c is None:
            return dataclasses.replace(self, c=dataset.n_classes)
        return self

    def as_dict(self):
        out = dataclasses.asdict(self)
        out['lambda'] = out.pop('lambda_')
        adam = out.pop('adam')
        out.update({f"adam.{key}": value for key, value in adam.items()})
        return out

    def to_text(self):
        return ''.join(f"{key}={value}\n" for key, value in sorted(self.as_dict().items()))

    @classmethod
    def from_text(cls, text):
        values = {}
        for line in text.splitlines():
            if line.strip():
                key, _, value = line.partition('=')
                values[key.strip()] = value.strip()
        try:
            return cls(
                sigma=float(values['sigma']),
                lambda_=float(values['lambda']),
                k=int(values['k']),
                c=None if values['c'] == 'None' else int(values['c']),
                d=int(values['d']),
                adam=AdamParams(
                    alpha=float(values['adam.alpha']),
                    beta1=float(values['adam.beta1']),
                    beta2=float(values['adam.beta2']),
                    epsilon=float(values['adam.epsilon']),
                ),
                tol_inner=float(values['tol_inner']),
                tol_outer=float(values['tol_outer']),
                max_inner=int(values['max_inner']),
                max_outer=int(values['max_outer']),
                seed=int(values['seed']),
                init=values['init'],
                exclude_self=values['exclude_self'] == 'True',
                adaptive_lambda=values['adaptive_lambda'] == 'True',
                mask_incompatible=values['mask_incompatible'] == 'True',
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"malformed hyper-parameter block: {exc}") from exc


@dataclass(frozen=True, eq=False)
class Projection:
    P: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        if P.ndim != 2:
            raise DimensionMismatch(f"P must be D x d, got shape {P.shape}")
        if not np.all(np.isfinite(P)):
            raise NonFiniteInput("projection has non-finite entries")
        object.__setattr__(self, 'P', _frozen(P))

    def __array__(self, dtype=None, copy=None):
        return self.P if dtype is None else self.P.astype(dtype)

    @property
    def d(self):
        return self.P.shape[1]


@dataclass(frozen=True, eq=False)
class Embedding:
    Y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'Y', _frozen(self.Y))

    def __array__(self, dtype=None, copy=None):
        return self.Y if dtype is None else self.Y.astype(dtype)


def normalize(dataset, scheme='none'):
    X = np.asarray(dataset.X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("cannot normalize non-finite data")
    if scheme == 'none':
        return dataset
    if scheme == 'unit_range':
        if X.min() >= 0 and X.max() <= 255 and np.all(X == np.round(X)):
            return dataset.with_matrix(X / 255.0)
        low = X.min(axis=1, keepdims=True)
        span = X.max(axis=1, keepdims=True) - low
        return dataset.with_matrix(np.where(span > 0, (X - low) / np.where(span > 0, span, 1.0), 0.0))
    if scheme == 'zscore':
        centered = X - X.mean(axis=1, keepdims=True)
        std = X.std(axis=1, keepdims=True)
        return dataset.with_matrix(np.where(std > 0, centered / np.where(std > 0, std, 1.0), centered))
    raise ConfigError(f"unknown normalization scheme {scheme!r}")


def project(X, P):
    X = np.asarray(X, dtype=float)
    P = np.asarray(P, dtype=float)
    if X.ndim != 2 or P.ndim != 2 or X.shape[0] != P.shape[0]:
        raise DimensionMismatch(f"cannot project X{X.shape} with P{P.shape}")
    return Embedding(P.T @ X)
