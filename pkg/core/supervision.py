"""
Label-compatibility mask shared by the three supervision modes.

H_ij is 0 only when both samples carry labels and the labels differ.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .domain import UNLABELED, SupervisionMode
from .exceptions import ModeLabelMismatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class IndicatorMatrix:
    H: np.ndarray

    def __post_init__(self):
        H = np.array(self.H, dtype=float)
        H.setflags(write=False)
        object.__setattr__(self, 'H', H)

    def __array__(self, dtype=None, copy=None):
        return self.H if dtype is None else self.H.astype(dtype)

    @property
    def n(self):
        return self.H.shape[0]


def check_mode(labels, mode):
    mode = SupervisionMode.parse(mode)
    labeled = np.asarray(labels) != UNLABELED
    if mode is SupervisionMode.SUPERVISED and not labeled.all():
        raise ModeLabelMismatch(f"supervised mode needs every sample labeled ({(~labeled).sum()} unlabeled)")
    if mode is SupervisionMode.SEMI_SUPERVISED and (labeled.all() or not labeled.any()):
        raise ModeLabelMismatch("semi-supervised mode needs both labeled and unlabeled samples")
    return mode


def build_indicator(dataset, mode):
    mode = check_mode(dataset.labels, mode)
    n = dataset.n
    if mode is SupervisionMode.UNSUPERVISED:
        return IndicatorMatrix(np.ones((n, n)))

    labels = np.asarray(dataset.labels)
    labeled = labels != UNLABELED
    both = np.outer(labeled, labeled)
    differ = labels[:, None] != labels[None, :]
    H = np.where(both & differ, 0.0, 1.0)
    logger.debug("indicator built: mode=%s, n=%d, incompatible pairs=%d", mode.value, n, int((H == 0).sum()))
    return IndicatorMatrix(H)
