"""
Classification protocol in the embedded space.

Repeated seeded stratified splits; every repeat fits on the training part only,
projects both parts and scores a 1-NN classifier. ``recall_rate`` follows the
published formula, whose denominator is the predicted count per class (that is
macro precision, kept under the published name).
"""
import dataclasses
import hashlib
import itertools
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .domain import UNLABELED, SupervisionMode, derive_seed, make_rng, project
from .exceptions import ConfigError, EmptyTrainingSet, LengthMismatch, SplitInfeasible
from .trainer import fit

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplitSpec:
    train_per_class: int = 6
    repeats: int = 5
    seed: int = 0
    labeled_fraction: float = 0.5

    def __post_init__(self):
        if self.train_per_class < 1 or self.repeats < 1:
            raise ConfigError("train_per_class and repeats must be >= 1")
        if not 0 < self.labeled_fraction <= 1:
            raise ConfigError("labeled_fraction must lie in (0, 1]")

    def check(self, labels):
        classes, counts = np.unique(labels[labels != UNLABELED], return_counts=True)
        short = classes[counts <= self.train_per_class]
        if short.size:
            raise SplitInfeasible(
                f"classes {short.tolist()} have no test sample left with {self.train_per_class} training samples each"
            )
        return classes


@dataclass(frozen=True)
class EvalReport:
    accuracies: list
    recalls: list
    accuracy_mean: float
    accuracy_std: float
    recall_mean: float
    recall_std: float
    d: int
    unpredicted: list = field(default_factory=list)
    components: list = field(default_factory=list)
    converged: list = field(default_factory=list)

    @classmethod
    def aggregate(cls, d, repeats):
        accuracies = [r['accuracy'] for r in repeats]
        recalls = [r['recall'] for r in repeats]
        return cls(
            accuracies=accuracies,
            recalls=recalls,
            accuracy_mean=float(np.mean(accuracies)),
            accuracy_std=float(np.std(accuracies)),
            recall_mean=float(np.mean(recalls)),
            recall_std=float(np.std(recalls)),
            d=d,
            unpredicted=[r['unpredicted'] for r in repeats],
            components=[r['components'] for r in repeats],
            converged=[r['converged'] for r in repeats],
        )

    def as_dict(self):
        return {'schema': 'clfefa.eval/1', **dataclasses.asdict(self)}

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data.pop('schema', None)
        return cls(**data)

    def rows(self):
        for i, (acc, rec) in enumerate(zip(self.accuracies, self.recalls)):
            yield {
                'repeat': i,
                'accuracy': acc,
                'recall': rec,
                'components': self.components[i] if self.components else '',
                'converged': self.converged[i] if self.converged else '',
            }


def knn_predict(train_Y, train_labels, query_Y, k=1):
    train_Y = np.asarray(train_Y, dtype=float)
    query_Y = np.asarray(query_Y, dtype=float)
    train_labels = np.asarray(train_labels)
    m = train_Y.shape[1]
    if m == 0 or m < k:
        raise EmptyTrainingSet(f"need at least {max(k, 1)} training samples, got {m}")
    if query_Y.shape[1] == 0:
        return np.zeros(0, dtype=train_labels.dtype)

    dist = cdist(query_Y.T, train_Y.T, 'sqeuclidean')
    if k == 1:
        return train_labels[np.argmin(dist, axis=1)]

    nearest = np.argsort(dist, axis=1, kind='stable')[:, :k]
    predictions = []
    for row in train_labels[nearest]:
        values, counts = np.unique(row, return_counts=True)
        tied = set(values[counts == counts.max()])
        # among tied labels the one owning the nearest neighbour wins
        predictions.append(next(label for label in row if label in tied))
    return np.asarray(predictions)


def _check_lengths(pred, truth):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.size == 0:
        raise LengthMismatch(f"predictions {pred.shape} and truth {truth.shape} must be equal and non-empty")
    return pred, truth


def accuracy(pred, truth):
    pred, truth = _check_lengths(pred, truth)
    return float(np.mean(pred == truth))


def unpredicted_classes(pred, C):
    pred = np.asarray(pred)
    return [c for c in range(1, C + 1) if not np.any(pred == c)]


def recall_rate(pred, truth, C):
    pred, truth = _check_lengths(pred, truth)
    total = 0.0
    for c in range(1, C + 1):
        predicted = np.sum(pred == c)
        if predicted:
            total += np.sum((pred == c) & (truth == c)) / predicted
    return float(total / C)


def stratified_split(labels, train_per_class, rng):
    """``train_per_class`` samples of every class for training, the other labeled samples for testing."""
    labels = np.asarray(labels)
    train = []
    for c in np.unique(labels[labels != UNLABELED]):
        members = np.flatnonzero(labels == c)
        train.extend(rng.permutation(members)[:train_per_class])
    train = np.sort(np.asarray(train, dtype=np.int64))
    test = np.setdiff1d(np.flatnonzero(labels != UNLABELED), train)
    return train, test


def _hide_labels(labels, train, fraction, rng):
    """Keep a per-class fraction of training labels, at least one per class."""
    kept = np.zeros(labels.size, dtype=np.int64)
    for c in np.unique(labels[train]):
        members = train[labels[train] == c]
        n_labeled = min(members.size, max(1, int(round(fraction * members.size))))
        chosen = rng.permutation(members)[:n_labeled]
        kept[chosen] = c
    return kept[train]


def _run_repeat(dataset, mode, params, split, repeat):
    rng = make_rng(derive_seed(split.seed, repeat))
    train, test = stratified_split(dataset.labels, split.train_per_class, rng)
    train_labels = dataset.labels[train]
    if mode is SupervisionMode.SEMI_SUPERVISED:
        train_labels = _hide_labels(dataset.labels, train, split.labeled_fraction, rng)
        if np.all(train_labels != UNLABELED):
            raise SplitInfeasible("semi-supervised split left no unlabeled training sample")

    training = dataset.subset(train, labels=train_labels, name=f"{dataset.name}/train{repeat}")
    report = fit(training, mode, dataclasses.replace(params, seed=derive_seed(params.seed, repeat)))

    voters = train_labels != UNLABELED if mode is SupervisionMode.SEMI_SUPERVISED else np.ones(train.size, bool)
    query = project(dataset.X[:, test], report.P).Y
    pred = knn_predict(report.Y.Y[:, voters], train_labels[voters], query)
    truth = dataset.labels[test]
    result = {
        'accuracy': accuracy(pred, truth),
        'recall': recall_rate(pred, truth, dataset.n_classes),
        'unpredicted': unpredicted_classes(pred, dataset.n_classes),
        'components': report.components,
        'converged': report.converged,
    }
    logger.info("repeat %d: accuracy=%.4f recall=%.4f", repeat, result['accuracy'], result['recall'])
    return result


def run_experiment(dataset, mode, params, split, workers=1):
    mode = SupervisionMode.parse(mode)
    split.check(dataset.labels)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            repeats = list(pool.map(lambda r: _run_repeat(dataset, mode, params, split, r), range(split.repeats)))
    else:
        repeats = [_run_repeat(dataset, mode, params, split, r) for r in range(split.repeats)]
    return EvalReport.aggregate(params.d, repeats)


@dataclass(frozen=True)
class GridCell:
    index: int
    sigma: float
    lambda_: float
    k: int
    d: int
    report: EvalReport = None
    best: bool = False
    best_in_config: bool = False

    def row(self):
        return {
            'cell': self.index,
            'sigma': self.sigma,
            'lambda': self.lambda_,
            'k': self.k,
            'd': self.d,
            'accuracy_mean': self.report.accuracy_mean,
            'accuracy_std': self.report.accuracy_std,
            'recall_mean': self.report.recall_mean,
            'recall_std': self.report.recall_std,
            'best': int(self.best),
            'best_in_config': int(self.best_in_config),
        }


def grid_cells(sigmas, lambdas, ks, ds, mode):
    if not (sigmas and lambdas and ks and ds):
        raise ConfigError("every grid list must be nonempty")
    if SupervisionMode.parse(mode) is SupervisionMode.SUPERVISED and list(lambdas) != [0.0]:
        logger.warning("supervised mode: lambda grid %s replaced by [0]", list(lambdas))
        lambdas = [0.0]
    return [
        GridCell(index=i, sigma=s, lambda_=lam, k=k, d=d)
        for i, (s, lam, k, d) in enumerate(itertools.product(sigmas, lambdas, ks, ds))
    ]


def cache_key(dataset, mode, params, split):
    payload = {
        'dataset': dataset.fingerprint(),
        'mode': SupervisionMode.parse(mode).value,
        'params': params.as_dict(),
        'split': dataclasses.asdict(split),
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def run_grid(dataset, mode, params, split, cells, workers=1, cache=None):
    """Evaluate every cell with seed ``params.seed + cell index``; flag the winners.

    ``cache`` is any object with ``get(key)`` and ``put(key, report)``; it is only
    touched from the calling thread.
    """
    mode = SupervisionMode.parse(mode)
    split.check(dataset.labels)

    def cell_params(cell):
        return dataclasses.replace(
            params, sigma=cell.sigma, lambda_=cell.lambda_, k=cell.k, d=cell.d, seed=params.seed + cell.index
        )

    reports, pending = {}, []
    for cell in cells:
        key = cache_key(dataset, mode, cell_params(cell), split)
        hit = cache.get(key) if cache is not None else None
        if hit is not None:
            reports[cell.index] = hit
        else:
            pending.append((cell, key))

    def evaluate(item):
        cell, _ = item
        logger.info("grid cell %d: sigma=%g lambda=%g k=%d d=%d", cell.index, cell.sigma, cell.lambda_, cell.k, cell.d)
        return run_experiment(dataset, mode, cell_params(cell), split)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for (cell, key), report in zip(pending, pool.map(evaluate, pending)):
            reports[cell.index] = report
            if cache is not None:
                cache.put(key, report)

    scored = [dataclasses.replace(cell, report=reports[cell.index]) for cell in cells]
    best = max(scored, key=lambda c: (c.report.accuracy_mean, -c.index))
    config_best = {}
    for cell in scored:
        config = (cell.sigma, cell.lambda_, cell.k)
        current = config_best.get(config)
        if current is None or cell.report.accuracy_mean > current.report.accuracy_mean:
            config_best[config] = cell
    winners = {cell.index for cell in config_best.values()}
    return [
        dataclasses.replace(cell, best=cell.index == best.index, best_in_config=cell.index in winners)
        for cell in scored
    ]
