"""
Run configuration: a ``key=value`` text file layered over ``settings.CLFEFA``.
"""
import logging
from dataclasses import dataclass
from pathlib import Path

from django.conf import settings

from .domain import AdamParams, HyperParams, SupervisionMode, normalize
from .evaluation import SplitSpec
from .exceptions import ConfigError
from .ingest import load_csv, load_idx, make_blobs, subsample_and_rescale

logger = logging.getLogger(__name__)

_TRUE = {'1', 'true', 'yes', 'on'}
_FALSE = {'0', 'false', 'no', 'off'}


def _defaults():
    return {'out': 'runs/latest', **settings.CLFEFA}


def _convert(key, value, default):
    value = value.strip()
    try:
        if isinstance(default, bool):
            lowered = value.lower()
            if lowered not in _TRUE | _FALSE:
                raise ValueError(value)
            return lowered in _TRUE
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {value!r}") from None
    return value


def parse_config(text):
    defaults = _defaults()
    values = dict(defaults)
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {number}: expected key=value, got {line!r}")
        if key not in defaults:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _convert(key, value, defaults[key])
    return values


def _float_list(key, text):
    try:
        return [float(item) for item in str(text).split(',') if item.strip()]
    except ValueError:
        raise ConfigError(f"config key {key!r}: expected a comma separated list of numbers") from None


@dataclass(frozen=True)
class RunConfig:
    values: dict
    text: str = ''

    @classmethod
    def from_text(cls, text, seed=None, out=None):
        values = parse_config(text)
        if seed is not None:
            values['seed'] = int(seed)
        if out is not None:
            values['out'] = str(out)
        return cls(values=values, text=text)

    @classmethod
    def from_file(cls, path, seed=None, out=None):
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text, seed=seed, out=out)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def seed(self):
        return self.values['seed']

    @property
    def out(self):
        return Path(self.values['out'])

    @property
    def workers(self):
        return max(1, self.values['workers'])

    @property
    def mode(self):
        return SupervisionMode.parse(self.values['mode'])

    @property
    def params(self):
        v = self.values
        return HyperParams(
            sigma=v['sigma'],
            lambda_=v['lambda'],
            k=v['k'],
            c=v['c'] or None,
            d=v['d'],
            adam=AdamParams(
                alpha=v['adam.alpha'],
                beta1=v['adam.beta1'],
                beta2=v['adam.beta2'],
                epsilon=v['adam.epsilon'],
            ),
            tol_inner=v['tol_inner'],
            tol_outer=v['tol_outer'],
            max_inner=v['max_inner'],
            max_outer=v['max_outer'],
            seed=v['seed'],
            init=v['init'],
            exclude_self=v['exclude_self'],
            adaptive_lambda=v['adaptive_lambda'],
            mask_incompatible=v['mask_incompatible'],
        )

    @property
    def split(self):
        return SplitSpec(
            train_per_class=self.values['split.train_per_class'],
            repeats=self.values['split.repeats'],
            seed=self.seed,
            labeled_fraction=self.values['split.labeled_fraction'],
        )

    @property
    def grids(self):
        ds = [int(d) for d in _float_list('grid.d', self.values['grid.d'])] or [self.values['d']]
        return {
            'sigma': _float_list('grid.sigma', self.values['grid.sigma']),
            'lambda': _float_list('grid.lambda', self.values['grid.lambda']),
            'k': [int(k) for k in _float_list('grid.k', self.values['grid.k'])],
            'd': ds,
        }

    def load_dataset(self):
        v = self.values
        source = v['dataset.source']
        if source == 'blobs':
            dataset = make_blobs(
                v['blobs.n_per_class'], v['blobs.classes'], v['blobs.dim'],
                v['blobs.separation'], v['blobs.noise_std'], self.seed,
            )
        elif source == 'idx':
            if not v['dataset.images'] or not v['dataset.labels']:
                raise ConfigError("dataset.source=idx needs dataset.images and dataset.labels")
            dataset = load_idx(v['dataset.images'], v['dataset.labels'])
        elif source == 'csv':
            if not v['dataset.path']:
                raise ConfigError("dataset.source=csv needs dataset.path")
            dataset = load_csv(v['dataset.path'], v['dataset.label_column'] or None)
        else:
            raise ConfigError(f"config key 'dataset.source': unknown source {source!r}")

        for key in ('dataset.n_keep', 'dataset.side'):
            if v[key] < 0:
                raise ConfigError(f"config key {key!r}: must be >= 0, got {v[key]}")
        if v['dataset.n_keep'] or v['dataset.side']:
            side = v['dataset.side'] or (dataset.image_shape or (int(round(dataset.D ** 0.5)),))[0]
            dataset = subsample_and_rescale(dataset, v['dataset.n_keep'] or dataset.n, side, self.seed)

        scheme = v['dataset.normalize']
        if scheme == 'auto':
            # IDX pixels are already divided by 255 on load
            scheme = 'zscore' if source == 'csv' else 'none'
        logger.info("dataset %s: D=%d n=%d classes=%d normalize=%s", dataset.name, dataset.D, dataset.n,
                    dataset.n_classes, scheme)
        return normalize(dataset, scheme)
