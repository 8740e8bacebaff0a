"""
Django settings for the clfefa project.

The project has no web surface: Django provides the settings layer, the ORM
run ledger and the management commands (`manage.py fit|evaluate|grid|transform`).

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.environ.get('DJANGO_SECRET_KEY', 'django-insecure-clfefa-local-only')

DEBUG = os.environ.get('DJANGO_DEBUG', '0') == '1'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'core',
]

MIDDLEWARE = []


# Database
# https://docs.djangoproject.com/en/4.2/ref/settings/#databases

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': os.environ.get('CLFEFA_DB', str(BASE_DIR / 'db.sqlite3')),
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'core': {
            'handlers': ['console'],
            'level': os.environ.get('CLFEFA_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}


# Feature extraction defaults (every run-config key falls back to these)

CLFEFA = {
    'sigma': float(os.environ.get('CLFEFA_SIGMA', '1.0')),
    'lambda': float(os.environ.get('CLFEFA_LAMBDA', '1.0')),
    'k': int(os.environ.get('CLFEFA_K', '6')),
    'c': int(os.environ.get('CLFEFA_C', '0')),  # 0 -> number of classes
    'd': int(os.environ.get('CLFEFA_D', '2')),
    'adam.alpha': 0.001,
    'adam.beta1': 0.9,
    'adam.beta2': 0.999,
    'adam.epsilon': 1e-8,
    'tol_inner': 1e-3,
    'tol_outer': 1e-3,
    'max_inner': int(os.environ.get('CLFEFA_MAX_INNER', '500')),
    'max_outer': int(os.environ.get('CLFEFA_MAX_OUTER', '50')),
    'init': 'pca',
    'exclude_self': False,
    'adaptive_lambda': False,
    'mask_incompatible': True,
    'seed': int(os.environ.get('CLFEFA_SEED', '0')),
    'mode': 'unsupervised',
    'dataset.source': 'blobs',
    'dataset.images': '',
    'dataset.labels': '',
    'dataset.path': '',
    'dataset.label_column': '',
    'dataset.normalize': 'auto',
    'dataset.n_keep': 0,  # 0 -> keep everything
    'dataset.side': 0,  # 0 -> keep the native image side
    'blobs.n_per_class': 30,
    'blobs.classes': 3,
    'blobs.dim': 5,
    'blobs.separation': 10.0,
    'blobs.noise_std': 0.5,
    'split.train_per_class': 6,
    'split.repeats': 5,
    'split.labeled_fraction': 0.5,
    'grid.sigma': '0.01,0.1,1,10,100,1000',
    'grid.lambda': '0.0001,0.01,1,100,10000',
    'grid.k': '2,6,10',
    'grid.d': '',  # empty -> the single value of `d`
    'workers': int(os.environ.get('CLFEFA_WORKERS', '1')),
}
