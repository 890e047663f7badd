"""
Django settings for the huggiebot demo project.

Run a scenario with::

    python manage.py huggiebot run demo/scenarios/cooperative.cfg
"""

from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = 'django-insecure-3v9(hug)k2#e_demo_only_s8w!m4z1q0r7t6y5u'

DEBUG = True

INSTALLED_APPS = [
    'huggiebot',
]

# The hug controller runs without a database.
DATABASES = {}

USE_TZ = True

HUGGIEBOT_CONFIG = {
    # Any HugConfig field may be overridden here, e.g. a gentler escape:
    # "hug_config": {"release_torque": 18.0},
    "hug_config": {},

    # Significant digits kept for every number in a trace record
    "trace_significant_digits": 9,

    # Processes used by "huggiebot grid"; 1 runs the conditions in turn
    "grid_workers": 4,
}

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '%(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'django-huggiebot': {
            'handlers': ['console'],
            'level': 'INFO',
        },
    },
}
