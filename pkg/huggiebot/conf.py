from django.conf import settings

from huggiebot import defaults
from huggiebot.config import (coerce_config_value, default_config,
                              replace_config)

"""
HUGGIEBOT_CONFIG = {
    "hug_config": {
        "shoulder_torque_stop": 10.0,
        "initiate_distance": 2.45,
        ...
    },
    "trace_significant_digits": 9,
    "grid_workers": 1,
}
"""


_APP_CONFIG = getattr(settings, "HUGGIEBOT_CONFIG", None) or {}

HUG_CONFIG_OVERRIDES = dict(_APP_CONFIG.get("hug_config", None) or {})

TRACE_SIGNIFICANT_DIGITS = _APP_CONFIG.get(
    "trace_significant_digits", defaults.TRACE_SIGNIFICANT_DIGITS)

GRID_WORKERS = _APP_CONFIG.get("grid_workers", defaults.GRID_WORKERS)


def get_site_config():
    """The controller config of this site: the built-in values with
    ``HUGGIEBOT_CONFIG["hug_config"]`` applied on top.
    """
    overrides = {key: coerce_config_value(key, str(value))
                 for key, value in HUG_CONFIG_OVERRIDES.items()}
    return replace_config(default_config(), **overrides)
