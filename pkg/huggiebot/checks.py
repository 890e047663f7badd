import dataclasses

from django.conf import settings
from django.core import checks

from huggiebot.config import (CONFIG_FIELDS, coerce_config_value,
                              default_config, validate_config)
from huggiebot.utils import (GENERIC_ERROR_PATTERN, INSTANCE_ERROR_PATTERN,
                             HuggieBotCriticalCheckMessage)

HUGGIEBOT_CONFIG = "HUGGIEBOT_CONFIG"

HUG_CONFIG = "hug_config"
TRACE_SIGNIFICANT_DIGITS = "trace_significant_digits"
GRID_WORKERS = "grid_workers"

KNOWN_KEYS = (HUG_CONFIG, TRACE_SIGNIFICANT_DIGITS, GRID_WORKERS)


def register_huggiebot_settings_checks():
    checks.register(check_settings, "huggiebot_checks")


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _check_hug_config(hug_config):
    errors = []
    location = f"'{HUG_CONFIG}' in '{HUGGIEBOT_CONFIG}'"
    if not isinstance(hug_config, dict):
        errors.append(HuggieBotCriticalCheckMessage(
            msg=INSTANCE_ERROR_PATTERN % {"location": location, "types": "dict"},
            id="huggiebot-hug_config.E001"
        ))
        return errors

    overrides = {}
    for key, value in hug_config.items():
        if key not in CONFIG_FIELDS:
            errors.append(HuggieBotCriticalCheckMessage(
                msg=f"'{key}' in {location} is not a controller setting. "
                    f"Valid keys are: {', '.join(CONFIG_FIELDS)}",
                id="huggiebot-hug_config.E002"
            ))
            continue
        if not (isinstance(value, (str, int, float))
                and not isinstance(value, bool)):
            errors.append(HuggieBotCriticalCheckMessage(
                msg=(INSTANCE_ERROR_PATTERN
                     % {"location": f"'{key}' in {location}",
                        "types": "str, int or float"}),
                id="huggiebot-hug_config.E003"
            ))
            continue
        try:
            # numbers and strings as written in config files are both fine
            overrides[key] = coerce_config_value(key, str(value))
        except ValueError as e:
            errors.append(HuggieBotCriticalCheckMessage(
                msg=GENERIC_ERROR_PATTERN % {
                    "location": f"'{key}' in {location}",
                    "error_type": type(e).__name__,
                    "error_str": str(e)},
                id="huggiebot-hug_config.E004"
            ))

    if errors:
        return errors
    return validate_config(dataclasses.replace(default_config(), **overrides))


def check_settings(app_configs, **kwargs):
    errors = []

    conf = getattr(settings, HUGGIEBOT_CONFIG, None)
    if conf is None:
        return errors

    if not isinstance(conf, dict):
        errors.append(HuggieBotCriticalCheckMessage(
            msg=(INSTANCE_ERROR_PATTERN
                 % {"location": HUGGIEBOT_CONFIG, "types": "dict"}),
            id="huggiebot.E001"
        ))
        return errors

    for key in conf:
        if key not in KNOWN_KEYS:
            errors.append(checks.Warning(
                msg=f"Unknown key '{key}' in '{HUGGIEBOT_CONFIG}' will be ignored.",
                id="huggiebot.W001"
            ))

    hug_config = conf.get(HUG_CONFIG, None)
    if hug_config is not None:
        errors.extend(_check_hug_config(hug_config))

    digits = conf.get(TRACE_SIGNIFICANT_DIGITS, None)
    if digits is not None:
        if not _is_int(digits):
            errors.append(HuggieBotCriticalCheckMessage(
                msg=(INSTANCE_ERROR_PATTERN
                     % {"location": f"'{TRACE_SIGNIFICANT_DIGITS}' in "
                                    f"'{HUGGIEBOT_CONFIG}'",
                        "types": "int"}),
                id="huggiebot-trace_significant_digits.E001"
            ))
        elif not 1 <= digits <= 17:
            errors.append(HuggieBotCriticalCheckMessage(
                msg=f"'{TRACE_SIGNIFICANT_DIGITS}' in '{HUGGIEBOT_CONFIG}' "
                    f"must be between 1 and 17, while got '{digits}'.",
                id="huggiebot-trace_significant_digits.E002"
            ))

    workers = conf.get(GRID_WORKERS, None)
    if workers is not None:
        if not _is_int(workers):
            errors.append(HuggieBotCriticalCheckMessage(
                msg=(INSTANCE_ERROR_PATTERN
                     % {"location": f"'{GRID_WORKERS}' in '{HUGGIEBOT_CONFIG}'",
                        "types": "int"}),
                id="huggiebot-grid_workers.E001"
            ))
        elif workers < 1:
            errors.append(HuggieBotCriticalCheckMessage(
                msg=f"'{GRID_WORKERS}' in '{HUGGIEBOT_CONFIG}' must be at "
                    f"least 1, while got '{workers}'.",
                id="huggiebot-grid_workers.E002"
            ))

    return errors
