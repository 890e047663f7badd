"""Controller configuration and the three experimental mode flags.

.. autoclass:: HugConfig
.. autoclass:: ModeFlags
"""

import dataclasses
import itertools

from django.core import checks

from huggiebot import defaults
from huggiebot.utils import (INVARIANT_ERROR_PATTERN, ConfigParseError,
                             InvalidHugConfig, parse_finite_float, parse_int,
                             parse_key_values)


@dataclasses.dataclass(frozen=True)
class HugConfig:
    """Every threshold and rate the controller uses. Torques in Nm, pressures
    in Pa, rates in Hz, lengths in m, angles in degrees, durations in s,
    angular velocities in rad/s.
    """
    shoulder_torque_stop: float = defaults.SHOULDER_TORQUE_STOP
    elbow_torque_stop: float = defaults.ELBOW_TORQUE_STOP
    release_torque: float = defaults.RELEASE_TORQUE
    contact_start_delta: float = defaults.CONTACT_START_DELTA
    contact_end_delta: float = defaults.CONTACT_END_DELTA
    baseline_sample_count: int = defaults.BASELINE_SAMPLE_COUNT
    haptic_rate: float = defaults.HAPTIC_RATE
    camera_rate: float = defaults.CAMERA_RATE
    initiate_distance: float = defaults.INITIATE_DISTANCE
    fixed_close_angle: float = defaults.FIXED_CLOSE_ANGLE
    timed_release_delay: float = defaults.TIMED_RELEASE_DELAY
    approach_window_len: int = defaults.APPROACH_WINDOW_LEN
    approach_epsilon: float = defaults.APPROACH_EPSILON
    joint_speed: float = defaults.JOINT_SPEED
    control_rate: float = defaults.CONTROL_RATE
    sizing_goal_angle: float = defaults.SIZING_GOAL_ANGLE
    start_close_angle: float = defaults.START_CLOSE_ANGLE
    pid_kp: float = defaults.PID_KP
    pid_ki: float = defaults.PID_KI
    pid_kd: float = defaults.PID_KD
    pid_integral_limit: float = defaults.PID_INTEGRAL_LIMIT
    invite_text: str = defaults.INVITE_TEXT

    @property
    def dt(self):
        return 1.0 / self.control_rate


CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(HugConfig)}

_INT_FIELDS = ("baseline_sample_count", "approach_window_len")
_STR_FIELDS = ("invite_text",)

_POSITIVE_FIELDS = (
    "shoulder_torque_stop", "elbow_torque_stop", "release_torque",
    "contact_end_delta", "baseline_sample_count", "haptic_rate", "camera_rate",
    "initiate_distance", "timed_release_delay", "approach_window_len",
    "approach_epsilon", "joint_speed", "control_rate", "pid_integral_limit",
)

_NON_NEGATIVE_FIELDS = ("pid_kp", "pid_ki", "pid_kd", "start_close_angle")


@dataclasses.dataclass(frozen=True)
class ModeFlags:
    vision: bool = True
    sizing: bool = True
    haptic_release: bool = True

    @property
    def index(self):
        return 4 * self.vision + 2 * self.sizing + self.haptic_release

    @property
    def code(self):
        """Condition label, e.g. ``"VsR"``: uppercase letters are the factors
        that are on.
        """
        return "".join(
            letter.upper() if on else letter.lower()
            for letter, on in zip("VSR", (self.vision, self.sizing,
                                          self.haptic_release)))

    @classmethod
    def from_code(cls, code):
        if len(code) != 3 or code.upper() != "VSR":
            raise ValueError(f"'{code}' is not a condition code like 'VsR'")
        return cls(*(c.isupper() for c in code))

    @classmethod
    def all(cls):
        return tuple(cls(*combo)
                     for combo in itertools.product((False, True), repeat=3))


def default_config():
    return HugConfig()


# {{{ validation

def _violation(invariant, detail, check_id):
    return checks.Error(
        INVARIANT_ERROR_PATTERN % {"invariant": invariant, "detail": detail},
        obj=HugConfig.__name__,
        id=check_id,
    )


def validate_config(cfg):
    """Check every :class:`HugConfig` invariant. Returns a list of
    :class:`django.core.checks.Error`, empty when the config is valid.
    """
    errors = []

    for name in _INT_FIELDS:
        value = getattr(cfg, name)
        if isinstance(value, bool) or not isinstance(value, int):
            errors.append(_violation(
                "counts must be integers", f"{name} = {value!r}",
                "huggiebot-config.E001"))

    for name in _POSITIVE_FIELDS:
        value = getattr(cfg, name)
        if not value > 0:
            errors.append(_violation(
                f"{name} must be positive", f"got {value!r}",
                "huggiebot-config.E002"))

    for name in _NON_NEGATIVE_FIELDS:
        value = getattr(cfg, name)
        if not value >= 0:
            errors.append(_violation(
                f"{name} must not be negative", f"got {value!r}",
                "huggiebot-config.E002"))

    if not cfg.contact_start_delta > cfg.contact_end_delta > 0:
        errors.append(_violation(
            "hysteresis must be open",
            f"contact_start_delta ({cfg.contact_start_delta}) must exceed "
            f"contact_end_delta ({cfg.contact_end_delta}), which must exceed 0",
            "huggiebot-config.E003"))

    if not (cfg.release_torque > cfg.shoulder_torque_stop
            and cfg.release_torque > cfg.elbow_torque_stop):
        errors.append(_violation(
            "release above stop thresholds",
            f"release_torque ({cfg.release_torque}) must exceed both "
            f"shoulder_torque_stop ({cfg.shoulder_torque_stop}) and "
            f"elbow_torque_stop ({cfg.elbow_torque_stop})",
            "huggiebot-config.E004"))

    for name in ("fixed_close_angle", "sizing_goal_angle"):
        value = getattr(cfg, name)
        if not 0 < value < 90:
            errors.append(_violation(
                f"{name} in (0°, 90°)", f"got {value!r}",
                "huggiebot-config.E005"))

    if not cfg.start_close_angle < min(cfg.fixed_close_angle,
                                       cfg.sizing_goal_angle):
        errors.append(_violation(
            "start pose short of the hug goals",
            f"start_close_angle ({cfg.start_close_angle}) must be below "
            f"fixed_close_angle ({cfg.fixed_close_angle}) and "
            f"sizing_goal_angle ({cfg.sizing_goal_angle})",
            "huggiebot-config.E008"))

    if isinstance(cfg.approach_window_len, int) and cfg.approach_window_len < 2:
        errors.append(_violation(
            "approach window holds two halves",
            f"approach_window_len = {cfg.approach_window_len}",
            "huggiebot-config.E006"))

    if not isinstance(cfg.invite_text, str) or not cfg.invite_text.strip():
        errors.append(_violation(
            "invite text must not be empty", f"got {cfg.invite_text!r}",
            "huggiebot-config.E007"))
    elif (cfg.invite_text != cfg.invite_text.strip()
          or "#" in cfg.invite_text
          or len(cfg.invite_text.splitlines()) != 1):
        # dump_config writes it raw
        errors.append(_violation(
            "invite text must fit on one config line",
            f"no '#', line break or surrounding blanks, got {cfg.invite_text!r}",
            "huggiebot-config.E007"))

    return errors


def ensure_valid(cfg):
    errors = validate_config(cfg)
    if errors:
        raise InvalidHugConfig(errors)
    return cfg


def replace_config(cfg, **overrides):
    return ensure_valid(dataclasses.replace(cfg, **overrides))

# }}}


# {{{ text format

def coerce_config_value(name, value):
    if name in _INT_FIELDS:
        return parse_int(value)
    if name in _STR_FIELDS:
        return value
    return parse_finite_float(value)


def config_overrides_from_entries(entries):
    """Turn ``(lineno, key, value)`` triples into HugConfig overrides. Every
    key must be a HugConfig field.
    """
    overrides = {}
    for lineno, key, value in entries:
        if key not in CONFIG_FIELDS:
            raise ConfigParseError(f"unknown key '{key}'", lineno, key)
        try:
            overrides[key] = coerce_config_value(key, value)
        except ValueError as e:
            raise ConfigParseError(
                f"invalid value for '{key}': {e}", lineno, key) from e
    return overrides


def load_config(text, base=None):
    """Read a flat ``key = value`` document. Keys not in the document keep
    their value from ``base`` (:func:`default_config` when omitted).

    :raises ConfigParseError: on unknown keys or unreadable lines.
    :raises InvalidHugConfig: when the result breaks an invariant.
    """
    base = base if base is not None else default_config()
    overrides = config_overrides_from_entries(parse_key_values(text))
    return replace_config(base, **overrides)


def dump_config(cfg):
    lines = []
    for name in CONFIG_FIELDS:
        value = getattr(cfg, name)
        lines.append(f"{name} = {value if isinstance(value, str) else repr(value)}")
    return "\n".join(lines) + "\n"

# }}}
