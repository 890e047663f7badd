import functools
import logging
import math

from django.core.checks import Critical
from django.core.exceptions import ImproperlyConfigured

logger = logging.getLogger('django-huggiebot')


class HuggieBotCriticalCheckMessage(Critical):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.obj = self.obj or ImproperlyConfigured.__name__


INSTANCE_ERROR_PATTERN = "%(location)s must be an instance of %(types)s."
GENERIC_ERROR_PATTERN = "Error in %(location)s: %(error_type)s: %(error_str)s"
INVARIANT_ERROR_PATTERN = "%(invariant)s: %(detail)s"
PARSE_ERROR_PATTERN = "line %(lineno)d: %(reason)s"


# {{{ exceptions

class ConfigParseError(ValueError):
    """Raised for a key/value document that cannot be read. ``lineno`` and
    ``key`` point at the offending line (``key`` is ``None`` when the line
    has none).
    """
    def __init__(self, reason, lineno, key=None):
        self.lineno = lineno
        self.key = key
        super().__init__(PARSE_ERROR_PATTERN % {"lineno": lineno, "reason": reason})


class InvalidHugConfig(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(e.msg for e in self.errors))


class FrameError(ValueError):
    def __init__(self, text, reason="malformed chamber frame"):
        self.text = text
        super().__init__(f"{reason}: {text!r}")


class OutOfOrderFrame(FrameError):
    pass


class BaselineError(ValueError):
    pass


class TraceFormatError(ValueError):
    def __init__(self, reason, lineno):
        self.lineno = lineno
        super().__init__(PARSE_ERROR_PATTERN % {"lineno": lineno, "reason": reason})

# }}}


# {{{ flat key = value documents

def parse_key_values(text):
    """Split a flat ``key = value`` document into ``(lineno, key, value)``
    triples, in document order.

    ``#`` starts a comment, either on its own line or after a value. Blank
    lines are skipped. A repeated key is an error, so a typo'd override can
    not be shadowed by a later line.
    """
    entries = []
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigParseError("missing key", lineno)
        if key in seen:
            raise ConfigParseError(
                f"duplicate key '{key}' (first set on line {seen[key]})",
                lineno, key)
        seen[key] = lineno
        entries.append((lineno, key, value))
    return entries


_TRUE_STRINGS = ("true", "yes", "on", "1")
_FALSE_STRINGS = ("false", "no", "off", "0")


def parse_bool(value):
    lowered = str(value).strip().lower()
    if lowered in _TRUE_STRINGS:
        return True
    if lowered in _FALSE_STRINGS:
        return False
    raise ValueError(f"'{value}' is not a boolean")


def parse_finite_float(value):
    result = float(value)
    if not math.isfinite(result):
        raise ValueError(f"'{value}' is not a finite number")
    return result


def parse_int(value):
    # "20.0" is accepted, "20.5" is not
    result = float(value)
    if not result.is_integer():
        raise ValueError(f"'{value}' is not an integer")
    return int(result)


def parse_optional_float(value):
    if value.strip().lower() in ("", "none"):
        return None
    return parse_finite_float(value)


def parse_profile(value):
    """Parse ``"0:4.0, 2.5:2.0"`` into ``((0.0, 4.0), (2.5, 2.0))``."""
    points = []
    for item in value.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" not in item:
            raise ValueError(f"profile point '{item}' must look like 't:value'")
        t, v = item.split(":", 1)
        points.append((parse_finite_float(t), parse_finite_float(v)))
    return tuple(points)


def format_profile(points):
    return ", ".join(f"{t!r}:{v!r}" for t, v in points)

# }}}


def round_significant(value, digits=9):
    """Round ``value`` to ``digits`` significant digits, keeping ``None``."""
    if value is None:
        return None
    return float(f"{value:.{digits}g}")


@functools.lru_cache(maxsize=None)
def _significant_template(count, digits):
    return ",".join([f"%.{digits}g"] * count)


def round_significant_all(values, digits=9):
    """:func:`round_significant` over a sequence of numbers, formatted in one
    pass. ``None`` is not allowed here.
    """
    values = tuple(values)
    if not values:
        return ()
    text = _significant_template(len(values), digits) % values
    return tuple(map(float, text.split(",")))
