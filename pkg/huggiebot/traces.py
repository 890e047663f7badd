"""Per-tick trace records: emission, replay, comparison and validation.

A trace file holds one JSON object per line, one line per control tick, with
the keys of :data:`TRACE_FIELDS` in that order.
"""

import io
import json
from typing import Any, NamedTuple, Optional

from huggiebot import conf
from huggiebot.arms import JOINT_COUNT, MONITORED_POSITIONS
from huggiebot.fsm import EventKind, HugPhase, check_phase_sequence
from huggiebot.utils import (TraceFormatError, round_significant,
                             round_significant_all)

TRACE_FIELDS = ("t", "phase", "angles", "torques", "pressure", "distance",
                "events")


class TraceRecord(NamedTuple):
    t: float
    phase: str
    angles: tuple
    torques: tuple
    pressure: Optional[float]
    distance: Optional[float]
    events: tuple = ()

    @classmethod
    def from_tick(cls, t, phase, arm_state, pressure, distance, events,
                  digits=None):
        """Build a record, rounding every number to ``digits`` significant
        digits so that it survives a write/read cycle unchanged.
        """
        digits = digits or conf.TRACE_SIGNIFICANT_DIGITS

        def rnd(value):
            return round_significant(value, digits)

        numbers = round_significant_all(
            [t, *arm_state.angles.tolist(),
             *arm_state.torques[MONITORED_POSITIONS].tolist()], digits)
        return cls(
            t=numbers[0],
            phase=phase.value,
            angles=numbers[1:JOINT_COUNT + 1],
            torques=numbers[JOINT_COUNT + 1:],
            pressure=rnd(pressure),
            distance=rnd(distance),
            events=tuple(
                (e.kind.value,
                 rnd(e.payload) if isinstance(e.payload, float) else e.payload)
                for e in events),
        )

    def event_kinds(self):
        return [kind for kind, _ in self.events]

    def to_json(self):
        data = self._asdict()
        data["events"] = [list(e) for e in self.events]
        return json.dumps(data, separators=(",", ":"), allow_nan=False)

    @classmethod
    def from_json(cls, line, lineno=0):
        try:
            data = json.loads(line)
        except ValueError as e:
            raise TraceFormatError(f"not a JSON record: {e}", lineno)
        if not isinstance(data, dict) or tuple(data) != TRACE_FIELDS:
            raise TraceFormatError(
                f"record keys must be {', '.join(TRACE_FIELDS)}", lineno)
        try:
            record = cls(
                t=float(data["t"]),
                phase=HugPhase(data["phase"]).value,
                angles=tuple(float(a) for a in data["angles"]),
                torques=tuple(float(q) for q in data["torques"]),
                pressure=(None if data["pressure"] is None
                          else float(data["pressure"])),
                distance=(None if data["distance"] is None
                          else float(data["distance"])),
                events=tuple((EventKind(kind).value, payload)
                             for kind, payload in data["events"]),
            )
        except (TypeError, ValueError) as e:
            raise TraceFormatError(f"bad field value: {e}", lineno)
        if len(record.angles) != JOINT_COUNT or len(record.torques) != 4:
            raise TraceFormatError(
                f"expected {JOINT_COUNT} angles and 4 torques", lineno)
        return record


# {{{ files

def write_trace(records, fp):
    for record in records:
        fp.write(record.to_json())
        fp.write("\n")


def emit_trace(records):
    buffer = io.StringIO()
    write_trace(records, buffer)
    return buffer.getvalue()


def replay_trace(source):
    """Read a trace from a path, an open text file or a string of lines.

    :raises TraceFormatError: naming the line of the first malformed record.
    """
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    elif "\n" in str(source):
        lines = str(source).splitlines()
    else:
        with open(source) as fp:
            lines = fp.read().splitlines()
    return [TraceRecord.from_json(line, lineno)
            for lineno, line in enumerate(lines, start=1) if line.strip()]

# }}}


class TraceDivergence(NamedTuple):
    index: int
    field: str
    left: Any
    right: Any

    def __str__(self):
        return (f"first divergence at record {self.index}, field "
                f"'{self.field}': {self.left!r} != {self.right!r}")


def diff_traces(a, b):
    """Return the first :class:`TraceDivergence` of two record sequences, or
    ``None`` when they are equal. A missing record diverges on field
    ``"length"``.
    """
    for index, (left, right) in enumerate(zip(a, b)):
        if left == right:
            continue
        for field in TRACE_FIELDS:
            if getattr(left, field) != getattr(right, field):
                return TraceDivergence(index, field, getattr(left, field),
                                       getattr(right, field))
    if len(a) != len(b):
        return TraceDivergence(min(len(a), len(b)), "length", len(a), len(b))
    return None


def trace_control_rate(records):
    """The control rate implied by the spacing of the first two records, or
    ``None`` when the trace is too short to tell.
    """
    if len(records) < 2:
        return None
    step = records[1].t - records[0].t
    return 1.0 / step if step > 0 else None


def validate_trace(records, control_rate):
    """List the invariant violations in a trace: tick spacing, illegal phase
    changes, and hug event order (HugStarted, at most one ReleaseTriggered,
    then HugEnded).
    """
    violations = []
    period = 1.0 / control_rate
    for i in range(1, len(records)):
        step = records[i].t - records[i - 1].t
        if abs(step - period) > 1e-6 * max(1.0, records[i].t):
            violations.append(
                f"record {i}: t advanced by {step!r}, expected {period!r}")

    phases = [HugPhase(r.phase) for r in records]
    for index, before, after in check_phase_sequence(phases):
        violations.append(
            f"record {index}: illegal phase change {before.value} -> {after.value}")

    in_hug = False
    released = False
    for i, record in enumerate(records):
        for kind in record.event_kinds():
            if kind == EventKind.HUG_STARTED.value:
                if in_hug:
                    violations.append(f"record {i}: HugStarted during a hug")
                in_hug, released = True, False
            elif kind == EventKind.RELEASE_TRIGGERED.value:
                if not in_hug:
                    violations.append(f"record {i}: ReleaseTriggered outside a hug")
                elif released:
                    violations.append(f"record {i}: second ReleaseTriggered")
                released = True
            elif kind == EventKind.HUG_ENDED.value:
                if not in_hug:
                    violations.append(f"record {i}: HugEnded outside a hug")
                elif not released:
                    violations.append(
                        f"record {i}: HugEnded without ReleaseTriggered")
                in_hug, released = False, False
    return violations
