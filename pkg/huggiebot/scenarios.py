"""Scenario files, closed-loop runs and the condition grid.

A scenario file uses the flat ``key = value`` dialect of config files.
Bare keys are either scenario keys (:data:`SCENARIO_KEYS`) or
:class:`~huggiebot.config.HugConfig` fields. ``flags.*`` keys set the
:class:`~huggiebot.config.ModeFlags`, ``user.*`` keys the
:class:`~huggiebot.plant.UserModel` and ``plant.*`` keys the
:class:`~huggiebot.plant.PlantConfig`.
"""

import concurrent.futures
import dataclasses
from typing import NamedTuple, Optional

import numpy as np

from huggiebot import conf
from huggiebot.arms import closure_angles
from huggiebot.chest import ChestMonitor
from huggiebot.config import (CONFIG_FIELDS, HugConfig, ModeFlags,
                              config_overrides_from_entries, ensure_valid,
                              replace_config)
from huggiebot.fsm import (ControllerInputs, EventKind, FsmAux, HugPhase,
                           fsm_step)
from huggiebot.plant import (HOME_POSE, PLANT_FIELDS, GestureKind, PlantConfig,
                             PlantState, ReleaseGesture, UserModel,
                             measure_arm, plant_step)
from huggiebot.traces import TraceRecord
from huggiebot.utils import (ConfigParseError, logger, parse_bool,
                             parse_finite_float, parse_int, parse_key_values,
                             parse_optional_float, parse_profile)

SCENARIO_KEYS = ("name", "duration", "seed", "key_press_at", "estop_at",
                 "recalibrate_at")

INITIATED_BY_NONE = "none"

_TIME_TOLERANCE = 1e-9


@dataclasses.dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    flags: ModeFlags = ModeFlags()
    config: HugConfig = HugConfig()
    user: UserModel = UserModel()
    plant: PlantConfig = PlantConfig()
    duration: float = 30.0
    seed: int = 0
    key_press_at: Optional[float] = None
    estop_at: Optional[float] = None
    recalibrate_at: Optional[float] = None

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"scenario duration must be positive, "
                             f"got {self.duration}")
        ensure_valid(self.config)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


# {{{ scenario files

_USER_PARSERS = {
    "girth_contact_angle": ("user", parse_finite_float),
    "torso_stiffness": ("user", parse_finite_float),
    "height": ("user", parse_finite_float),
    "approach": ("user", parse_profile),
    "squeeze_profile": ("user", parse_profile),
    "release_gesture": ("kind", lambda value: GestureKind(value.strip().lower())),
    "gesture_at": ("at", parse_finite_float),
    "lean_rate": ("lean_rate", parse_finite_float),
    "hands_off_decay": ("decay", parse_finite_float),
}


def _user_from_entries(entries):
    fields = {}
    gesture_fields = {}
    for lineno, key, value in entries:
        if key not in _USER_PARSERS:
            raise ConfigParseError(f"unknown key 'user.{key}'", lineno,
                                   f"user.{key}")
        target, parse = _USER_PARSERS[key]
        try:
            parsed = parse(value)
        except ValueError as e:
            raise ConfigParseError(
                f"invalid value for 'user.{key}': {e}", lineno,
                f"user.{key}") from e
        if target == "user":
            fields[key] = parsed
        else:
            gesture_fields[target] = parsed

    lineno = entries[-1][0] if entries else 0
    gesture = ReleaseGesture(**gesture_fields)
    if gesture.kind is not GestureKind.PASSIVE and gesture.at is None:
        raise ConfigParseError(
            f"'user.release_gesture = {gesture.kind.value}' needs "
            f"'user.gesture_at'", lineno, "user.gesture_at")
    try:
        return UserModel(release_gesture=gesture, **fields)
    except ValueError as e:
        raise ConfigParseError(str(e), lineno) from e


def _prefixed_fields(entries, prefix, allowed, coerce):
    fields = {}
    for lineno, key, value in entries:
        qualified = f"{prefix}.{key}" if prefix else key
        if key not in allowed:
            raise ConfigParseError(f"unknown key '{qualified}'", lineno, qualified)
        try:
            fields[key] = coerce(key, value)
        except ValueError as e:
            raise ConfigParseError(
                f"invalid value for '{qualified}': {e}", lineno,
                qualified) from e
    return fields


def _coerce_plant(key, value):
    if key == "mic_level":
        return parse_int(value)
    return parse_finite_float(value)


def _coerce_scenario(key, value):
    if key == "name":
        return value
    if key == "seed":
        return parse_int(value)
    if key == "duration":
        return parse_finite_float(value)
    return parse_optional_float(value)


def load_scenario(text, base_config=None):
    """Read a scenario document. HugConfig keys override ``base_config``
    (the site config when omitted).

    :raises ConfigParseError: on unknown keys or unreadable values.
    :raises InvalidHugConfig: when the resulting config breaks an invariant.
    """
    base_config = base_config if base_config is not None else conf.get_site_config()
    groups = {"flags": [], "user": [], "plant": []}
    config_entries = []
    scenario_entries = []
    for lineno, key, value in parse_key_values(text):
        prefix, _, rest = key.partition(".")
        if rest and prefix in groups:
            groups[prefix].append((lineno, rest, value))
        elif key in SCENARIO_KEYS:
            scenario_entries.append((lineno, key, value))
        elif key in CONFIG_FIELDS:
            config_entries.append((lineno, key, value))
        else:
            raise ConfigParseError(f"unknown key '{key}'", lineno, key)

    flags = ModeFlags(**_prefixed_fields(
        groups["flags"], "flags", ("vision", "sizing", "haptic_release"),
        lambda key, value: parse_bool(value)))
    plant = PlantConfig(**_prefixed_fields(
        groups["plant"], "plant", PLANT_FIELDS, _coerce_plant))
    scenario_fields = _prefixed_fields(
        scenario_entries, None, SCENARIO_KEYS, _coerce_scenario)
    user = _user_from_entries(groups["user"])
    config = replace_config(
        base_config, **config_overrides_from_entries(config_entries))
    return Scenario(flags=flags, config=config, user=user, plant=plant,
                    **scenario_fields)


def read_scenario_file(path, base_config=None):
    with open(path) as fp:
        return load_scenario(fp.read(), base_config=base_config)

# }}}


@dataclasses.dataclass(frozen=True)
class Summary:
    name: str
    condition: str
    seed: int
    initiated_by: str = INITIATED_BY_NONE
    closure_angles: Optional[tuple] = None
    closure_angle: Optional[float] = None
    release_cause: Optional[str] = None
    release_latency: Optional[float] = None
    hug_duration: Optional[float] = None
    terminated: bool = False
    hug_started_at: Optional[float] = None
    closure_complete_time: Optional[float] = None
    release_time: Optional[float] = None

    def to_dict(self):
        data = dataclasses.asdict(self)
        if self.closure_angles is not None:
            data["closure_angles"] = list(self.closure_angles)
        return data


class ScenarioResult(NamedTuple):
    records: list
    summary: Summary


class HugSession:
    """One closed-loop run: the plant and the controller stepped together at
    ``control_rate``. Sensor streams are sampled and held between their own
    sample instants.
    """

    def __init__(self, scenario):
        self.scenario = scenario
        self.cfg = scenario.config
        self.dt = self.cfg.dt
        self.chest = ChestMonitor(self.cfg)
        self.aux = FsmAux.initial(self.cfg, HOME_POSE)
        self.plant_state = PlantState.initial(scenario.seed, self.aux.start)
        self.phase = HugPhase.IDLE
        self.tick = 0
        self.command = None
        self.detection = None
        self.pressure = None
        self.arm_state, _ = measure_arm(
            self.plant_state.angles, scenario.user, 0.0)
        self._pending = {"key_press_at": scenario.key_press_at,
                         "estop_at": scenario.estop_at,
                         "recalibrate_at": scenario.recalibrate_at}
        self._marks = {}

    def _due(self, name, clock):
        at = self._pending[name]
        if at is not None and clock >= at - _TIME_TOLERANCE:
            self._pending[name] = None
            return True
        return False

    def step(self):
        clock = self.tick * self.dt
        scenario = self.scenario
        if self.tick > 0:
            out = plant_step(self.plant_state, self.command, scenario.user,
                             self.cfg, self.dt, scenario.plant)
            self.plant_state = out.state
            self.arm_state = out.arm_state
            for line in out.frames:
                self.chest.feed_line(line)
                self.pressure = self.chest.last_sample.pressure
            if out.detections:
                self.detection = out.detections[-1]

        if self._due("recalibrate_at", clock):
            self.chest.recalibrate()

        inputs = ControllerInputs(
            clock=clock, arm_state=self.arm_state, contact=self.chest.state,
            detection=self.detection,
            key_press=self._due("key_press_at", clock),
            emergency_stop=self._due("estop_at", clock))
        previous = self.phase
        self.phase, self.command, events, self.aux = fsm_step(
            previous, inputs, self.aux, scenario.flags, self.cfg, self.dt)
        self._track(previous, clock, events)

        distance = (self.detection.distance
                    if self.detection is not None
                    and self.detection.person_present else None)
        record = TraceRecord.from_tick(
            clock, self.phase, self.arm_state, self.pressure, distance, events)
        self.tick += 1
        return record

    def _track(self, previous, clock, events):
        if previous is HugPhase.CLOSING and self.phase is HugPhase.EMBRACE:
            self._marks["closure_complete_time"] = clock
        if HugPhase.EMBRACE in (previous, self.phase):
            # the pose the arms settle in while embracing
            self._marks["embrace_angles"] = self.arm_state.angles
        for event in events:
            if event.kind is EventKind.HUG_STARTED:
                self._marks["initiated_by"] = event.payload
                self._marks["hug_started_at"] = clock
            elif event.kind is EventKind.RELEASE_TRIGGERED:
                self._marks["release_cause"] = event.payload
                self._marks["release_time"] = clock
            elif event.kind is EventKind.HUG_ENDED:
                self._marks["hug_ended_at"] = clock

    @property
    def finished(self):
        return "hug_ended_at" in self._marks

    def summary(self):
        marks = self._marks
        angles = None
        if "embrace_angles" in marks:
            angles = tuple(
                closure_angles(marks["embrace_angles"], HOME_POSE).tolist())
        latency = None
        if "release_time" in marks and "closure_complete_time" in marks:
            latency = marks["release_time"] - marks["closure_complete_time"]
        duration = None
        if self.finished:
            duration = marks["hug_ended_at"] - marks["hug_started_at"]
        return Summary(
            name=self.scenario.name,
            condition=self.scenario.flags.code,
            seed=self.scenario.seed,
            initiated_by=marks.get("initiated_by", INITIATED_BY_NONE),
            closure_angles=angles,
            closure_angle=None if angles is None else float(np.mean(angles)),
            release_cause=marks.get("release_cause"),
            release_latency=latency,
            hug_duration=duration,
            terminated=self.finished,
            hug_started_at=marks.get("hug_started_at"),
            closure_complete_time=marks.get("closure_complete_time"),
            release_time=marks.get("release_time"),
        )

    def run(self):
        last_tick = int(round(self.scenario.duration * self.cfg.control_rate))
        records = []
        while self.tick <= last_tick and not self.finished:
            records.append(self.step())
        return records


def run_scenario(scenario):
    """Run ``scenario`` until the hug ends or its duration runs out.

    A run that hits the duration limit is reported with
    ``summary.terminated`` False rather than raising.
    """
    logger.info("Running scenario '%s' (%s, seed %d)",
                scenario.name, scenario.flags.code, scenario.seed)
    session = HugSession(scenario)
    records = session.run()
    summary = session.summary()
    if not summary.terminated:
        logger.warning(
            "Scenario '%s' (%s) reached its %.2f s limit without the hug ending",
            scenario.name, scenario.flags.code, scenario.duration)
    else:
        logger.info("Scenario '%s' (%s) ended: %s after %.2f s",
                    scenario.name, scenario.flags.code, summary.release_cause,
                    summary.hug_duration)
    return ScenarioResult(records, summary)


# {{{ condition grid

def grid_scenarios(base):
    """The 8 condition variants of ``base``. Condition ``i`` runs with seed
    ``base.seed + i``.
    """
    return [base.replace(name=f"{base.name}-{flags.code}", flags=flags,
                         seed=base.seed + flags.index)
            for flags in ModeFlags.all()]


def run_condition_grid(base, workers=None):
    """Run all 8 conditions of ``base``, in a process pool when ``workers``
    is above 1. Results are in condition index order either way.
    """
    workers = workers or conf.GRID_WORKERS
    scenarios = grid_scenarios(base)
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_scenario, scenarios))
    else:
        results = [run_scenario(s) for s in scenarios]
    logger.info("Condition grid '%s' finished: %s", base.name,
                ", ".join(f"{r.summary.condition}={r.summary.release_cause}"
                          for r in results))
    return results


def _fmt(value, pattern):
    return "-" if value is None else pattern.format(value)


def format_grid_table(summaries):
    header = (f"{'condition':<10}{'initiated':<11}{'closure deg':>12}"
              f"{'release':>10}{'latency s':>11}{'duration s':>12}")
    lines = [header, "-" * len(header)]
    for s in summaries:
        closure = None if s.closure_angle is None else np.degrees(s.closure_angle)
        lines.append(
            f"{s.condition:<10}{s.initiated_by:<11}"
            f"{_fmt(closure, '{:.2f}'):>12}{_fmt(s.release_cause, '{}'):>10}"
            f"{_fmt(s.release_latency, '{:.3f}'):>11}"
            f"{_fmt(s.hug_duration, '{:.3f}'):>12}")
    return "\n".join(lines) + "\n"

# }}}
