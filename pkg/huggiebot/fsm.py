"""The hug lifecycle state machine.

:func:`fsm_step` is the controller tick. It takes the current phase, the
sampled inputs and the per-hug :class:`FsmAux`, and returns the next phase,
the arm command, the events of this tick and the updated aux.
"""

import copy
import dataclasses
import enum
from typing import Any, NamedTuple, Optional

import numpy as np

from huggiebot.arms import (MONITORED_IDS, ArmCommand, ArmState, PidState,
                            empty_latches, fixed_hug_goal, latched_mask,
                            make_pose, pid_step, reference_step,
                            release_torque_check, sizing_hug_goal,
                            sizing_step, start_pose)
from huggiebot.chest import NO_CONTACT, ContactState
from huggiebot.perception import (ApproachWindow, DetectionSample,
                                  push_detection, should_initiate)
from huggiebot.utils import logger

TIME_TOLERANCE = 1e-9

INITIATED_BY_VISION = "vision"
INITIATED_BY_KEY_PRESS = "key_press"

FACE_TALKING = "talking"
FACE_NEUTRAL = "neutral"


class HugPhase(enum.Enum):
    IDLE = "Idle"
    INVITING = "Inviting"
    CLOSING = "Closing"
    EMBRACE = "Embrace"
    RELEASING = "Releasing"
    RETURNING_HOME = "ReturningHome"


LEGAL_TRANSITIONS = {
    HugPhase.IDLE: {HugPhase.INVITING},
    HugPhase.INVITING: {HugPhase.CLOSING, HugPhase.RETURNING_HOME},
    HugPhase.CLOSING: {HugPhase.EMBRACE, HugPhase.RETURNING_HOME},
    HugPhase.EMBRACE: {HugPhase.RELEASING, HugPhase.RETURNING_HOME},
    HugPhase.RELEASING: {HugPhase.RETURNING_HOME},
    HugPhase.RETURNING_HOME: {HugPhase.IDLE},
}
"""dict: Phase changes allowed in one tick. Every phase may also stay put.
The jumps to ``RETURNING_HOME`` are the emergency stop.
"""


class EventKind(enum.Enum):
    INVITE_SPEECH = "InviteSpeech"
    FACE_CHANGED = "FaceChanged"
    HUG_STARTED = "HugStarted"
    CONTACT_DETECTED = "ContactDetected"
    SIZING_LATCHED = "SizingLatched"
    RELEASE_TRIGGERED = "ReleaseTriggered"
    HUG_ENDED = "HugEnded"


class ReleaseCause(enum.Enum):
    ESTOP = "EStop"
    TORQUE = "Torque"
    PRESSURE = "Pressure"
    TIMER = "Timer"


class ControllerEvent(NamedTuple):
    timestamp: float
    kind: EventKind
    payload: Any = None


class ControllerInputs(NamedTuple):
    """Sensor values sampled and held by the host loop at ``clock``."""
    clock: float
    arm_state: ArmState
    contact: ContactState = NO_CONTACT
    detection: Optional[DetectionSample] = None
    key_press: bool = False
    emergency_stop: bool = False


@dataclasses.dataclass
class FsmAux:
    """Controller memory. The fields below ``window`` are per hug and are
    reset when the hug ends. ``goal`` is measured from ``home``; the arms
    wait in and return to ``start``.

    :func:`fsm_step` returns a new aux, except for the approach window, which
    is fed in place. An aux must not be shared by two controllers.
    """
    home: np.ndarray
    start: np.ndarray
    references: np.ndarray
    pid: PidState
    window: ApproachWindow
    goal: Optional[np.ndarray] = None
    latches: tuple = ()
    closure_complete_time: Optional[float] = None
    contact_seen: bool = False
    was_in_contact: bool = False
    initiated_by: Optional[str] = None
    release_cause: Optional[ReleaseCause] = None
    hug_started_at: Optional[float] = None

    @classmethod
    def initial(cls, cfg, home=None):
        home = make_pose(home)
        start = start_pose(home, cfg)
        return cls(home=home, start=start, references=np.array(start),
                   pid=PidState.for_config(cfg),
                   window=ApproachWindow.for_config(cfg),
                   latches=empty_latches())

    def reset_hug(self, cfg):
        return dataclasses.replace(
            self, pid=PidState.for_config(cfg), goal=None,
            latches=empty_latches(), closure_complete_time=None,
            contact_seen=False, initiated_by=None, release_cause=None,
            hug_started_at=None)


def release_arbiter(flags, contact, contact_seen, arm_state, clock,
                    closure_complete_time, cfg, emergency_stop=False):
    """Pick the reason to end the embrace, if any, in priority order
    emergency stop, torque, pressure, timer.

    The torque escape is active in every mode. The pressure release needs
    contact established before. The timer only runs without haptic release.
    """
    if emergency_stop:
        return ReleaseCause.ESTOP
    if release_torque_check(arm_state, cfg):
        return ReleaseCause.TORQUE
    if flags.haptic_release:
        if contact_seen and not contact.in_contact:
            return ReleaseCause.PRESSURE
        return None
    if (closure_complete_time is not None
            and clock >= (closure_complete_time + cfg.timed_release_delay
                          - TIME_TOLERANCE)):
        return ReleaseCause.TIMER
    return None


def _at(references, pose):
    return bool((references == pose).all())


def fsm_step(phase, inputs, aux, flags, cfg, dt):
    t = inputs.clock
    arm = inputs.arm_state
    events = []
    aux = copy.copy(aux)

    def emit(kind, payload=None):
        events.append(ControllerEvent(t, kind, payload))

    detection = inputs.detection
    last_seen = aux.window.last_timestamp
    if detection is not None and (last_seen is None
                                  or detection.timestamp > last_seen):
        push_detection(aux.window, detection)

    in_contact = inputs.contact.in_contact
    hug_active = phase is not HugPhase.IDLE
    if hug_active and in_contact and not aux.was_in_contact:
        emit(EventKind.CONTACT_DETECTED, inputs.contact.since)
    aux.was_in_contact = in_contact
    if hug_active and in_contact:
        aux.contact_seen = True

    references = aux.references
    hold_mask = None
    next_phase = phase
    estop = inputs.emergency_stop

    if phase is HugPhase.IDLE:
        vision_trigger = (flags.vision and detection is not None
                          and should_initiate(aux.window, detection, cfg))
        if vision_trigger or inputs.key_press:
            aux.initiated_by = (INITIATED_BY_VISION if vision_trigger
                                else INITIATED_BY_KEY_PRESS)
            aux.hug_started_at = t
            emit(EventKind.INVITE_SPEECH, cfg.invite_text)
            emit(EventKind.FACE_CHANGED, FACE_TALKING)
            emit(EventKind.HUG_STARTED, aux.initiated_by)
            next_phase = HugPhase.INVITING

    elif phase is HugPhase.INVITING:
        if estop:
            aux.release_cause = ReleaseCause.ESTOP
            emit(EventKind.RELEASE_TRIGGERED, ReleaseCause.ESTOP.value)
            next_phase = HugPhase.RETURNING_HOME
        else:
            aux.goal = (sizing_hug_goal(aux.home, cfg) if flags.sizing
                        else fixed_hug_goal(aux.home, cfg))
            emit(EventKind.FACE_CHANGED, FACE_NEUTRAL)
            next_phase = HugPhase.CLOSING

    elif phase is HugPhase.CLOSING:
        if estop:
            aux.release_cause = ReleaseCause.ESTOP
            emit(EventKind.RELEASE_TRIGGERED, ReleaseCause.ESTOP.value)
            next_phase = HugPhase.RETURNING_HOME
        else:
            if flags.sizing:
                latches = sizing_step(aux.latches, arm, cfg)
                for before, after in zip(aux.latches, latches):
                    if after.latched and not before.latched:
                        logger.debug("Joint %s latched at %.4f rad, t=%.3f",
                                     after.joint_id.name, after.latch_angle, t)
                        emit(EventKind.SIZING_LATCHED, after.joint_id.name)
                aux.latches = latches
            hold_mask = latched_mask(aux.latches)
            references = reference_step(references, aux.goal, cfg, dt)
            for latch in aux.latches:
                if latch.latched:
                    references[latch.joint_id.position] = latch.latch_angle

            if flags.sizing:
                done = all(
                    latch.latched
                    or references[jid.position] == aux.goal[jid.position]
                    for jid, latch in zip(MONITORED_IDS, aux.latches))
            else:
                done = _at(references, aux.goal)
            if done:
                aux.closure_complete_time = t
                next_phase = HugPhase.EMBRACE

    elif phase is HugPhase.EMBRACE:
        hold_mask = latched_mask(aux.latches)
        cause = release_arbiter(
            flags, inputs.contact, aux.contact_seen, arm, t,
            aux.closure_complete_time, cfg, emergency_stop=estop)
        if cause is not None:
            aux.release_cause = cause
            emit(EventKind.RELEASE_TRIGGERED, cause.value)
            next_phase = (HugPhase.RETURNING_HOME if cause is ReleaseCause.ESTOP
                          else HugPhase.RELEASING)

    elif phase is HugPhase.RELEASING:
        references = reference_step(references, aux.start, cfg, dt)
        if estop or _at(references, aux.start):
            next_phase = HugPhase.RETURNING_HOME

    elif phase is HugPhase.RETURNING_HOME:
        if _at(references, aux.start):
            emit(EventKind.HUG_ENDED, aux.release_cause and aux.release_cause.value)
            next_phase = HugPhase.IDLE
        else:
            references = reference_step(references, aux.start, cfg, dt)

    pid, velocities = pid_step(aux.pid, references, arm.angles, dt)
    if hold_mask is not None and hold_mask.any():
        velocities[hold_mask] = 0.0
        pid = pid.reset_joints(hold_mask)
    aux.pid = pid
    aux.references = references

    if next_phase is not phase:
        logger.debug("Hug phase %s -> %s at t=%.3f",
                     phase.value, next_phase.value, t)
    if next_phase is HugPhase.IDLE and phase is not HugPhase.IDLE:
        aux = aux.reset_hug(cfg)

    return next_phase, ArmCommand(aux.references.copy(), velocities), events, aux


def check_phase_sequence(phases):
    """Return ``(index, from, to)`` for every illegal phase change in
    ``phases``.
    """
    illegal = []
    for i, (before, after) in enumerate(zip(phases, phases[1:]), start=1):
        if after is not before and after not in LEGAL_TRANSITIONS[before]:
            illegal.append((i, before, after))
    return illegal
