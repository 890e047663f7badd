"""Deterministic discrete-time stand-in for the robot, its chest chamber, its
camera and the person being hugged.

All randomness comes from one seeded :class:`numpy.random.Generator` in the
:class:`PlantState`, drawn in a fixed order, so equal seeds and commands give
equal outputs.
"""

import dataclasses
import enum
import functools
from typing import NamedTuple, Optional

import numpy as np

from huggiebot import defaults
from huggiebot.arms import (CLOSING_SIGN, JOINT_COUNT, MONITORED_POSITIONS,
                            ArmState, closure_angles, make_pose)
from huggiebot.chest import format_frame
from huggiebot.perception import DetectionSample

HOME_POSE = make_pose()
"""numpy.ndarray: The simulated arms' home pose, all joints at 0 rad."""

_DUE_TOLERANCE = 1e-9
_MONITORED_SIGN = CLOSING_SIGN[MONITORED_POSITIONS]


class GestureKind(enum.Enum):
    PASSIVE = "passive"
    HANDS_OFF = "hands_off"
    LEAN_BACK = "lean_back"


class ReleaseGesture(NamedTuple):
    """How the user asks to be let go, starting at absolute time ``at`` (s).

    ``hands_off`` ramps the chest squeeze down to nothing over ``decay``
    seconds. ``lean_back`` pushes on every monitored joint with a torque
    growing by ``lean_rate`` Nm/s.
    """
    kind: GestureKind = GestureKind.PASSIVE
    at: Optional[float] = None
    lean_rate: float = 0.0
    decay: float = defaults.DEFAULT_HANDS_OFF_DECAY

    @classmethod
    def passive(cls):
        return cls()

    @classmethod
    def hands_off(cls, at, decay=defaults.DEFAULT_HANDS_OFF_DECAY):
        return cls(GestureKind.HANDS_OFF, at=at, decay=decay)

    @classmethod
    def lean_back(cls, lean_rate, at):
        return cls(GestureKind.LEAN_BACK, at=at, lean_rate=lean_rate)


@dataclasses.dataclass(frozen=True)
class UserModel:
    """A simulated hugger.

    ``approach`` is ``((t, distance_m), ...)`` in scenario time; an empty
    profile means nobody is in view. ``squeeze_profile`` is
    ``((t, pressure_delta_pa), ...)`` counted from the moment the arms first
    touch the user. Both are piecewise linear and hold their end values.
    """
    girth_contact_angle: float = np.radians(10.0)
    torso_stiffness: float = defaults.DEFAULT_TORSO_STIFFNESS
    approach: tuple = ()
    squeeze_profile: tuple = ()
    release_gesture: ReleaseGesture = ReleaseGesture()
    height: float = 1.7

    def __post_init__(self):
        if not self.girth_contact_angle >= 0:
            raise ValueError("girth_contact_angle must not be negative")
        if not self.torso_stiffness > 0:
            raise ValueError("torso_stiffness must be positive")
        for name in ("approach", "squeeze_profile"):
            points = getattr(self, name)
            if not np.all(np.isfinite(np.asarray(points, dtype=float))):
                raise ValueError(f"{name} must be finite")
            times = [p[0] for p in points]
            if times != sorted(times):
                raise ValueError(f"{name} times must not decrease")


@dataclasses.dataclass(frozen=True)
class PlantConfig:
    joint_lag: float = defaults.JOINT_LAG
    depth_noise: float = defaults.DEPTH_NOISE
    pressure_noise: float = defaults.PRESSURE_NOISE
    baseline_pressure: float = defaults.BASELINE_PRESSURE
    mic_level: int = defaults.MIC_LEVEL
    mic_noise: float = defaults.MIC_NOISE
    camera_range: float = defaults.CAMERA_RANGE
    joint_limit: float = defaults.JOINT_LIMIT

    def noiseless(self):
        return dataclasses.replace(
            self, depth_noise=0.0, pressure_noise=0.0, mic_noise=0.0)


PLANT_FIELDS = {f.name: f for f in dataclasses.fields(PlantConfig)}


class PlantState(NamedTuple):
    time: float
    angles: np.ndarray
    velocities: np.ndarray
    rng: np.random.Generator
    squeeze_onset: Optional[float] = None
    next_haptic_seq: int = 0
    next_camera_frame: int = 0

    @classmethod
    def initial(cls, seed, angles=None):
        angles = HOME_POSE if angles is None else angles
        return cls(time=0.0, angles=np.array(angles, dtype=float),
                   velocities=np.zeros(JOINT_COUNT),
                   rng=np.random.default_rng(seed))


class PlantOutput(NamedTuple):
    state: PlantState
    arm_state: ArmState
    frames: tuple
    detections: tuple


@functools.lru_cache(maxsize=None)
def _profile_arrays(points):
    times, values = zip(*points)
    return np.array(times, dtype=float), np.array(values, dtype=float)


def _profile_at(points, t):
    if not points:
        return None
    return float(np.interp(t, *_profile_arrays(points)))


def contact_torque(closure_angle, user):
    """Spring reaction (Nm) of the user's torso to a joint closed by
    ``closure_angle`` rad.
    """
    torque = user.torso_stiffness * np.maximum(
        0.0, np.subtract(closure_angle, user.girth_contact_angle))
    return float(torque) if np.ndim(torque) == 0 else torque


def lean_torque(user, t):
    gesture = user.release_gesture
    if gesture.kind is not GestureKind.LEAN_BACK or t < gesture.at:
        return 0.0
    return gesture.lean_rate * (t - gesture.at)


def squeeze_delta(user, squeeze_onset, t):
    if squeeze_onset is None:
        return 0.0
    delta = _profile_at(user.squeeze_profile, t - squeeze_onset) or 0.0
    gesture = user.release_gesture
    if gesture.kind is GestureKind.HANDS_OFF and t >= gesture.at:
        delta *= max(0.0, 1.0 - (t - gesture.at) / gesture.decay)
    return delta


def measure_arm(angles, user, t):
    closures = closure_angles(angles, HOME_POSE)
    torques = np.zeros(JOINT_COUNT)
    torques[MONITORED_POSITIONS] = (
        _MONITORED_SIGN
        * (contact_torque(closures, user) + lean_torque(user, t)))
    return ArmState(angles=angles, torques=torques, time=t), closures


def _advance_joints(state, velocities_cmd, plant_config, dt):
    v = state.velocities
    # spin-up follows a first-order lag; the joints are not backdrivable, so
    # slowing down and reversing take effect immediately
    speeding_up = (np.abs(velocities_cmd) > np.abs(v)) & (velocities_cmd * v >= 0)
    lag = plant_config.joint_lag
    gain = min(1.0, dt / lag) if lag > 0 else 1.0
    v = np.where(speeding_up, v + (velocities_cmd - v) * gain, velocities_cmd)
    angles = state.angles + v * dt
    limit = plant_config.joint_limit
    clamped = np.abs(angles) > limit
    if clamped.any():
        angles = np.minimum(np.maximum(angles, -limit), limit)
        v = np.where(clamped, 0.0, v)
    return angles, v


def plant_step(state, command, user, cfg, dt, plant_config=None):
    """Advance the simulation by ``dt`` under ``command`` (an
    :class:`~huggiebot.arms.ArmCommand`, or ``None`` for no motion).

    Returns the new state, the measured arm, the chamber frames (wire lines)
    and the detections that fell due during the step.
    """
    plant_config = plant_config or PlantConfig()
    if dt == 0:
        arm_state, _ = measure_arm(state.angles, user, state.time)
        return PlantOutput(state, arm_state, (), ())
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")

    velocities_cmd = (np.zeros(JOINT_COUNT) if command is None
                      else np.asarray(command.velocities, dtype=float))
    angles, velocities = _advance_joints(state, velocities_cmd, plant_config, dt)
    t = state.time + dt

    arm_state, closures = measure_arm(angles, user, t)
    squeeze_onset = state.squeeze_onset
    if squeeze_onset is None and (closures >= user.girth_contact_angle).any():
        squeeze_onset = t

    rng = state.rng
    frames = []
    seq = state.next_haptic_seq
    while seq / cfg.haptic_rate <= t + _DUE_TOLERANCE:
        sample_time = seq / cfg.haptic_rate
        pressure = (plant_config.baseline_pressure
                    + squeeze_delta(user, squeeze_onset, sample_time)
                    + rng.normal(0.0, plant_config.pressure_noise))
        mic = int(round(plant_config.mic_level
                        + rng.normal(0.0, plant_config.mic_noise)))
        frames.append(format_frame(seq, max(0.0, pressure), max(0, mic)))
        seq += 1

    detections = []
    frame = state.next_camera_frame
    while frame / cfg.camera_rate <= t + _DUE_TOLERANCE:
        sample_time = frame / cfg.camera_rate
        distance = _profile_at(user.approach, sample_time)
        if distance is None or distance > plant_config.camera_range:
            detections.append(DetectionSample(sample_time, False, None))
        else:
            noisy = distance + rng.normal(0.0, plant_config.depth_noise)
            detections.append(DetectionSample(sample_time, True, max(0.01, noisy)))
        frame += 1

    new_state = PlantState(
        time=t, angles=angles, velocities=velocities, rng=rng,
        squeeze_onset=squeeze_onset, next_haptic_seq=seq,
        next_camera_frame=frame)
    return PlantOutput(new_state, arm_state, tuple(frames), tuple(detections))
