"""Joint references, PID tracking, grasp-style sizing latches and the release
torque check.

Joint vectors hold the 12 arm joints, left arm first, in the order of
:data:`JOINT_IDS`. Only the shoulder pan (index 2) and the elbow flex
(index 3) of each arm are monitored; their order in every 4-vector is
:data:`MONITORED_IDS`.
"""

import math
from typing import NamedTuple, Optional

import numpy as np

LEFT = "left"
RIGHT = "right"
SHOULDER_PAN = 2
ELBOW_FLEX = 3


class JointId(NamedTuple):
    arm: str
    index: int

    @property
    def name(self):
        return f"{self.arm}_{self.index}"

    @property
    def position(self):
        return (0 if self.arm == LEFT else 6) + self.index - 1


JOINT_IDS = tuple(JointId(arm, index)
                  for arm in (LEFT, RIGHT) for index in range(1, 7))
JOINT_COUNT = len(JOINT_IDS)

MONITORED_IDS = (
    JointId(LEFT, SHOULDER_PAN), JointId(LEFT, ELBOW_FLEX),
    JointId(RIGHT, SHOULDER_PAN), JointId(RIGHT, ELBOW_FLEX),
)
MONITORED_POSITIONS = np.array([jid.position for jid in MONITORED_IDS])

CLOSING_SIGN = np.array([1.0] * 6 + [-1.0] * 6)
"""numpy.ndarray: Direction in which each joint closes the embrace. The arms
are mirrored, so the right arm closes with negative angles.
"""


def joint_by_name(name):
    arm, index = name.rsplit("_", 1)
    jid = JointId(arm, int(index))
    if jid not in JOINT_IDS:
        raise ValueError(f"unknown joint '{name}'")
    return jid


def stop_thresholds(cfg):
    """Sizing stop torque of each monitored joint."""
    return np.array([cfg.shoulder_torque_stop if jid.index == SHOULDER_PAN
                     else cfg.elbow_torque_stop for jid in MONITORED_IDS])


class JointState(NamedTuple):
    joint_id: JointId
    angle: float
    torque: float


class ArmState(NamedTuple):
    """Measured angles (rad) and torques (Nm) of all joints at ``time``."""
    angles: np.ndarray
    torques: np.ndarray
    time: float = 0.0

    def joint(self, joint_id):
        return JointState(joint_id, float(self.angles[joint_id.position]),
                          float(self.torques[joint_id.position]))

    def joints(self):
        return [self.joint(jid) for jid in JOINT_IDS]

    def monitored(self):
        return [self.joint(jid) for jid in MONITORED_IDS]

    @property
    def monitored_torques(self):
        return self.torques[MONITORED_POSITIONS]


class ArmCommand(NamedTuple):
    references: np.ndarray
    velocities: np.ndarray


def make_pose(angles=None):
    """A read-only 12-joint pose. Missing angles are 0."""
    pose = np.zeros(JOINT_COUNT) if angles is None else np.array(angles, dtype=float)
    if pose.shape != (JOINT_COUNT,) or not np.all(np.isfinite(pose)):
        raise ValueError(f"a pose needs {JOINT_COUNT} finite angles, got {angles!r}")
    pose.setflags(write=False)
    return pose


def reference_step(current_ref, goal, cfg, dt):
    """Advance a reference towards ``goal`` by at most ``joint_speed * dt``.
    Lands exactly on ``goal`` when it is within one step.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    step = cfg.joint_speed * dt
    delta = np.subtract(goal, current_ref)
    result = np.where(np.abs(delta) <= step, goal,
                      current_ref + np.sign(delta) * step)
    return float(result) if result.ndim == 0 else result


# {{{ PID

class PidState(NamedTuple):
    kp: float
    ki: float
    kd: float
    integral_limit: float
    integral: np.ndarray = 0.0
    prev_error: Optional[np.ndarray] = None
    output_limit: Optional[float] = None

    @classmethod
    def for_config(cls, cfg, size=JOINT_COUNT):
        return cls(kp=cfg.pid_kp, ki=cfg.pid_ki, kd=cfg.pid_kd,
                   integral_limit=cfg.pid_integral_limit,
                   integral=np.zeros(size), prev_error=None,
                   output_limit=cfg.joint_speed)

    def reset_joints(self, mask):
        """Zero the integral and error history of the joints in ``mask``."""
        integral = np.where(mask, 0.0, self.integral)
        prev_error = (None if self.prev_error is None
                      else np.where(mask, 0.0, self.prev_error))
        return self._replace(integral=integral, prev_error=prev_error)


def pid_step(pid, reference, measured, dt):
    """Positional PID on ``reference - measured``. Returns the new state and the
    angular velocity command (rad/s).

    The derivative is 0 on the first step, there being no previous error.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    error = np.subtract(reference, measured)
    integral = np.minimum(np.maximum(pid.integral + error * dt,
                                     -pid.integral_limit), pid.integral_limit)
    if pid.prev_error is None:
        derivative = np.zeros_like(error)
    else:
        derivative = (error - pid.prev_error) / dt
    command = pid.kp * error + pid.ki * integral + pid.kd * derivative
    if pid.output_limit is not None:
        command = np.minimum(np.maximum(command, -pid.output_limit),
                             pid.output_limit)
    return PidState(pid.kp, pid.ki, pid.kd, pid.integral_limit, integral, error,
                    pid.output_limit), command

# }}}


# {{{ hug poses

def _close_monitored(home, angle_deg):
    goal = np.array(home, dtype=float)
    offset = math.radians(angle_deg)
    goal[MONITORED_POSITIONS] += CLOSING_SIGN[MONITORED_POSITIONS] * offset
    return make_pose(goal)


def fixed_hug_goal(home, cfg):
    """One-size-fits-most pose: joints 2 and 3 of both arms closed by
    ``cfg.fixed_close_angle`` from ``home``. Offsets compound when applied to
    its own result.
    """
    return _close_monitored(home, cfg.fixed_close_angle)


def sizing_hug_goal(home, cfg):
    """The pose a sizing hug closes towards, sized for a small user."""
    return _close_monitored(home, cfg.sizing_goal_angle)


def start_pose(home, cfg):
    """Where the arms wait between hugs: ``home`` pre-closed by
    ``cfg.start_close_angle``.
    """
    return _close_monitored(home, cfg.start_close_angle)


def closure_angles(angles, home):
    """Closure (rad) of the monitored joints, positive towards the user."""
    angles = np.asarray(angles, dtype=float)
    return (CLOSING_SIGN * (angles - home))[MONITORED_POSITIONS]

# }}}


# {{{ sizing and release

class SizingLatch(NamedTuple):
    joint_id: JointId
    latched: bool = False
    latch_angle: Optional[float] = None
    latch_time: Optional[float] = None


def empty_latches():
    return tuple(SizingLatch(jid) for jid in MONITORED_IDS)


def sizing_step(latches, arm_state, cfg):
    """Latch every unlatched monitored joint whose torque magnitude exceeds its
    stop threshold, at its current angle. Latched joints stay as they are.
    """
    thresholds = stop_thresholds(cfg)
    result = []
    for latch, threshold in zip(latches, thresholds):
        if not latch.latched:
            joint = arm_state.joint(latch.joint_id)
            if abs(joint.torque) > threshold:
                latch = SizingLatch(latch.joint_id, True, joint.angle,
                                    arm_state.time)
        result.append(latch)
    return tuple(result)


def latched_mask(latches):
    mask = np.zeros(JOINT_COUNT, dtype=bool)
    for latch in latches:
        if latch.latched:
            mask[latch.joint_id.position] = True
    return mask


def release_torque_check(arm_state, cfg):
    return bool((np.abs(arm_state.monitored_torques) > cfg.release_torque).any())

# }}}
