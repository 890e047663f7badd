SHOULDER_TORQUE_STOP = 10.0
"""float: Torque (Nm) above which a closing shoulder pan joint stops during a
sizing hug.
"""

ELBOW_TORQUE_STOP = 5.0
"""float: Torque (Nm) above which a closing elbow flex joint stops during a
sizing hug.
"""

RELEASE_TORQUE = 20.0
"""float: Torque (Nm) on any monitored joint that ends the embrace, i.e., the
user is pushing back against the arms.
"""

CONTACT_START_DELTA = 50000.0
"""float: Chamber pressure rise (Pa) over the baseline at which the user is
considered to be hugging the chest.
"""

CONTACT_END_DELTA = 10000.0
"""float: Chamber pressure (Pa) over the baseline at or below which an
established contact is considered broken.
"""

BASELINE_SAMPLE_COUNT = 20

HAPTIC_RATE = 45.0
CAMERA_RATE = 30.0
CONTROL_RATE = 100.0

INITIATE_DISTANCE = 2.45
"""float: Distance (m) under which an approaching person triggers a hug."""

FIXED_CLOSE_ANGLE = 20.0
"""float: Closing offset (degrees) of joints 2 and 3 for the one-size-fits-most
hug.
"""

SIZING_GOAL_ANGLE = 45.0
"""float: Closing offset (degrees) of joints 2 and 3 of the pose a sizing hug
closes towards. It is beyond any user, so closure ends on torque latches.
"""

START_CLOSE_ANGLE = 0.0
"""float: Closing offset (degrees) of joints 2 and 3 of the pose the arms wait in
and return to. A pre-closed start shortens the closing motion of arms that
are limited in speed. Hug goals stay measured from the home pose.
"""

TIMED_RELEASE_DELAY = 1.0

APPROACH_WINDOW_LEN = 24
APPROACH_EPSILON = 0.06

JOINT_SPEED = 0.6
"""float: Angular velocity (rad/s) of the joint references, also the largest
velocity the joints are commanded to.
"""

PID_KP = 8.0
PID_KI = 0.5
PID_KD = 0.2
PID_INTEGRAL_LIMIT = 1.0

INVITE_TEXT = "Can I have a hug, please?"


# {{{ simulated plant

JOINT_LAG = 0.05
DEPTH_NOISE = 0.03
PRESSURE_NOISE = 200.0
BASELINE_PRESSURE = 101325.0
MIC_LEVEL = 512
MIC_NOISE = 8.0
CAMERA_RANGE = 4.5
JOINT_LIMIT = 3.14159

DEFAULT_TORSO_STIFFNESS = 25.0
DEFAULT_HANDS_OFF_DECAY = 0.5

# }}}


# {{{ site settings (HUGGIEBOT_CONFIG)

TRACE_SIGNIFICANT_DIGITS = 9
GRID_WORKERS = 1

# }}}
