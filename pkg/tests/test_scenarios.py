import math
import time

import numpy as np
from django.test import SimpleTestCase

from huggiebot.config import ModeFlags, default_config
from huggiebot.plant import GestureKind, ReleaseGesture
from huggiebot.scenarios import (INITIATED_BY_NONE, Scenario, Summary,
                                 format_grid_table, grid_scenarios,
                                 load_scenario, run_condition_grid,
                                 run_scenario)
from huggiebot.traces import diff_traces, emit_trace, validate_trace
from huggiebot.utils import ConfigParseError, InvalidHugConfig
from tests.factories import (HugConfigFactory, ModeFlagsFactory,
                             ScenarioFactory, UserModelFactory)

TIMED_FLAGS = ModeFlagsFactory(flag_baseline=True)

# the user leaves the chest at 8.0 s, so every hug ends well within 15 s
COOPERATIVE_USER = UserModelFactory(
    release_gesture=ReleaseGesture.hands_off(8.0))


def phase_records(records, phase):
    return [r for r in records if r.phase == phase]


SCENARIO_TEXT = """
# a cooperative hugger
name = cooperative
duration = 12
seed = 7
key_press_at = 3.0
estop_at = none

flags.vision = yes
flags.sizing = off
flags.haptic_release = true

timed_release_delay = 2.5
invite_text = Hug time!

user.girth_contact_angle = 0.2
user.torso_stiffness = 40
user.approach = 0:4.0, 2.8:1.2
user.squeeze_profile = 0:0, 0.2:80000
user.release_gesture = lean_back
user.gesture_at = 6.0
user.lean_rate = 40

plant.depth_noise = 0
plant.mic_level = 500
"""


class LoadScenarioTest(SimpleTestCase):
    def test_load(self):
        scenario = load_scenario(SCENARIO_TEXT)
        self.assertEqual(scenario.name, "cooperative")
        self.assertEqual((scenario.duration, scenario.seed), (12.0, 7))
        self.assertEqual(scenario.key_press_at, 3.0)
        self.assertIsNone(scenario.estop_at)
        self.assertIsNone(scenario.recalibrate_at)
        self.assertEqual(scenario.flags, ModeFlags(True, False, True))
        self.assertEqual(scenario.config.timed_release_delay, 2.5)
        self.assertEqual(scenario.config.invite_text, "Hug time!")
        self.assertEqual(scenario.config.release_torque, 20.0)

        user = scenario.user
        self.assertEqual(user.girth_contact_angle, 0.2)
        self.assertEqual(user.torso_stiffness, 40.0)
        self.assertEqual(user.approach, ((0.0, 4.0), (2.8, 1.2)))
        self.assertEqual(user.release_gesture,
                         ReleaseGesture.lean_back(40.0, at=6.0))
        self.assertEqual(scenario.plant.depth_noise, 0.0)
        self.assertEqual(scenario.plant.mic_level, 500)

    def test_defaults(self):
        scenario = load_scenario("")
        self.assertEqual(scenario, Scenario())
        self.assertIs(scenario.user.release_gesture.kind, GestureKind.PASSIVE)

    def test_base_config(self):
        base = HugConfigFactory(release_torque=25.0)
        scenario = load_scenario("elbow_torque_stop = 4", base_config=base)
        self.assertEqual(scenario.config.release_torque, 25.0)
        self.assertEqual(scenario.config.elbow_torque_stop, 4.0)

    def test_hands_off(self):
        scenario = load_scenario(
            "user.release_gesture = hands_off\n"
            "user.gesture_at = 5\n"
            "user.hands_off_decay = 0.25\n")
        self.assertEqual(scenario.user.release_gesture,
                         ReleaseGesture.hands_off(5.0, decay=0.25))

    def test_errors(self):
        cases = [
            ("seed = 1\ncolour = red", 2, "colour"),
            ("flags.speed = yes", 1, "flags.speed"),
            ("flags.vision = maybe", 1, "flags.vision"),
            ("user.name = Ada", 1, "user.name"),
            ("user.torso_stiffness = stiff", 1, "user.torso_stiffness"),
            ("user.approach = 0-4", 1, "user.approach"),
            ("user.release_gesture = wave", 1, "user.release_gesture"),
            ("user.release_gesture = hands_off", 1, "user.gesture_at"),
            ("plant.camera_range = far", 1, "plant.camera_range"),
            ("plant.gravity = 9.81", 1, "plant.gravity"),
            ("seed = 1.5", 1, "seed"),
            ("\n\nduration = soon", 3, "duration"),
            ("release_torque = strong", 1, "release_torque"),
        ]
        for text, lineno, key in cases:
            with self.subTest(text=text):
                with self.assertRaises(ConfigParseError) as cm:
                    load_scenario(text)
                self.assertEqual(cm.exception.lineno, lineno)
                self.assertEqual(cm.exception.key, key)

    def test_user_model_rejected(self):
        with self.assertRaises(ConfigParseError):
            load_scenario("user.torso_stiffness = -3")

    def test_invalid_config(self):
        with self.assertRaises(InvalidHugConfig):
            load_scenario("contact_end_delta = 60000")

    def test_invalid_duration(self):
        with self.assertRaises(ValueError):
            load_scenario("duration = 0")


class TimedReleaseTest(SimpleTestCase):
    def test_seeded_runs(self):
        for seed in range(50):
            with self.subTest(seed=seed):
                result = run_scenario(ScenarioFactory(
                    flags=TIMED_FLAGS, key_press_at=0.5, seed=seed))
                summary = result.summary
                self.assertTrue(summary.terminated)
                self.assertEqual(summary.initiated_by, "key_press")
                self.assertEqual(summary.release_cause, "Timer")
                self.assertAlmostEqual(summary.release_latency, 1.0, delta=0.01)

    def test_fixed_closure(self):
        summary = run_scenario(ScenarioFactory(
            flags=TIMED_FLAGS, key_press_at=0.5)).summary
        self.assertAlmostEqual(summary.hug_started_at, 0.5)
        self.assertAlmostEqual(summary.closure_complete_time, 0.5 + 0.6)
        for angle in summary.closure_angles:
            self.assertAlmostEqual(angle, math.radians(20), delta=0.01)

    def test_pre_closed_start(self):
        start = math.radians(10)
        result = run_scenario(ScenarioFactory(
            flags=TIMED_FLAGS, key_press_at=0.5,
            config=HugConfigFactory(start_close_angle=10.0)))
        summary = result.summary
        # 10° left to close: 30 ticks instead of 59
        self.assertAlmostEqual(summary.closure_complete_time, 0.81)
        self.assertEqual(summary.release_cause, "Timer")
        self.assertTrue(summary.terminated)
        for angle in summary.closure_angles:
            self.assertAlmostEqual(angle, math.radians(20), delta=0.01)

        first = result.records[0]
        for position, sign in [(1, 1.0), (2, 1.0), (7, -1.0), (8, -1.0)]:
            self.assertAlmostEqual(sign * first.angles[position], start)
        self.assertEqual(validate_trace(result.records, 100.0), [])

    def test_no_key_press(self):
        result = run_scenario(ScenarioFactory(flags=TIMED_FLAGS, duration=3.0))
        self.assertEqual(result.summary.initiated_by, INITIATED_BY_NONE)
        self.assertFalse(result.summary.terminated)
        self.assertEqual({r.phase for r in result.records}, {"Idle"})
        self.assertEqual(len(result.records), 301)


class CooperativeHugTest(SimpleTestCase):
    def test_haptic_release_never_times_out(self):
        for seed in range(5):
            with self.subTest(seed=seed):
                summary = run_scenario(ScenarioFactory(
                    user=COOPERATIVE_USER, seed=seed)).summary
                self.assertEqual(summary.initiated_by, "vision")
                self.assertIn(summary.release_cause, ("Pressure", "Torque"))
                self.assertTrue(summary.terminated)

    def test_vision_start(self):
        summary = run_scenario(ScenarioFactory(user=COOPERATIVE_USER)).summary
        # the user crosses 2.45 m at 1.55 s, give or take the depth noise
        self.assertGreaterEqual(summary.hug_started_at, 1.4)
        self.assertLess(summary.hug_started_at, 1.7)

    def test_persists_while_squeezed(self):
        with self.assertLogs("django-huggiebot", level="WARNING"):
            result = run_scenario(ScenarioFactory(duration=8.0))
        summary = result.summary
        self.assertFalse(summary.terminated)
        self.assertIsNone(summary.release_cause)
        self.assertEqual(result.records[-1].phase, "Embrace")

    def test_walking_away(self):
        user = UserModelFactory(approach=((0.0, 2.0), (2.0, 4.4)))
        result = run_scenario(ScenarioFactory(user=user, duration=5.0))
        self.assertEqual(result.summary.initiated_by, INITIATED_BY_NONE)
        self.assertFalse(result.summary.terminated)
        self.assertEqual({r.phase for r in result.records}, {"Idle"})

    def test_lean_back(self):
        user = UserModelFactory(
            release_gesture=ReleaseGesture.lean_back(40.0, at=4.0))
        summary = run_scenario(ScenarioFactory(user=user)).summary
        self.assertEqual(summary.release_cause, "Torque")
        self.assertGreaterEqual(summary.release_time, 4.0)
        self.assertLessEqual(summary.release_time, 4.52)

    def test_hands_off(self):
        user = UserModelFactory(
            release_gesture=ReleaseGesture.hands_off(4.0, decay=0.5))
        summary = run_scenario(ScenarioFactory(user=user)).summary
        self.assertEqual(summary.release_cause, "Pressure")
        crossing = 4.0 + 0.5 * (1 - 10000.0 / 80000.0)
        self.assertGreaterEqual(summary.release_time, crossing)
        self.assertLessEqual(summary.release_time, crossing + 2 / 45)

    def test_emergency_stop(self):
        result = run_scenario(ScenarioFactory(
            user=COOPERATIVE_USER, estop_at=2.0))
        self.assertEqual(result.summary.release_cause, "EStop")
        self.assertTrue(result.summary.terminated)
        self.assertNotIn("Releasing", {r.phase for r in result.records})

    def test_recalibrate(self):
        with self.assertLogs("django-huggiebot", level="WARNING") as cm:
            result = run_scenario(ScenarioFactory(
                user=COOPERATIVE_USER, recalibrate_at=0.5))
        self.assertTrue(any("recalibrat" in line for line in cm.output))
        self.assertEqual(result.summary.release_cause, "Pressure")


class SizingTest(SimpleTestCase):
    def run_sizing(self, user):
        return run_scenario(ScenarioFactory(
            flags=ModeFlagsFactory(vision=False), user=user, key_press_at=0.5,
            duration=5.0))

    def test_closure_follows_girth(self):
        closures = []
        for degrees in [5, 10, 15]:
            user = UserModelFactory(girth_contact_angle=math.radians(degrees))
            closures.append(self.run_sizing(user).summary.closure_angle)
        self.assertLess(closures[0], closures[1])
        self.assertLess(closures[1], closures[2])
        self.assertLess(closures[2], math.radians(45))

    def test_latched_joints_stop_within_a_tick(self):
        cfg = default_config()
        stiffness = 25.0
        result = self.run_sizing(UserModelFactory(torso_stiffness=stiffness))
        embrace = phase_records(result.records, "Embrace")
        self.assertTrue(embrace)
        latched = [payload for r in result.records
                   for kind, payload in r.events if kind == "SizingLatched"]
        self.assertEqual(sorted(latched),
                         ["left_2", "left_3", "right_2", "right_3"])

        overshoot = stiffness * cfg.joint_speed / cfg.control_rate
        thresholds = [cfg.shoulder_torque_stop, cfg.elbow_torque_stop] * 2
        for torque, threshold in zip(embrace[-1].torques, thresholds):
            self.assertGreater(abs(torque), threshold)
            self.assertLessEqual(abs(torque), threshold + overshoot + 1e-6)

    def test_sizing_reaches_goal_without_user(self):
        result = self.run_sizing(UserModelFactory(flag_nobody=True))
        summary = result.summary
        self.assertIsNotNone(summary.closure_complete_time)
        self.assertFalse(any(kind == "SizingLatched" for r in result.records
                             for kind, _ in r.events))
        for angle in summary.closure_angles:
            self.assertAlmostEqual(angle, math.radians(45), delta=0.02)


class ConditionGridTest(SimpleTestCase):
    def setUp(self):
        self.base = ScenarioFactory(name="grid", user=COOPERATIVE_USER,
                                    key_press_at=3.0, seed=100)

    def test_grid_scenarios(self):
        scenarios = grid_scenarios(self.base)
        self.assertEqual([s.flags.index for s in scenarios], list(range(8)))
        self.assertEqual([s.seed for s in scenarios], list(range(100, 108)))
        self.assertEqual(scenarios[5].name, "grid-VsR")

    def test_cooperative_grid(self):
        results = run_condition_grid(self.base, workers=1)
        self.assertEqual(len(results), 8)
        for result in results:
            summary = result.summary
            flags = ModeFlags.from_code(summary.condition)
            with self.subTest(condition=summary.condition):
                self.assertTrue(summary.terminated)
                self.assertEqual(validate_trace(result.records, 100.0), [])
                self.assertEqual(summary.initiated_by,
                                 "vision" if flags.vision else "key_press")
                if flags.haptic_release:
                    self.assertEqual(summary.release_cause, "Pressure")
                else:
                    self.assertEqual(summary.release_cause, "Timer")
                    self.assertAlmostEqual(summary.release_latency, 1.0,
                                           delta=0.01)

    def test_grid_is_deterministic(self):
        first = run_condition_grid(self.base, workers=1)
        second = run_condition_grid(self.base, workers=1)
        for a, b in zip(first, second):
            self.assertEqual(a.summary, b.summary)
            self.assertIsNone(diff_traces(a.records, b.records))

    def test_parallel_matches_serial(self):
        serial = run_condition_grid(self.base, workers=1)
        parallel = run_condition_grid(self.base, workers=2)
        self.assertEqual([r.summary for r in serial],
                         [r.summary for r in parallel])
        for a, b in zip(serial, parallel):
            self.assertEqual(emit_trace(a.records), emit_trace(b.records))

    def test_large_girth_sizing_closes_less(self):
        user = UserModelFactory(
            girth_contact_angle=math.radians(5), torso_stiffness=60.0,
            release_gesture=ReleaseGesture.hands_off(8.0))
        results = run_condition_grid(self.base.replace(user=user), workers=1)
        by_code = {r.summary.condition: r.summary for r in results}
        for code, summary in by_code.items():
            self.assertNotEqual(summary.release_cause, "Torque", code)
        for sized, fixed in [("VSR", "VsR"), ("vSr", "vsr"), ("VSr", "Vsr"),
                             ("vSR", "vsR")]:
            self.assertLess(by_code[sized].closure_angle,
                            by_code[fixed].closure_angle)


class TraceDeterminismTest(SimpleTestCase):
    def test_byte_identical(self):
        scenario = ScenarioFactory(user=COOPERATIVE_USER, seed=42)
        self.assertEqual(emit_trace(run_scenario(scenario).records),
                         emit_trace(run_scenario(scenario).records))

    def test_hundred_times_real_time(self):
        scenario = ScenarioFactory(duration=30.0)
        timings = []
        for _ in range(3):
            start = time.perf_counter()
            result = run_scenario(scenario)
            timings.append(time.perf_counter() - start)
            self.assertEqual(len(result.records), 3001)
        # best of three
        self.assertLessEqual(min(timings), scenario.duration / 100)


class GridTableTest(SimpleTestCase):
    def test_table(self):
        summaries = [
            Summary(name="a", condition="VSR", seed=0, initiated_by="vision",
                    closure_angles=(0.5,) * 4, closure_angle=0.5,
                    release_cause="Pressure", release_latency=5.25,
                    hug_duration=8.125, terminated=True),
            Summary(name="b", condition="vsr", seed=1),
        ]
        lines = format_grid_table(summaries).splitlines()
        self.assertEqual(len(lines), 4)
        self.assertTrue(lines[0].startswith("condition"))
        self.assertEqual(lines[2].split(),
                         ["VSR", "vision", f"{np.degrees(0.5):.2f}", "Pressure",
                          "5.250", "8.125"])
        self.assertEqual(lines[3].split(),
                         ["vsr", "none", "-", "-", "-", "-"])

    def test_summary_to_dict(self):
        summary = Summary(name="a", condition="vSr", seed=3,
                          closure_angles=(0.1, 0.2, 0.3, 0.4))
        data = summary.to_dict()
        self.assertEqual(data["closure_angles"], [0.1, 0.2, 0.3, 0.4])
        self.assertEqual(data["initiated_by"], "none")
