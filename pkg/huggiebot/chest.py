"""Back-chamber pressure stream: frame decoding, baseline calibration and
two-threshold contact detection.
"""

import math
from typing import NamedTuple, Optional

import numpy as np

from huggiebot.config import default_config
from huggiebot.utils import BaselineError, FrameError, OutOfOrderFrame, logger

FRAME_TAG = "HB2"


class ChamberSample(NamedTuple):
    timestamp: float
    pressure: float
    mic: int
    seq: int = 0


class Baseline(NamedTuple):
    pressure_mean: float
    mic_mean: float
    sample_count: int


class ContactState(NamedTuple):
    in_contact: bool = False
    since: Optional[float] = None


NO_CONTACT = ContactState()


# {{{ wire format

def format_frame(seq, pressure, mic):
    return f"{FRAME_TAG},{seq:d},{pressure:.2f},{mic:d}\n"


def parse_frame(line, cfg=None):
    """Decode ``HB2,<seq>,<pressure_pa>,<mic>``. The timestamp is derived from
    the sequence counter, ``seq / cfg.haptic_rate``.
    """
    cfg = cfg if cfg is not None else default_config()
    fields = line.rstrip("\r\n").split(",")
    if len(fields) != 4 or fields[0] != FRAME_TAG:
        raise FrameError(line)
    try:
        seq = int(fields[1])
        pressure = float(fields[2])
        mic = int(fields[3])
    except ValueError:
        raise FrameError(line)
    if seq < 0 or not math.isfinite(pressure) or pressure < 0:
        raise FrameError(line)
    return ChamberSample(
        timestamp=seq / cfg.haptic_rate, pressure=pressure, mic=mic, seq=seq)

# }}}


def calibrate_baseline(samples, cfg):
    samples = list(samples)
    if len(samples) != cfg.baseline_sample_count:
        raise BaselineError(
            f"baseline needs exactly {cfg.baseline_sample_count} samples, "
            f"got {len(samples)}")
    pressures = np.fromiter((s.pressure for s in samples), dtype=float)
    mics = np.fromiter((s.mic for s in samples), dtype=float)
    return Baseline(
        pressure_mean=float(pressures.mean()),
        mic_mean=float(mics.mean()),
        sample_count=len(samples))


def contact_step(state, sample, baseline, cfg):
    delta = sample.pressure - baseline.pressure_mean
    if state.in_contact:
        if delta <= cfg.contact_end_delta:
            return NO_CONTACT
        return state
    if delta >= cfg.contact_start_delta:
        return ContactState(in_contact=True, since=sample.timestamp)
    return state


class ChestMonitor:
    """Fold of the chamber stream: collects the first
    ``baseline_sample_count`` frames into a baseline, then tracks contact.

    Contact is never reported before the baseline exists.
    """

    def __init__(self, cfg):
        self.cfg = cfg
        self.baseline = None
        self.state = NO_CONTACT
        self.last_sample = None
        self._calibration = []

    @property
    def calibrated(self):
        return self.baseline is not None

    def recalibrate(self):
        logger.warning("Discarding chamber baseline %s, recalibrating from the "
                       "next %d frames", self.baseline,
                       self.cfg.baseline_sample_count)
        self.baseline = None
        self.state = NO_CONTACT
        self._calibration = []

    def feed_line(self, line):
        return self.feed(parse_frame(line, self.cfg))

    def feed(self, sample):
        if (self.last_sample is not None
                and sample.timestamp <= self.last_sample.timestamp):
            raise OutOfOrderFrame(
                sample, reason=f"frame not after t={self.last_sample.timestamp}")
        self.last_sample = sample

        if self.baseline is None:
            self._calibration.append(sample)
            if len(self._calibration) == self.cfg.baseline_sample_count:
                self.baseline = calibrate_baseline(self._calibration, self.cfg)
                self._calibration = []
                logger.debug("Chamber baseline calibrated: %s", self.baseline)
            return self.state

        self.state = contact_step(self.state, sample, self.baseline, self.cfg)
        return self.state
