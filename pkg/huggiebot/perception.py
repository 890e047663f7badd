"""Person approach detection over a detection-with-distance stream."""

import collections
from typing import NamedTuple, Optional

import numpy as np


class DetectionSample(NamedTuple):
    timestamp: float
    person_present: bool
    distance: Optional[float] = None


class ApproachWindow:
    """The last ``capacity`` distances of the tracked person, oldest first."""

    def __init__(self, capacity):
        if capacity < 2:
            raise ValueError("an approach window needs at least 2 slots")
        self.capacity = capacity
        self.distances = collections.deque(maxlen=capacity)
        self.last_timestamp = None

    @classmethod
    def for_config(cls, cfg):
        return cls(cfg.approach_window_len)

    @property
    def fill(self):
        return len(self.distances)

    @property
    def full(self):
        return len(self.distances) == self.capacity

    def clear(self):
        self.distances.clear()

    def push(self, sample):
        if (self.last_timestamp is not None
                and sample.timestamp <= self.last_timestamp):
            raise ValueError(
                f"detection at t={sample.timestamp} is not after "
                f"t={self.last_timestamp}")
        self.last_timestamp = sample.timestamp
        if not sample.person_present:
            # losing the person discards the approach evidence
            self.distances.clear()
        else:
            if sample.distance is None or not sample.distance > 0:
                raise ValueError(
                    f"present person needs a positive distance, "
                    f"got {sample.distance!r}")
            self.distances.append(sample.distance)
        return self

    def half_means(self):
        """``(older, newer)`` half means. For an odd capacity the middle
        sample is in neither half.
        """
        values = np.asarray(self.distances, dtype=float)
        half = self.capacity // 2
        return values[:half].mean(), values[-half:].mean()

    def __repr__(self):
        return f"ApproachWindow({list(self.distances)!r}, capacity={self.capacity})"


def push_detection(window, sample):
    return window.push(sample)


def is_approaching(window, cfg):
    if not window.full:
        return False
    older, newer = window.half_means()
    return bool(newer <= older - cfg.approach_epsilon)


def should_initiate(window, latest, cfg):
    return bool(
        latest.person_present
        and latest.distance <= cfg.initiate_distance
        and is_approaching(window, cfg))
