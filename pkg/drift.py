"""
Per-learner change detection on the 0/1 error stream.

AdaptiveWindowDetector keeps an exponential histogram of recent values and
drops the older part of the window when its mean differs from the newer part
by at least epsilon_cut. DriftMonitor wraps one detector (single level) or a
permissive warning detector plus a restrictive drift detector (two levels).
"""
import math
import logging
from enum import Enum
from typing import List, Tuple

from errors import DomainError

logger = logging.getLogger(__name__)

TWO_LEVEL = 'two_level'
SINGLE_LEVEL = 'single_level'


def epsilon_cut(n0: int, n1: int, n: int, delta: float) -> float:
    """sqrt(ln(4n / delta) / (2m)) with m = 1 / (1/n0 + 1/n1)"""
    m = 1.0 / (1.0 / n0 + 1.0 / n1)
    return math.sqrt(math.log(4.0 * n / delta) / (2.0 * m))


class AdaptiveWindowDetector:
    """ADWIN-style detector over values in {0, 1}"""

    def __init__(self, delta: float = 0.002, max_buckets: int = 5, clock: int = 32,
                 min_window: int = 10, min_sub_window: int = 5):
        if not 0.0 < delta < 1.0:
            raise DomainError(f"delta must be in (0, 1), got {delta}")
        if max_buckets < 1 or clock < 1:
            raise DomainError("max_buckets and clock must be positive")
        self.delta = delta
        self.max_buckets = max_buckets
        self.clock = clock
        self.min_window = min_window
        self.min_sub_window = min_sub_window
        self.n_detections = 0
        self.reset()

    def reset(self) -> None:
        # rows[i] holds (total, variance) buckets of 2**i values, newest first
        self.rows: List[List[Tuple[float, float]]] = [[]]
        self.width = 0
        self.total = 0.0
        self.variance_sum = 0.0
        self.time = 0

    @property
    def mean(self) -> float:
        return self.total / self.width if self.width > 0 else 0.0

    @property
    def variance(self) -> float:
        return self.variance_sum / self.width if self.width > 0 else 0.0

    @property
    def n_buckets(self) -> int:
        return sum(len(row) for row in self.rows)

    def bucket_sizes(self) -> List[int]:
        """Bucket sizes from newest to oldest"""
        return [2 ** level for level, row in enumerate(self.rows) for _ in row]

    def update(self, value) -> bool:
        """Append value; True when a change was detected and the old sub-window dropped"""
        if value not in (0, 1):
            raise DomainError(f"detector input must be 0 or 1, got {value}")
        value = float(value)
        self.time += 1
        self._insert(value)
        if self.time % self.clock != 0 or self.width <= self.min_window:
            return False
        changed = False
        while self._find_cut():
            self._drop_oldest()
            changed = True
        if changed:
            self.n_detections += 1
        return changed

    def _insert(self, value: float) -> None:
        if self.width > 0:
            mean = self.total / self.width
            self.variance_sum += self.width * (value - mean) ** 2 / (self.width + 1)
        self.width += 1
        self.total += value
        self.rows[0].insert(0, (value, 0.0))
        self._compress()

    def _compress(self) -> None:
        level = 0
        while level < len(self.rows) and len(self.rows[level]) > self.max_buckets:
            older_total, older_variance = self.rows[level].pop()
            newer_total, newer_variance = self.rows[level].pop()
            size = 2 ** level
            delta_mean = older_total / size - newer_total / size
            merged = (older_total + newer_total,
                      older_variance + newer_variance + size * size * delta_mean ** 2 / (2 * size))
            if level + 1 == len(self.rows):
                self.rows.append([])
            self.rows[level + 1].insert(0, merged)
            level += 1

    def _find_cut(self) -> bool:
        n0, sum0 = 0, 0.0
        for level in range(len(self.rows) - 1, -1, -1):
            row = self.rows[level]
            for index in range(len(row) - 1, -1, -1):
                if level == 0 and index == 0:
                    return False
                n0 += 2 ** level
                sum0 += row[index][0]
                n1 = self.width - n0
                if n1 <= 0:
                    return False
                if n0 < self.min_sub_window or n1 < self.min_sub_window:
                    continue
                gap = abs(sum0 / n0 - (self.total - sum0) / n1)
                if gap >= epsilon_cut(n0, n1, self.width, self.delta):
                    return True
        return False

    def _drop_oldest(self) -> None:
        level = len(self.rows) - 1
        while level > 0 and not self.rows[level]:
            level -= 1
        bucket_total, bucket_variance = self.rows[level].pop()
        size = 2 ** level
        self.width -= size
        self.total -= bucket_total
        if self.width > 0:
            rest_mean = self.total / self.width
            gap = bucket_total / size - rest_mean
            self.variance_sum -= bucket_variance + size * self.width * gap * gap / (size + self.width)
            self.variance_sum = max(self.variance_sum, 0.0)
        else:
            self.variance_sum = 0.0
        while len(self.rows) > 1 and not self.rows[-1]:
            self.rows.pop()


class Signal(Enum):
    NONE = 0
    WARNING = 1
    DRIFT = 2


class DriftMonitor:
    """Warning/drift levels (two-level) or a single drift level over a learner's errors"""

    def __init__(self, mode: str = TWO_LEVEL, delta_warning: float = 0.0001,
                 delta_drift: float = 0.00001, max_buckets: int = 5, clock: int = 32):
        if mode not in (TWO_LEVEL, SINGLE_LEVEL):
            raise DomainError(f"unknown monitor mode '{mode}'")
        if mode == TWO_LEVEL and not delta_warning > delta_drift:
            raise DomainError("the warning level must be more permissive than the drift level")
        self.mode = mode
        self.delta_warning = delta_warning
        self.delta_drift = delta_drift
        self._detector_args = {'max_buckets': max_buckets, 'clock': clock}
        self.drift_detector = AdaptiveWindowDetector(delta_drift, **self._detector_args)
        self.warn_detector = (AdaptiveWindowDetector(delta_warning, **self._detector_args)
                              if mode == TWO_LEVEL else None)
        self.warning_fired = False
        self.n_warnings = 0
        self.n_drifts = 0

    def update(self, correct: bool) -> Signal:
        error = 0 if correct else 1
        self.warning_fired = False
        if self.warn_detector is not None:
            self.warning_fired = self.warn_detector.update(error)
        if self.drift_detector.update(error):
            self.n_drifts += 1
            self.reset()
            return Signal.DRIFT
        if self.warning_fired:
            self.n_warnings += 1
            self.warn_detector.reset()
            return Signal.WARNING
        return Signal.NONE

    def reset(self) -> None:
        self.drift_detector.reset()
        if self.warn_detector is not None:
            self.warn_detector.reset()
