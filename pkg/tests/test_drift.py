import copy
import math
from fractions import Fraction

import numpy as np
import pytest

from drift import SINGLE_LEVEL, TWO_LEVEL, AdaptiveWindowDetector, DriftMonitor, Signal, epsilon_cut
from errors import DomainError


def _step_sequence(seed, before=0.1, after=0.9, n=500):
    rng = np.random.default_rng(seed)
    return list((rng.random(n) < before).astype(int)) + list((rng.random(n) < after).astype(int))


def test_constant_input_never_fires():
    detector = AdaptiveWindowDetector()
    assert not any(detector.update(0) for _ in range(10000))
    assert detector.width == 10000
    assert detector.mean == 0.0
    ones = AdaptiveWindowDetector(clock=1)
    assert not any(ones.update(1) for _ in range(2000))


def test_input_domain():
    detector = AdaptiveWindowDetector()
    with pytest.raises(DomainError):
        detector.update(0.5)
    with pytest.raises(DomainError):
        detector.update(2)
    with pytest.raises(DomainError):
        AdaptiveWindowDetector(delta=0.0)


def test_step_change_detected_quickly_and_old_data_dropped():
    detector = AdaptiveWindowDetector(delta=0.002)
    fired = None
    for index, value in enumerate(_step_sequence(1)):
        if detector.update(value) and fired is None:
            fired = index
    assert fired is not None
    assert 500 <= fired < 600
    assert detector.mean >= 0.7
    assert detector.width < 600


def test_mean_is_exact_over_retained_window():
    rng = np.random.default_rng(2)
    detector = AdaptiveWindowDetector(clock=1)
    history = []
    for value in (rng.random(300) < 0.3).astype(int):
        detector.update(value)
        history.append(int(value))
        retained = history[len(history) - detector.width:]
        assert Fraction(int(round(detector.total)), detector.width) == Fraction(sum(retained), len(retained))
        assert detector.width == sum(detector.bucket_sizes())


def test_bucket_count_bound():
    rng = np.random.default_rng(3)
    detector = AdaptiveWindowDetector(max_buckets=5)
    for value in (rng.random(20000) < 0.2).astype(int):
        detector.update(value)
        if detector.width >= 2:
            bound = (detector.max_buckets + 1) * math.ceil(math.log2(detector.width))
            assert detector.n_buckets <= bound
        assert all(len(row) <= detector.max_buckets for row in detector.rows)


def _oracle_change(window, delta, min_sub_window):
    """True iff some split of window (oldest first) has |mean0 - mean1| >= epsilon_cut"""
    n = len(window)
    total = sum(window)
    head = 0
    for n0 in range(1, n):
        head += window[n0 - 1]
        n1 = n - n0
        if n0 < min_sub_window or n1 < min_sub_window:
            continue
        gap = abs(head / n0 - (total - head) / n1)
        if gap >= epsilon_cut(n0, n1, n, delta):
            return True
    return False


def test_matches_all_splits_oracle():
    rng = np.random.default_rng(4)
    for trial in range(1000):
        length = int(rng.integers(20, 257))
        switch = int(rng.integers(1, length))
        p0, p1 = rng.random(2)
        values = np.concatenate([rng.random(switch) < p0, rng.random(length - switch) < p1]).astype(int)
        delta = 0.05
        # with more buckets per level than observations every bucket holds one value
        detector = AdaptiveWindowDetector(delta=delta, max_buckets=512, clock=1)
        window = []
        for value in values:
            window.append(int(value))
            expected = len(window) > detector.min_window and _oracle_change(window, delta, detector.min_sub_window)
            changed = detector.update(value)
            assert changed == expected, f"trial {trial}"
            if changed:
                window = window[len(window) - detector.width:]
                assert not _oracle_change(window, delta, detector.min_sub_window)


def _boundary_change(window, sizes, delta, min_sub_window):
    """Like _oracle_change, but only cuts between whole buckets; sizes run newest first"""
    n = len(window)
    total = sum(window)
    n0 = 0
    for size in reversed(sizes[1:]):
        n0 += size
        n1 = n - n0
        if n0 < min_sub_window or n1 < min_sub_window:
            continue
        head = sum(window[:n0])
        if abs(head / n0 - (total - head) / n1) >= epsilon_cut(n0, n1, n, delta):
            return True
    return False


def test_compressed_window_matches_bucket_boundary_oracle():
    rng = np.random.default_rng(6)
    delta = 0.05
    for trial in range(300):
        max_buckets = (2, 3, 5)[trial % 3]
        length = int(rng.integers(40, 257))
        switch = int(rng.integers(1, length))
        p0, p1 = rng.random(2)
        values = np.concatenate([rng.random(switch) < p0, rng.random(length - switch) < p1]).astype(int)
        detector = AdaptiveWindowDetector(delta=delta, max_buckets=max_buckets, clock=1)
        window = []
        for value in values:
            window.append(int(value))
            staged = copy.deepcopy(detector)
            staged._insert(float(value))
            assert staged.width == len(window)
            expected = staged.width > detector.min_window and \
                _boundary_change(window, staged.bucket_sizes(), delta, detector.min_sub_window)
            changed = detector.update(value)
            assert changed == expected, f"trial {trial}"
            assert all(len(row) <= max_buckets for row in detector.rows)
            if changed:
                window = window[len(window) - detector.width:]
                assert not _boundary_change(window, detector.bucket_sizes(), delta, detector.min_sub_window)


def test_epsilon_cut_closed_form():
    m = 1.0 / (1.0 / 30 + 1.0 / 70)
    assert epsilon_cut(30, 70, 100, 0.002) == pytest.approx(math.sqrt(math.log(4 * 100 / 0.002) / (2 * m)))


def test_single_level_monitor_never_warns():
    monitor = DriftMonitor(SINGLE_LEVEL)
    assert monitor.warn_detector is None
    signals = [monitor.update(bool(v == 0)) for v in _step_sequence(5)]
    assert Signal.WARNING not in signals
    assert Signal.DRIFT in signals


def test_two_level_warning_precedes_drift():
    for seed in range(10):
        monitor = DriftMonitor(TWO_LEVEL, delta_warning=1e-4, delta_drift=1e-5)
        first_warning = first_drift = None
        for index, error in enumerate(_step_sequence(seed)):
            signal = monitor.update(error == 0)
            if monitor.warning_fired and first_warning is None:
                first_warning = index
            if signal is Signal.DRIFT and first_drift is None:
                first_drift = index
        assert first_drift is not None
        assert first_warning is not None and first_warning <= first_drift


def test_warning_without_drift_is_reported():
    monitor = DriftMonitor(TWO_LEVEL, delta_warning=0.5, delta_drift=1e-12)
    signals = [monitor.update(error == 0) for error in _step_sequence(6)]
    assert Signal.WARNING in signals
    assert monitor.n_warnings == signals.count(Signal.WARNING)


def test_drift_resets_detectors():
    monitor = DriftMonitor(TWO_LEVEL)
    for error in _step_sequence(7):
        if monitor.update(error == 0) is Signal.DRIFT:
            assert monitor.drift_detector.width == 0
            assert monitor.warn_detector.width == 0
            break
    else:
        pytest.fail("no drift signalled")


def test_monitor_levels_must_be_ordered():
    with pytest.raises(DomainError):
        DriftMonitor(TWO_LEVEL, delta_warning=1e-5, delta_drift=1e-4)
    with pytest.raises(DomainError):
        DriftMonitor('three_level')
