import math
from collections import Counter

import numpy as np
import pytest

from ensemble import EnsembleConfig, make_learner
from errors import DomainError, EmptyInput, EvaluationAborted
from evaluation import (KFOLD_CV, EvalConfig, FinalMetrics, MetricsTimeline, Snapshot, accuracy_delta,
                        kfold_cv_run, mean_speedup, prequential_run, run_evaluation, size_stats, speedup)
from models import Instance
from streams import SEAGenerator
from utils import format_pct


class RecordingLearner:
    """Predicts a fixed label and logs every call as (action, instance id)"""

    def __init__(self, label=0, log=None):
        self.label = label
        self.log = [] if log is None else log
        self.trained = []

    def predict(self, instance):
        self.log.append(('predict', int(instance.values[0])))
        return self.label

    def train(self, instance):
        self.log.append(('train', int(instance.values[0])))
        self.trained.append(int(instance.values[0]))


class GrowingLearner(RecordingLearner):
    @property
    def ensemble_size(self):
        return 10 + len(self.trained) // 3


class FailingLearner(RecordingLearner):
    def train(self, instance):
        if int(instance.values[0]) == 25:
            raise RuntimeError("boom")
        super().train(instance)


def _numbered(n, label=0):
    return [Instance([float(i)], label) for i in range(n)]


# -----------------------------
# Prequential
# -----------------------------
def test_predict_comes_before_train():
    learner = RecordingLearner()
    prequential_run(learner, _numbered(1000))
    seen = set()
    for action, index in learner.log:
        if action == 'predict':
            seen.add(index)
        else:
            assert index in seen
    assert learner.log[:4] == [('predict', 0), ('train', 0), ('predict', 1), ('train', 1)]


def test_always_right_learner():
    timeline = prequential_run(RecordingLearner(label=0), _numbered(250), EvalConfig(report_interval=100))
    assert timeline.final.accuracy_pct == 100.0
    assert [s.instance for s in timeline.snapshots] == [100, 200, 250]
    assert all(s.cum_accuracy == 1.0 for s in timeline.snapshots)
    assert timeline.final.n_instances == 250


def test_empty_stream():
    timeline = prequential_run(RecordingLearner(), [])
    assert timeline.snapshots == []
    assert math.isnan(timeline.final.accuracy_pct)
    assert math.isnan(timeline.final.per_sample_us)
    assert format_pct(timeline.final.accuracy_pct) == '—'


def test_majority_label_matches_two_pass_count():
    instances = list(SEAGenerator(seed=9).take(10 ** 4))
    counts = Counter(i.class_index for i in instances)
    majority, frequency = counts.most_common(1)[0]
    timeline = prequential_run(RecordingLearner(label=majority), iter(instances))
    assert timeline.final.accuracy_pct / 100.0 == pytest.approx(frequency / len(instances), abs=1e-9)


def test_sizes_are_sampled_per_instance():
    timeline = prequential_run(GrowingLearner(), _numbered(9), EvalConfig(report_interval=3))
    # sizes after each train: 10,10,11,11,11,12,12,12,13
    final = timeline.final
    assert (final.size_max, final.size_min) == (13, 10)
    assert final.size_mean == pytest.approx(102 / 9)
    assert [s.fs_size for s in timeline.snapshots] == [11, 12, 13]


def test_learner_without_size_reports_nan():
    timeline = prequential_run(RecordingLearner(), _numbered(5))
    assert math.isnan(timeline.final.size_mean)
    assert timeline.snapshots[-1].fs_size is None


def test_elapsed_is_non_decreasing():
    learner = make_learner(SEAGenerator().schema, EnsembleConfig(n_trees=5, fs_size=3, cs_size=2, min_fs=1))
    timeline = prequential_run(learner, SEAGenerator(seed=1).take(600), EvalConfig(report_interval=50))
    elapsed = [s.elapsed_s for s in timeline.snapshots]
    assert elapsed == sorted(elapsed)
    assert all(0.0 <= s.cum_accuracy <= 1.0 for s in timeline.snapshots)
    assert timeline.final.size_min <= timeline.final.size_mean <= timeline.final.size_max


def test_failure_keeps_partial_timeline():
    with pytest.raises(EvaluationAborted) as info:
        prequential_run(FailingLearner(), _numbered(100), EvalConfig(report_interval=10))
    timeline = info.value.timeline
    assert [s.instance for s in timeline.snapshots] == [10, 20, 26]
    assert timeline.final.n_instances == 26
    assert timeline.final.accuracy_pct == 100.0


def test_max_instances_limits_run():
    timeline = prequential_run(RecordingLearner(), SEAGenerator(seed=1), EvalConfig(max_instances=120))
    assert timeline.final.n_instances == 120


def test_repeated_runs_are_reproducible():
    def run():
        learner = make_learner(SEAGenerator().schema, EnsembleConfig(fs_size=4, cs_size=2, min_fs=2, seed=3))
        final = prequential_run(learner, SEAGenerator(seed=3).take(500)).final
        return final.accuracy_pct, final.size_mean, final.size_stdev, final.size_max, final.size_min

    assert run() == run()


# -----------------------------
# Cross-validation
# -----------------------------
def _recording_factory(registry):
    def factory(replica):
        learner = RecordingLearner()
        registry[replica] = learner
        return learner
    return factory


def test_two_folds_four_instances():
    registry = {}
    timeline = kfold_cv_run(_recording_factory(registry), _numbered(4), k=2)
    assert registry[0].trained == [1, 3]
    assert registry[1].trained == [0, 2]
    for learner in registry.values():
        assert [i for action, i in learner.log if action == 'predict'] == [0, 1, 2, 3]
    assert timeline.final.accuracy_pct == 100.0


def test_fold_isolation_over_thousand_instances():
    registry = {}
    kfold_cv_run(_recording_factory(registry), _numbered(1000), k=10)
    for j, learner in registry.items():
        assert all(i % 10 != j for i in learner.trained)
        assert len(learner.trained) == 900
        predicted = set()
        for action, i in learner.log:
            if action == 'predict':
                predicted.add(i)
            else:
                assert i in predicted


def test_cv_needs_two_folds():
    with pytest.raises(DomainError):
        kfold_cv_run(_recording_factory({}), _numbered(4), k=1)
    with pytest.raises(DomainError):
        EvalConfig(mode=KFOLD_CV, folds=1)


def test_cv_accuracy_is_mean_over_replicas():
    labels = {0: 0, 1: 1}

    def factory(replica):
        return RecordingLearner(label=labels[replica])

    stream = [Instance([float(i)], 0 if i < 3 else 1) for i in range(4)]
    timeline = kfold_cv_run(factory, stream, k=2)
    # replica 0 scores 3/4, replica 1 scores 1/4
    assert timeline.final.accuracy_pct == pytest.approx(50.0)


def test_parallel_replicas_match_lockstep():
    schema = SEAGenerator().schema
    config = EvalConfig(mode=KFOLD_CV, folds=3, report_interval=100, n_jobs=3)

    def factory(replica):
        return make_learner(schema, EnsembleConfig(fs_size=3, cs_size=2, min_fs=1, seed=10 + replica))

    def stream():
        return SEAGenerator(seed=4).take(300)

    parallel = kfold_cv_run(factory, stream, config=config)
    lockstep = kfold_cv_run(factory, stream(), k=3, config=EvalConfig(mode=KFOLD_CV, folds=3, report_interval=100))
    assert parallel.final.accuracy_pct == lockstep.final.accuracy_pct
    assert [s.cum_accuracy for s in parallel.snapshots] == [s.cum_accuracy for s in lockstep.snapshots]


def test_run_evaluation_dispatch():
    registry = {}
    timeline = run_evaluation(_recording_factory(registry), _numbered(6), EvalConfig(mode=KFOLD_CV, folds=3))
    assert sorted(registry) == [0, 1, 2]
    assert timeline.final.n_instances == 6
    single = {}
    run_evaluation(_recording_factory(single), _numbered(6), EvalConfig())
    assert list(single) == [0]


# -----------------------------
# Statistics
# -----------------------------
def test_size_stats_examples():
    assert size_stats([10, 10, 10]) == (10.0, 0.0, 10, 10)
    assert size_stats([10, 20]) == (15.0, 5.0, 20, 10)
    with pytest.raises(EmptyInput):
        size_stats([])


def test_size_stats_matches_two_pass():
    sizes = [int(s) for s in np.random.default_rng(11).integers(10, 90, size=10 ** 4)]
    mean = sum(sizes) / len(sizes)
    stdev = math.sqrt(sum((s - mean) ** 2 for s in sizes) / len(sizes))
    got = size_stats(sizes)
    assert got[0] == pytest.approx(mean, abs=1e-9)
    assert got[1] == pytest.approx(stdev, abs=1e-9)
    assert (got[2], got[3]) == (max(sizes), min(sizes))
    assert isinstance(got[2], int)


def test_speedup():
    assert round(speedup(22670.86, 4423.66), 2) == 5.12
    assert round(speedup(16634.58, 4986.02), 2) == 3.34
    assert speedup(7.5, 7.5) == 1.0
    with pytest.raises(DomainError):
        speedup(0.0, 1.0)
    with pytest.raises(DomainError):
        speedup(1.0, -2.0)


def test_mean_speedup_is_mean_of_ratios():
    pairs = [(10.0, 2.0), (6.0, 3.0)]
    assert mean_speedup(pairs) == pytest.approx(3.5)
    assert mean_speedup(pairs) != pytest.approx(16.0 / 5.0)
    with pytest.raises(EmptyInput):
        mean_speedup([])


def test_accuracy_delta():
    assert round(accuracy_delta(89.96, 89.73), 2) == 0.23
    assert round(accuracy_delta(90.13, 89.73), 2) == 0.40
    assert accuracy_delta(88.0, 88.0) == 0.0


def test_timeline_indices_strictly_increase():
    timeline = MetricsTimeline()
    timeline.add(Snapshot(10, 0.5, None, 0.1))
    with pytest.raises(DomainError):
        timeline.add(Snapshot(10, 0.5, None, 0.2))


def test_per_sample_microseconds():
    assert FinalMetrics(90.0, 2.0, n_instances=1000).per_sample_us == pytest.approx(2000.0)
