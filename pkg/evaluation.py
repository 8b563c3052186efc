"""
Test-then-train harnesses: plain prequential and k-fold prequential
cross-validation, plus the statistics reported in result tables.

Only learner.predict and learner.train are timed; stream generation is not.
"""
import math
import time
import logging
import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from errors import DomainError, EmptyInput, EvaluationAborted
from models import Instance

logger = logging.getLogger(__name__)

PREQUENTIAL = 'prequential'
KFOLD_CV = 'kfold'
EVAL_MODES = (PREQUENTIAL, KFOLD_CV)


@dataclass
class EvalConfig:
    mode: str = PREQUENTIAL
    folds: int = 10
    report_interval: int = 1000
    max_instances: Optional[int] = None
    seed: int = 1
    n_jobs: int = 1

    def __post_init__(self):
        if self.mode not in EVAL_MODES:
            raise DomainError(f"evaluation mode must be one of {EVAL_MODES}, got '{self.mode}'")
        if self.mode == KFOLD_CV and self.folds < 2:
            raise DomainError(f"cross-validation needs k >= 2, got {self.folds}")
        if self.report_interval < 1:
            raise DomainError(f"report_interval must be >= 1, got {self.report_interval}")
        if self.max_instances is not None and self.max_instances < 0:
            raise DomainError(f"max_instances must be >= 0, got {self.max_instances}")


@dataclass(frozen=True)
class Snapshot:
    instance: int
    cum_accuracy: float
    fs_size: Optional[float]
    elapsed_s: float


@dataclass
class FinalMetrics:
    accuracy_pct: float
    time_seconds: float
    n_instances: int = 0
    size_mean: float = math.nan
    size_stdev: float = math.nan
    size_max: float = math.nan
    size_min: float = math.nan

    @property
    def per_sample_us(self) -> float:
        if self.n_instances == 0:
            return math.nan
        return self.time_seconds / self.n_instances * 1e6


@dataclass
class MetricsTimeline:
    snapshots: List[Snapshot] = field(default_factory=list)
    final: Optional[FinalMetrics] = None

    def add(self, snapshot: Snapshot) -> None:
        if self.snapshots and snapshot.instance <= self.snapshots[-1].instance:
            raise DomainError(f"snapshot index {snapshot.instance} is not after {self.snapshots[-1].instance}")
        self.snapshots.append(snapshot)


def size_stats(sizes: Sequence) -> Tuple[float, float, float, float]:
    """(mean, population stdev, max, min) of per-instance ensemble sizes"""
    if len(sizes) == 0:
        raise EmptyInput("size statistics need at least one value")
    values = np.asarray(sizes, dtype=np.float64)
    return float(values.mean()), float(values.std()), max(sizes), min(sizes)


def speedup(time_baseline_s: float, time_other_s: float) -> float:
    if not (time_baseline_s > 0 and time_other_s > 0):
        raise DomainError(f"speedup needs positive times, got {time_baseline_s} and {time_other_s}")
    return time_baseline_s / time_other_s


def mean_speedup(pairs: Iterable[Tuple[float, float]]) -> float:
    """Mean of per-row ratios, the way averaged table rows are computed"""
    ratios = [speedup(baseline, other) for baseline, other in pairs]
    if not ratios:
        raise EmptyInput("mean speedup needs at least one (baseline, other) pair")
    return float(np.mean(ratios))


def accuracy_delta(acc_variant_pct: float, acc_baseline_pct: float) -> float:
    return acc_variant_pct - acc_baseline_pct


def _current_size(learner) -> Optional[int]:
    return getattr(learner, 'ensemble_size', None)


class _ReplicaTracker:
    """Running counts for one learner: correct, seen, timed seconds, sizes, snapshots"""

    def __init__(self, learner, report_interval: int):
        self.learner = learner
        self.report_interval = report_interval
        self.correct = 0
        self.seen = 0
        self.elapsed = 0.0
        self.sizes: List[int] = []
        self.points: List[Snapshot] = []

    def step(self, instance: Instance, train: bool = True) -> None:
        started = time.perf_counter()
        predicted = self.learner.predict(instance)
        self.elapsed += time.perf_counter() - started
        if predicted == instance.class_index:
            self.correct += 1
        self.seen += 1
        if train:
            started = time.perf_counter()
            self.learner.train(instance)
            self.elapsed += time.perf_counter() - started
        size = _current_size(self.learner)
        if size is not None:
            self.sizes.append(size)
        if self.seen % self.report_interval == 0:
            self.mark(size)

    def mark(self, size=None) -> None:
        if self.points and self.points[-1].instance == self.seen:
            return
        self.points.append(Snapshot(self.seen, self.correct / self.seen, size, self.elapsed))

    def finish(self) -> None:
        if self.seen > 0:
            self.mark(self.sizes[-1] if self.sizes else None)

    @property
    def accuracy(self) -> float:
        return self.correct / self.seen if self.seen else math.nan


def _final_metrics(accuracy: float, elapsed: float, n_instances: int, sizes: Sequence) -> FinalMetrics:
    final = FinalMetrics(accuracy_pct=100.0 * accuracy, time_seconds=elapsed, n_instances=n_instances)
    if len(sizes) > 0:
        final.size_mean, final.size_stdev, final.size_max, final.size_min = size_stats(sizes)
    return final


def _limited(stream, max_instances: Optional[int]):
    return stream if max_instances is None else itertools.islice(stream, max_instances)


def prequential_run(learner, stream: Iterable[Instance], config: Optional[EvalConfig] = None) -> MetricsTimeline:
    """Predict, score, then train on every instance in stream order"""
    config = config or EvalConfig()
    tracker = _ReplicaTracker(learner, config.report_interval)
    timeline = MetricsTimeline()
    try:
        for instance in _limited(stream, config.max_instances):
            tracker.step(instance)
    except Exception as e:
        tracker.finish()
        timeline.snapshots = list(tracker.points)
        timeline.final = _final_metrics(tracker.accuracy, tracker.elapsed, tracker.seen, tracker.sizes)
        raise EvaluationAborted(f"prequential run aborted after {tracker.seen} instances: {e}", timeline) from e
    tracker.finish()
    timeline.snapshots = list(tracker.points)
    timeline.final = _final_metrics(tracker.accuracy, tracker.elapsed, tracker.seen, tracker.sizes)
    logger.info(f"Prequential run: {tracker.seen} instances, accuracy {timeline.final.accuracy_pct:.2f}%, "
                f"{tracker.elapsed:.2f}s")
    return timeline


def _merge_replicas(trackers: Sequence[_ReplicaTracker]) -> MetricsTimeline:
    """Snapshots averaged across replicas; times summed; sizes pooled"""
    timeline = MetricsTimeline()
    for points in zip(*[t.points for t in trackers]):
        sizes = [p.fs_size for p in points if p.fs_size is not None]
        timeline.add(Snapshot(points[0].instance,
                              float(np.mean([p.cum_accuracy for p in points])),
                              float(np.mean(sizes)) if sizes else None,
                              sum(p.elapsed_s for p in points)))
    seen = trackers[0].seen if trackers else 0
    accuracy = float(np.mean([t.accuracy for t in trackers])) if seen else math.nan
    pooled = [s for t in trackers for s in t.sizes]
    timeline.final = _final_metrics(accuracy, sum(t.elapsed for t in trackers), seen, pooled)
    return timeline


def _run_replica(learner_factory: Callable, stream_factory: Callable, replica: int, k: int,
                 config: EvalConfig) -> _ReplicaTracker:
    """One replica over its own copy of the stream; runs inside a joblib worker"""
    tracker = _ReplicaTracker(learner_factory(replica), config.report_interval)
    for i, instance in enumerate(_limited(stream_factory(), config.max_instances)):
        tracker.step(instance, train=i % k != replica)
    tracker.finish()
    tracker.learner = None
    return tracker


def kfold_cv_run(learner_factory: Callable, stream, k: Optional[int] = None,
                 config: Optional[EvalConfig] = None) -> MetricsTimeline:
    """
    k replicas; instance i belongs to fold i mod k and replica j trains on it iff
    the fold differs from j. Every replica is tested on every instance.

    `learner_factory(j)` builds replica j. `stream` is an iterable consumed once
    in lockstep, or, when config.n_jobs > 1, a zero-argument callable returning
    a fresh identical stream for each parallel replica.
    """
    config = config or EvalConfig(mode=KFOLD_CV)
    k = config.folds if k is None else k
    if k < 2:
        raise DomainError(f"cross-validation needs k >= 2, got {k}")
    if config.n_jobs > 1 and callable(stream):
        try:
            trackers = Parallel(n_jobs=min(config.n_jobs, k))(
                delayed(_run_replica)(learner_factory, stream, j, k, config) for j in range(k))
        except Exception as e:
            raise EvaluationAborted(f"cross-validation aborted: {e}", MetricsTimeline()) from e
        timeline = _merge_replicas(trackers)
    else:
        source = stream() if callable(stream) else stream
        trackers = [_ReplicaTracker(learner_factory(j), config.report_interval) for j in range(k)]
        try:
            for i, instance in enumerate(_limited(source, config.max_instances)):
                fold = i % k
                for j, tracker in enumerate(trackers):
                    tracker.step(instance, train=fold != j)
        except Exception as e:
            for tracker in trackers:
                tracker.finish()
            raise EvaluationAborted(f"cross-validation aborted after {trackers[0].seen} instances: {e}",
                                    _merge_replicas(trackers)) from e
        for tracker in trackers:
            tracker.finish()
        timeline = _merge_replicas(trackers)
    logger.info(f"{k}-fold CV: accuracy {timeline.final.accuracy_pct:.2f}%, {timeline.final.time_seconds:.2f}s")
    return timeline


def run_evaluation(learner_factory: Callable, stream, config: EvalConfig) -> MetricsTimeline:
    """Dispatch on config.mode; prequential uses replica 0 of the factory"""
    if config.mode == KFOLD_CV:
        return kfold_cv_run(learner_factory, stream, config.folds, config)
    source = stream() if callable(stream) else stream
    return prequential_run(learner_factory(0), source, config)
