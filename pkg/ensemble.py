"""
Streaming random forests: the ARF baseline, the swap forest (SRF) and the
elastic swap forest (ESRF).

ESRF keeps three member sets. The forefront set FS votes; the candidate set
CS trains in the background and can swap a member into FS; the grow set GS
holds r fresh learners that join FS on a grow decision. Resize decisions
compare EWMA accuracies of three shadow ensembles: FS without its r worst
members (shrunk), FS itself (default) and FS plus GS (grown).
"""
import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from drift import SINGLE_LEVEL, TWO_LEVEL, DriftMonitor, Signal
from errors import DomainError, EmptyEnsemble, SchemaMismatch
from hoeffding_tree import HoeffdingTree, TreeConfig
from models import Instance, Schema
from utils import RNG_POISSON, RNG_TREE, argmax_lowest, derive_rng, normalize_votes

logger = logging.getLogger(__name__)

ARF = 'arf'
SRF = 'srf'
ESRF = 'esrf'
LEARNER_KINDS = (ARF, SRF, ESRF)

# Named (T_g, T_s) pairs for --preset
THRESHOLD_PRESETS: Dict[str, Tuple[float, float]] = {
    'resource': (0.01, 0.001),
    'accurate': (0.001, 0.001),
    'balanced': (0.01, 0.01),
    'restrictive': (0.1, 0.1),
    'grow': (0.01, 0.1),
    'shrink': (0.1, 0.01),
}


def ewma_alpha(window: int) -> float:
    """Smoothing factor 1 - exp(-1/W) for an EWMA over roughly W observations"""
    if window < 1:
        raise DomainError(f"EWMA window must be a positive integer, got {window}")
    return -math.expm1(-1.0 / window)


class EwmaAccuracy:
    """Exponentially weighted moving average of 0/1 correctness"""

    def __init__(self, window: int = 2000, alpha: Optional[float] = None, value: float = 0.0):
        self.window = window
        self.alpha = ewma_alpha(window) if alpha is None else alpha
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"EWMA alpha must be in (0, 1), got {self.alpha}")
        if not 0.0 <= value <= 1.0:
            raise DomainError(f"EWMA value must be in [0, 1], got {value}")
        self.value = float(value)

    def update(self, s) -> float:
        if s not in (0, 1):
            raise DomainError(f"EWMA input must be 0 or 1, got {s}")
        self.value += self.alpha * (float(s) - self.value)
        return self.value


def ewma_update(e: EwmaAccuracy, s) -> EwmaAccuracy:
    e.update(s)
    return e


class ResizeDecision(Enum):
    KEEP = 'keep'
    GROW = 'grow'
    SHRINK = 'shrink'


def resize_decision(delta_grow: float, delta_shrink: float,
                    grow_threshold: float, shrink_threshold: float) -> ResizeDecision:
    """Grow wins ties with shrink; each branch must also clear its own threshold"""
    if delta_grow >= delta_shrink and delta_grow > grow_threshold:
        return ResizeDecision.GROW
    if delta_shrink > delta_grow and delta_shrink > shrink_threshold:
        return ResizeDecision.SHRINK
    return ResizeDecision.KEEP


@dataclass
class EnsembleConfig:
    """Forest parameters; field names double as run-config keys"""
    kind: str = ESRF
    n_trees: int = 100
    fs_size: int = 10
    cs_size: int = 10
    resize_factor: int = 1
    grow_threshold: float = 0.01
    shrink_threshold: float = 0.001
    window: int = 2000
    alpha: Optional[float] = None
    min_fs: int = 10
    max_total: int = 100
    poisson_lambda: float = 6.0
    delta_warning: float = 0.0001
    delta_drift: float = 0.00001
    seed: int = 1
    threads: int = 1
    tree: TreeConfig = field(default_factory=TreeConfig)

    def __post_init__(self):
        if self.kind not in LEARNER_KINDS:
            raise DomainError(f"learner kind must be one of {LEARNER_KINDS}, got '{self.kind}'")
        for name in ('n_trees', 'fs_size', 'resize_factor', 'window', 'min_fs', 'max_total', 'threads'):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be a positive integer, got {getattr(self, name)}")
        if self.cs_size < 0:
            raise DomainError(f"cs_size must be >= 0, got {self.cs_size}")
        if self.grow_threshold < 0 or self.shrink_threshold < 0:
            raise DomainError("resize thresholds must be >= 0")
        if not self.poisson_lambda > 0:
            raise DomainError("poisson_lambda must be positive")
        if self.kind == ESRF:
            if self.fs_size < self.min_fs:
                raise DomainError(f"initial |FS| {self.fs_size} is below min_fs {self.min_fs}")
            if self.fs_size + self.cs_size + self.resize_factor > self.max_total:
                raise DomainError(
                    f"|FS| + |CS| + |GS| = {self.fs_size + self.cs_size + self.resize_factor} "
                    f"exceeds max_total {self.max_total}")

    @property
    def tag(self) -> str:
        """Short learner name used in result tables"""
        if self.kind == ARF:
            return f"ARF{self.n_trees}"
        if self.kind == SRF:
            return f"SRF{self.fs_size}"
        return 'ESRF'

    def summary(self) -> str:
        if self.kind == ARF:
            return f"n_trees={self.n_trees}"
        text = f"fs={self.fs_size} cs={self.cs_size}"
        if self.kind == ESRF:
            text += (f" r={self.resize_factor} tg={self.grow_threshold:g} ts={self.shrink_threshold:g}"
                     f" w={self.window} min_fs={self.min_fs} max_total={self.max_total}")
        return text

    def as_dict(self) -> Dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != 'tree'}


class EnsembleMember:
    """A tree with its drift monitor, accuracy counters since reset, and Poisson stream"""

    def __init__(self, member_id: int, tree: HoeffdingTree, monitor: DriftMonitor, rng: np.random.Generator):
        self.member_id = member_id
        self.tree = tree
        self.monitor = monitor
        self.rng = rng
        self.correct_since_reset = 0
        self.total_since_reset = 0

    @property
    def weight(self) -> float:
        return member_weight(self)

    def record(self, correct: bool) -> None:
        self.total_since_reset += 1
        if correct:
            self.correct_since_reset += 1

    def reset(self) -> None:
        """Fresh tree and cleared counters after a drift"""
        self.tree.reset()
        self.correct_since_reset = 0
        self.total_since_reset = 0

    def __repr__(self):
        return (f"EnsembleMember(id={self.member_id}, "
                f"{self.correct_since_reset}/{self.total_since_reset})")


def member_weight(member: EnsembleMember) -> float:
    """Correct / total since the last reset; 0 before any prediction"""
    if member.total_since_reset == 0:
        return 0.0
    return member.correct_since_reset / member.total_since_reset


def member_votes(member: EnsembleMember, instance: Instance) -> np.ndarray:
    return normalize_votes(member.tree.predict(instance))


def predict_label(members: Sequence[EnsembleMember], instance: Instance,
                  votes: Optional[Dict[int, np.ndarray]] = None) -> Tuple[int, np.ndarray]:
    """
    Weighted vote: each member's normalised scores scaled by its weight, summed in member order.

    `votes` may carry precomputed normalised scores by member id. Training
    state is never touched.
    """
    if not members:
        raise EmptyEnsemble("cannot predict with an empty member set")
    combined = None
    for member in members:
        v = votes.get(member.member_id) if votes is not None else None
        if v is None:
            v = member_votes(member, instance)
        contribution = v * member_weight(member)
        combined = contribution if combined is None else combined + contribution
    return argmax_lowest(combined), combined


class _Forest:
    """Member bookkeeping shared by the three forests"""

    def __init__(self, schema: Schema, config: EnsembleConfig):
        self.schema = schema
        self.config = config
        self.instances_seen = 0
        self._next_member_id = 0
        self._executor: Optional[ThreadPoolExecutor] = None
        self._cached_votes: Optional[Tuple[Instance, Dict[int, np.ndarray]]] = None

    def _monitor_mode(self) -> str:
        return SINGLE_LEVEL

    def _new_member(self) -> EnsembleMember:
        member_id = self._next_member_id
        self._next_member_id += 1
        tree = HoeffdingTree(self.schema, self.config.tree, derive_rng(self.config.seed, RNG_TREE, member_id))
        monitor = DriftMonitor(self._monitor_mode(), self.config.delta_warning, self.config.delta_drift)
        return EnsembleMember(member_id, tree, monitor, derive_rng(self.config.seed, RNG_POISSON, member_id))

    def _map(self, fn, *iterables) -> list:
        if self.config.threads <= 1:
            return list(map(fn, *iterables))
        if self._executor is None:
            self._executor = ThreadPoolExecutor(max_workers=self.config.threads)
        return list(self._executor.map(fn, *iterables))

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def __getstate__(self):
        state = self.__dict__.copy()
        state['_executor'] = None
        state['_cached_votes'] = None
        return state

    def _check(self, instance: Instance) -> None:
        if instance.values.shape[0] != self.schema.n_attributes:
            raise SchemaMismatch(
                f"instance has {instance.values.shape[0]} values, learner expects {self.schema.n_attributes}")

    def _votes_for(self, members: Sequence[EnsembleMember], instance: Instance) -> Dict[int, np.ndarray]:
        """Normalised pre-training scores for members, reusing those computed by the last predict"""
        cached = {}
        if self._cached_votes is not None and self._cached_votes[0] is instance:
            cached = self._cached_votes[1]
        missing = [m for m in members if m.member_id not in cached]
        computed = self._map(lambda m: member_votes(m, instance), missing)
        votes = dict(cached)
        votes.update({m.member_id: v for m, v in zip(missing, computed)})
        return votes

    def _train_member(self, member: EnsembleMember, instance: Instance, prediction: int,
                      background: Optional[HoeffdingTree] = None) -> Signal:
        """Poisson-weighted training; counters and monitor use the pre-training prediction"""
        k = int(member.rng.poisson(self.config.poisson_lambda))
        correct = prediction == instance.class_index
        member.record(correct)
        if k > 0:
            weighted = instance.with_weight(k * instance.weight)
            member.tree.train(weighted)
            if background is not None:
                background.train(weighted)
        return member.monitor.update(correct)

    def voting_members(self) -> List[EnsembleMember]:
        raise NotImplementedError

    def predict_proba(self, instance: Instance) -> np.ndarray:
        self._check(instance)
        members = self.voting_members()
        votes = self._votes_for(members, instance)
        self._cached_votes = (instance, votes)
        _, combined = predict_label(members, instance, votes)
        return normalize_votes(combined)

    def predict(self, instance: Instance) -> int:
        self._check(instance)
        members = self.voting_members()
        votes = self._votes_for(members, instance)
        self._cached_votes = (instance, votes)
        label, _ = predict_label(members, instance, votes)
        return label

    @property
    def ensemble_size(self) -> int:
        return len(self.voting_members())

    def snapshot(self) -> tuple:
        """Hashable view of the training state (counters, trees, sets, EWMAs)"""
        raise NotImplementedError

    @staticmethod
    def _member_snapshot(member: EnsembleMember) -> tuple:
        leaves = member.tree.leaves()
        return (member.member_id, member.correct_since_reset, member.total_since_reset,
                member.tree.instances_seen, member.tree.n_splits,
                float(sum(leaf.total_weight for leaf in leaves)), member.monitor.drift_detector.width)


class AdaptiveRandomForest(_Forest):
    """ARF baseline: warning spawns a background tree, drift swaps it in"""

    def __init__(self, schema: Schema, config: Optional[EnsembleConfig] = None):
        super().__init__(schema, config or EnsembleConfig(kind=ARF))
        self.members = [self._new_member() for _ in range(self.config.n_trees)]
        self.background: Dict[int, HoeffdingTree] = {}
        self.n_warnings = 0
        self.n_drifts = 0

    def _monitor_mode(self) -> str:
        return TWO_LEVEL

    def voting_members(self) -> List[EnsembleMember]:
        return self.members

    @property
    def n_trees_trained(self) -> int:
        return len(self.members) + len(self.background)

    def train(self, instance: Instance) -> None:
        self._check(instance)
        votes = self._votes_for(self.members, instance)
        self._cached_votes = None
        predictions = [argmax_lowest(votes[m.member_id]) for m in self.members]
        backgrounds = [self.background.get(m.member_id) for m in self.members]
        signals = self._map(lambda m, p, b: self._train_member(m, instance, p, b),
                            self.members, predictions, backgrounds)
        for member, signal in zip(self.members, signals):
            if signal is Signal.WARNING:
                self.n_warnings += 1
                self.background[member.member_id] = HoeffdingTree(self.schema, self.config.tree, member.tree.rng)
            elif signal is Signal.DRIFT:
                self.n_drifts += 1
                replacement = self.background.pop(member.member_id, None)
                if replacement is not None:
                    member.tree = replacement
                    member.correct_since_reset = 0
                    member.total_since_reset = 0
                else:
                    member.reset()
                logger.debug(f"ARF member {member.member_id} drift at {self.instances_seen}, "
                             f"background={'yes' if replacement is not None else 'no'}")
        self.instances_seen += 1

    def snapshot(self) -> tuple:
        return (tuple(self._member_snapshot(m) for m in self.members),
                tuple(sorted(self.background)))


class ElasticSwapRandomForest(_Forest):
    """Swap component plus, when elastic, grow/shrink of the forefront set"""

    elastic = True

    def __init__(self, schema: Schema, config: Optional[EnsembleConfig] = None):
        super().__init__(schema, config or EnsembleConfig(kind=ESRF))
        cfg = self.config
        self.forefront = [self._new_member() for _ in range(cfg.fs_size)]
        self.candidates = [self._new_member() for _ in range(cfg.cs_size)]
        self.grow_set = [self._new_member() for _ in range(cfg.resize_factor)] if self.elastic else []
        self.ewma_shrunk = EwmaAccuracy(cfg.window, cfg.alpha)
        self.ewma_default = EwmaAccuracy(cfg.window, cfg.alpha)
        self.ewma_grown = EwmaAccuracy(cfg.window, cfg.alpha)
        self.n_grows = 0
        self.n_shrinks = 0
        self.n_swaps = 0
        self.n_suppressed = 0
        self.n_drifts = 0
        self.last_decision = ResizeDecision.KEEP
        self.last_swap: Optional[Tuple[float, float]] = None

    def voting_members(self) -> List[EnsembleMember]:
        return self.forefront

    def all_members(self) -> List[EnsembleMember]:
        return self.forefront + self.candidates + self.grow_set

    @property
    def n_trees_trained(self) -> int:
        return len(self.forefront) + len(self.candidates) + len(self.grow_set)

    def train(self, instance: Instance) -> None:
        """Resize, train every member, then swap: in that order"""
        self._check(instance)
        votes = self._votes_for(self.all_members(), instance)
        self._cached_votes = None
        if self.elastic:
            self.resize_ensemble(instance, votes)
        self.train_all_classifiers(instance, votes)
        self.swap_step()
        self.instances_seen += 1

    # -----------------------------
    # Elastic component
    # -----------------------------
    def forefront_minimum(self) -> List[EnsembleMember]:
        """The r lowest-weight forefront members (ties: lowest member id)"""
        ranked = sorted(self.forefront, key=lambda m: (member_weight(m), m.member_id))
        return ranked[:self.config.resize_factor]

    def check_if_resize(self, true_label: int, y_shrunk: Optional[int], y_default: int,
                        y_grown: int) -> ResizeDecision:
        """Feed the three shadow ensembles' correctness to their EWMAs and decide"""
        self.ewma_shrunk.update(1 if y_shrunk is not None and y_shrunk == true_label else 0)
        self.ewma_default.update(1 if y_default == true_label else 0)
        self.ewma_grown.update(1 if y_grown == true_label else 0)
        delta_shrink = self.ewma_shrunk.value - self.ewma_default.value
        delta_grow = self.ewma_grown.value - self.ewma_default.value
        return resize_decision(delta_grow, delta_shrink,
                               self.config.grow_threshold, self.config.shrink_threshold)

    def resize_ensemble(self, instance: Instance, votes: Optional[Dict[int, np.ndarray]] = None) -> ResizeDecision:
        """Apply the decision; returns what was actually done (suppressed moves are KEEP)"""
        fs_min = self.forefront_minimum()
        min_ids = {m.member_id for m in fs_min}
        shrunk = [m for m in self.forefront if m.member_id not in min_ids]
        y_shrunk = predict_label(shrunk, instance, votes)[0] if shrunk else None
        y_default = predict_label(self.forefront, instance, votes)[0]
        y_grown = predict_label(self.forefront + self.grow_set, instance, votes)[0]
        decision = self.check_if_resize(instance.class_index, y_shrunk, y_default, y_grown)
        r = self.config.resize_factor
        if decision is ResizeDecision.GROW:
            if len(self.forefront) + len(self.candidates) + 2 * r > self.config.max_total:
                self.n_suppressed += 1
                decision = ResizeDecision.KEEP
            else:
                self.forefront.extend(self.grow_set)
                self.grow_set = [self._new_member() for _ in range(r)]
                self.n_grows += 1
                logger.debug(f"Grow to |FS|={len(self.forefront)} at instance {self.instances_seen}")
        elif decision is ResizeDecision.SHRINK:
            if len(self.forefront) - r < self.config.min_fs:
                self.n_suppressed += 1
                decision = ResizeDecision.KEEP
            else:
                self.forefront = shrunk
                self.grow_set = [self._new_member() for _ in range(r)]
                self.n_shrinks += 1
                logger.debug(f"Shrink to |FS|={len(self.forefront)} at instance {self.instances_seen}")
        self.last_decision = decision
        return decision

    # -----------------------------
    # Training and swap
    # -----------------------------
    def train_all_classifiers(self, instance: Instance, votes: Optional[Dict[int, np.ndarray]] = None) -> None:
        members = self.all_members()
        if votes is None or any(m.member_id not in votes for m in members):
            votes = dict(votes or {})
            votes.update(self._votes_for([m for m in members if m.member_id not in votes], instance))
        predictions = [argmax_lowest(votes[m.member_id]) for m in members]
        signals = self._map(lambda m, p: self._train_member(m, instance, p), members, predictions)
        for member, signal in zip(members, signals):
            if signal is Signal.DRIFT:
                self.n_drifts += 1
                member.reset()
                logger.debug(f"Member {member.member_id} reset on drift at instance {self.instances_seen}")

    def swap_step(self) -> bool:
        """Exchange the worst forefront member with the best candidate if the candidate is strictly better"""
        self.last_swap = None
        if not self.candidates or not self.forefront:
            return False
        f_index, f_min = min(enumerate(self.forefront), key=lambda p: (member_weight(p[1]), p[1].member_id))
        c_index, c_max = min(enumerate(self.candidates), key=lambda p: (-member_weight(p[1]), p[1].member_id))
        w_in, w_out = member_weight(c_max), member_weight(f_min)
        if not w_in > w_out:
            return False
        self.forefront[f_index] = c_max
        self.candidates[c_index] = f_min
        self.n_swaps += 1
        self.last_swap = (w_in, w_out)
        return True

    def snapshot(self) -> tuple:
        return (tuple(self._member_snapshot(m) for m in self.forefront),
                tuple(self._member_snapshot(m) for m in self.candidates),
                tuple(self._member_snapshot(m) for m in self.grow_set),
                self.ewma_shrunk.value, self.ewma_default.value, self.ewma_grown.value)


class SwapRandomForest(ElasticSwapRandomForest):
    """Swap component only: fixed |FS|, no grow set, no resizing"""

    elastic = False


def make_learner(schema: Schema, config: EnsembleConfig) -> _Forest:
    if config.kind == ARF:
        return AdaptiveRandomForest(schema, config)
    if config.kind == SRF:
        return SwapRandomForest(schema, config)
    return ElasticSwapRandomForest(schema, config)
