"""
Random Hoeffding tree: the base learner of the forests.

Each leaf samples its own random attribute subspace and keeps per-class
sufficient statistics for those attributes only. A leaf is split once the
Hoeffding bound shows the best candidate test beats the runner-up.
"""
import math
import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np
from scipy.special import ndtr

from errors import DomainError, SchemaMismatch
from models import Instance, Schema

logger = logging.getLogger(__name__)

MAJORITY_CLASS = 'mc'
NAIVE_BAYES_ADAPTIVE = 'nba'
LEAF_PREDICTIONS = (MAJORITY_CLASS, NAIVE_BAYES_ADAPTIVE)

MIN_BRANCH_FRACTION = 0.01
_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass
class TreeConfig:
    """Hoeffding tree hyper-parameters"""
    split_confidence: float = 0.01
    tie_threshold: float = 0.05
    grace_period: int = 50
    subspace_size: Optional[int] = None
    leaf_prediction: str = NAIVE_BAYES_ADAPTIVE
    max_depth: Optional[int] = None
    n_split_points: int = 10

    def __post_init__(self):
        if not 0.0 < self.split_confidence < 1.0:
            raise DomainError(f"split_confidence must be in (0, 1), got {self.split_confidence}")
        if self.tie_threshold < 0:
            raise DomainError(f"tie_threshold must be >= 0, got {self.tie_threshold}")
        if self.grace_period < 1:
            raise DomainError(f"grace_period must be positive, got {self.grace_period}")
        if self.subspace_size is not None and self.subspace_size < 1:
            raise DomainError(f"subspace_size must be positive, got {self.subspace_size}")
        if self.leaf_prediction not in LEAF_PREDICTIONS:
            raise DomainError(f"leaf_prediction must be one of {LEAF_PREDICTIONS}")
        if self.max_depth is not None and self.max_depth < 0:
            raise DomainError(f"max_depth must be >= 0, got {self.max_depth}")
        if self.n_split_points < 1:
            raise DomainError("n_split_points must be positive")

    def resolved_subspace_size(self, n_attributes: int) -> int:
        """Configured size, or floor(sqrt(M)) + 1, never more than M"""
        size = self.subspace_size
        if size is None:
            size = int(math.floor(math.sqrt(n_attributes))) + 1
        return min(size, n_attributes)


def hoeffding_bound(value_range: float, confidence: float, n: float) -> float:
    """epsilon = sqrt(R^2 ln(1/delta) / (2n))"""
    if not value_range > 0:
        raise DomainError(f"range must be positive, got {value_range}")
    if not 0.0 < confidence < 1.0:
        raise DomainError(f"confidence must be in (0, 1), got {confidence}")
    if not n > 0:
        raise DomainError(f"n must be positive, got {n}")
    return math.sqrt(value_range * value_range * math.log(1.0 / confidence) / (2.0 * n))


def entropy(distribution: np.ndarray) -> float:
    total = float(np.sum(distribution))
    if total <= 0:
        return 0.0
    p = distribution[distribution > 0] / total
    return float(-np.sum(p * np.log2(p)))


def info_gain(pre_split: np.ndarray, post_split: List[np.ndarray]) -> float:
    """Entropy reduction; -inf when fewer than two branches carry 1% of the weight"""
    total = float(np.sum(pre_split))
    if total <= 0:
        return 0.0
    weights = [float(np.sum(d)) for d in post_split]
    if sum(1 for w in weights if w > MIN_BRANCH_FRACTION * total) < 2:
        return float('-inf')
    post_total = sum(weights)
    if post_total <= 0:
        return 0.0
    post_entropy = sum(w / post_total * entropy(d) for w, d in zip(weights, post_split))
    return entropy(pre_split) - post_entropy


# -----------------------------
# Split tests
# -----------------------------
@dataclass(frozen=True)
class NominalSplit:
    """One branch per category"""
    attribute: int
    n_values: int

    def branch(self, values: np.ndarray) -> int:
        return int(values[self.attribute])

    @property
    def n_branches(self) -> int:
        return self.n_values

    def describe(self, schema: Schema, branch: int) -> str:
        spec = schema.attributes[self.attribute]
        return f"{spec.name} = {spec.values[branch]}"


@dataclass(frozen=True)
class NumericBinarySplit:
    """values <= threshold go left (branch 0)"""
    attribute: int
    threshold: float

    def __post_init__(self):
        if not math.isfinite(self.threshold):
            raise DomainError("split threshold must be finite")

    def branch(self, values: np.ndarray) -> int:
        return 0 if values[self.attribute] <= self.threshold else 1

    @property
    def n_branches(self) -> int:
        return 2

    def describe(self, schema: Schema, branch: int) -> str:
        name = schema.attributes[self.attribute].name
        op = '<=' if branch == 0 else '>'
        return f"{name} {op} {self.threshold:.6g}"


@dataclass
class SplitCandidate:
    merit: float
    test: Optional[object]


@dataclass(frozen=True)
class SplitOutcome:
    should_split: bool
    test: Optional[object] = None
    best_merit: float = 0.0
    second_merit: float = 0.0
    epsilon: float = 0.0


NO_SPLIT = SplitOutcome(False)


def decide_split(candidates: List[SplitCandidate], epsilon: float, tie_threshold: float) -> SplitOutcome:
    """
    Split on the best candidate iff best - second > epsilon or epsilon < tie_threshold.

    The "no split" option with merit 0 always competes, so a lone attribute is
    compared against not splitting at all.
    """
    ranked = sorted([c for c in candidates if c.test is not None] + [SplitCandidate(0.0, None)],
                    key=lambda c: c.merit, reverse=True)
    best = ranked[0]
    second = ranked[1] if len(ranked) > 1 else SplitCandidate(0.0, None)
    if best.test is None or not best.merit > 0:
        return SplitOutcome(False, None, best.merit, second.merit, epsilon)
    if best.merit - second.merit > epsilon or epsilon < tie_threshold:
        return SplitOutcome(True, best.test, best.merit, second.merit, epsilon)
    return SplitOutcome(False, None, best.merit, second.merit, epsilon)


# -----------------------------
# Attribute observers
# -----------------------------
class GaussianObserver:
    """
    Per-class weighted mean/variance (Welford) plus min/max of one numeric attribute.

    The inverse standard deviation and density normaliser of a class are
    refreshed whenever that class is updated, so densities() is a handful of
    vector operations.
    """

    __slots__ = ('weights', 'means', 'm2', 'minimums', 'maximums', 'stds', 'inv_stds', 'norms',
                 'degenerate', 'n_degenerate')

    def __init__(self, n_classes: int):
        self.weights = np.zeros(n_classes)
        self.means = np.zeros(n_classes)
        self.m2 = np.zeros(n_classes)
        self.minimums = np.full(n_classes, np.inf)
        self.maximums = np.full(n_classes, -np.inf)
        self.stds = np.zeros(n_classes)
        self.inv_stds = np.zeros(n_classes)
        self.norms = np.zeros(n_classes)
        # seen classes whose variance is still zero
        self.degenerate = np.zeros(n_classes, dtype=bool)
        self.n_degenerate = 0

    def update(self, value: float, class_index: int, weight: float) -> None:
        w_old = self.weights[class_index]
        w_new = w_old + weight
        delta = value - self.means[class_index]
        mean = self.means[class_index] + weight * delta / w_new
        m2 = self.m2[class_index] + weight * delta * (value - mean)
        self.m2[class_index] = m2
        self.means[class_index] = mean
        self.weights[class_index] = w_new
        if value < self.minimums[class_index]:
            self.minimums[class_index] = value
        if value > self.maximums[class_index]:
            self.maximums[class_index] = value
        std = math.sqrt(max(m2 / (w_new - 1.0), 0.0)) if w_new > 1.0 else 0.0
        self.stds[class_index] = std
        was_degenerate = self.degenerate[class_index]
        if std > 0:
            self.inv_stds[class_index] = 1.0 / std
            self.norms[class_index] = 1.0 / (std * _SQRT_2PI)
            if was_degenerate:
                self.degenerate[class_index] = False
                self.n_degenerate -= 1
        else:
            self.inv_stds[class_index] = 0.0
            self.norms[class_index] = 0.0
            if not was_degenerate:
                self.degenerate[class_index] = True
                self.n_degenerate += 1

    def variances(self) -> np.ndarray:
        return np.where(self.weights > 1.0, self.m2 / np.maximum(self.weights - 1.0, 1e-300), 0.0)

    def std_devs(self) -> np.ndarray:
        return self.stds.copy()

    def densities(self, value: float) -> np.ndarray:
        """Per-class Gaussian density at value; a zero-variance class is 1 at its mean, 0 elsewhere"""
        z = (value - self.means) * self.inv_stds
        result = self.norms * np.exp(-0.5 * z * z)
        if self.n_degenerate:
            result[self.degenerate & (self.means == value)] = 1.0
        return result

    def left_weights(self, threshold: float) -> np.ndarray:
        """Estimated per-class weight with value <= threshold"""
        std = self.stds
        left = np.where(self.means <= threshold, self.weights, 0.0)
        positive = std > 0
        if np.any(positive):
            left[positive] = self.weights[positive] * ndtr((threshold - self.means[positive]) / std[positive])
        return left

    def best_split(self, class_counts: np.ndarray, attribute: int, n_points: int) -> SplitCandidate:
        seen = self.weights > 0
        if not np.any(seen):
            return SplitCandidate(float('-inf'), None)
        low = float(np.min(self.minimums[seen]))
        high = float(np.max(self.maximums[seen]))
        if not low < high:
            return SplitCandidate(float('-inf'), None)
        best = SplitCandidate(float('-inf'), None)
        step = (high - low) / (n_points + 1)
        for k in range(1, n_points + 1):
            threshold = low + step * k
            left = self.left_weights(threshold)
            right = np.maximum(self.weights - left, 0.0)
            merit = info_gain(class_counts, [left, right])
            if merit > best.merit:
                best = SplitCandidate(merit, NumericBinarySplit(attribute, threshold))
        return best


class NominalObserver:
    """Per-(value, class) weight table of one nominal attribute"""

    __slots__ = ('counts', 'class_totals')

    def __init__(self, n_values: int, n_classes: int):
        self.counts = np.zeros((n_values, n_classes))
        self.class_totals = np.zeros(n_classes)

    def update(self, value: float, class_index: int, weight: float) -> None:
        self.counts[int(value), class_index] += weight
        self.class_totals[class_index] += weight

    def densities(self, value: float) -> np.ndarray:
        """Laplace-smoothed P(value | class)"""
        return (self.counts[int(value)] + 1.0) / (self.class_totals + self.counts.shape[0])

    def best_split(self, class_counts: np.ndarray, attribute: int, n_points: int) -> SplitCandidate:
        merit = info_gain(class_counts, list(self.counts))
        return SplitCandidate(merit, NominalSplit(attribute, self.counts.shape[0]))


# -----------------------------
# Nodes
# -----------------------------
class LearningNode:
    """
    Leaf with class counts and observers for its sampled subspace.

    Under naive-Bayes-adaptive prediction, votes() remembers the naive Bayes
    argmax for the values it scored; learn() reuses it when the same values
    arrive before the leaf has changed.
    """

    __slots__ = ('class_counts', 'weight', 'observers', 'subspace', 'weight_at_last_check',
                 'mc_correct', 'nb_correct', 'depth', 'nb_hint')

    def __init__(self, n_classes: int, subspace: Tuple[int, ...], depth: int):
        self.class_counts = np.zeros(n_classes)
        self.weight = 0.0
        self.observers = {}
        self.subspace = subspace
        self.weight_at_last_check = 0.0
        self.mc_correct = 0.0
        self.nb_correct = 0.0
        self.depth = depth
        self.nb_hint: Optional[Tuple[np.ndarray, float, int]] = None

    @property
    def total_weight(self) -> float:
        return self.weight

    def is_pure(self) -> bool:
        return int(np.count_nonzero(self.class_counts)) < 2

    def naive_bayes(self, values: np.ndarray) -> np.ndarray:
        total = self.weight
        if total <= 0:
            return np.zeros_like(self.class_counts)
        scores = self.class_counts / total
        for attribute, observer in self.observers.items():
            scores *= observer.densities(values[attribute])
        return scores

    def _naive_bayes_choice(self, values: np.ndarray) -> int:
        hint = self.nb_hint
        if hint is not None and hint[0] is values and hint[1] == self.weight:
            return hint[2]
        return int(np.argmax(self.naive_bayes(values)))

    def votes(self, values: np.ndarray, leaf_prediction: str) -> np.ndarray:
        if leaf_prediction == MAJORITY_CLASS:
            return self.class_counts.copy()
        scores = self.naive_bayes(values)
        self.nb_hint = (values, self.weight, int(np.argmax(scores)))
        if self.mc_correct > self.nb_correct or not np.any(scores > 0):
            return self.class_counts.copy()
        return scores

    def learn(self, values: np.ndarray, class_index: int, weight: float, schema: Schema,
              leaf_prediction: str) -> None:
        if leaf_prediction == NAIVE_BAYES_ADAPTIVE and self.weight > 0:
            if int(np.argmax(self.class_counts)) == class_index:
                self.mc_correct += weight
            if self._naive_bayes_choice(values) == class_index:
                self.nb_correct += weight
        self.nb_hint = None
        self.class_counts[class_index] += weight
        self.weight += weight
        for attribute in self.subspace:
            observer = self.observers.get(attribute)
            if observer is None:
                spec = schema.attributes[attribute]
                if spec.is_nominal:
                    observer = NominalObserver(len(spec.values), schema.n_classes)
                else:
                    observer = GaussianObserver(schema.n_classes)
                self.observers[attribute] = observer
            observer.update(values[attribute], class_index, weight)


class SplitNode:
    """Internal node; keeps the class counts it had when it split"""

    __slots__ = ('test', 'children', 'class_counts', 'subspace', 'depth')

    def __init__(self, test, children: List, class_counts: np.ndarray, subspace: Tuple[int, ...], depth: int):
        self.test = test
        self.children = children
        self.class_counts = class_counts
        self.subspace = subspace
        self.depth = depth


# -----------------------------
# Tree
# -----------------------------
class HoeffdingTree:
    """Incremental random decision tree over a fixed schema"""

    def __init__(self, schema: Schema, config: Optional[TreeConfig] = None,
                 rng: Optional[np.random.Generator] = None):
        self.schema = schema
        self.config = config or TreeConfig()
        self.rng = rng if rng is not None else np.random.default_rng()
        self.subspace_size = self.config.resolved_subspace_size(schema.n_attributes)
        self.value_range = math.log2(schema.n_classes)
        self.instances_seen = 0
        self.n_splits = 0
        self.root = self._new_leaf(0)

    def _sample_subspace(self) -> Tuple[int, ...]:
        chosen = self.rng.choice(self.schema.n_attributes, size=self.subspace_size, replace=False)
        return tuple(sorted(int(a) for a in chosen))

    def _new_leaf(self, depth: int) -> LearningNode:
        return LearningNode(self.schema.n_classes, self._sample_subspace(), depth)

    def _check(self, instance: Instance) -> None:
        if instance.values.shape[0] != self.schema.n_attributes:
            raise SchemaMismatch(
                f"instance has {instance.values.shape[0]} values, tree expects {self.schema.n_attributes}")

    def _find_leaf(self, values: np.ndarray):
        parent, branch, node = None, -1, self.root
        while isinstance(node, SplitNode):
            parent, branch = node, node.test.branch(values)
            node = node.children[branch]
        return node, parent, branch

    def train(self, instance: Instance) -> None:
        """Route the instance to a leaf, update it, and try to split every grace period"""
        self._check(instance)
        weight = instance.weight
        if weight <= 0:
            return
        if not 0 <= instance.class_index < self.schema.n_classes:
            raise SchemaMismatch(f"class index {instance.class_index} outside the schema")
        leaf, parent, branch = self._find_leaf(instance.values)
        leaf.learn(instance.values, instance.class_index, weight, self.schema, self.config.leaf_prediction)
        self.instances_seen += 1
        if self.config.max_depth is not None and leaf.depth >= self.config.max_depth:
            return
        if leaf.total_weight - leaf.weight_at_last_check >= self.config.grace_period:
            outcome = self.attempt_split(leaf)
            leaf.weight_at_last_check = leaf.total_weight
            if outcome.should_split:
                self._apply_split(leaf, parent, branch, outcome.test)

    def attempt_split(self, leaf: LearningNode) -> SplitOutcome:
        if leaf.is_pure():
            return NO_SPLIT
        candidates = [
            leaf.observers[a].best_split(leaf.class_counts, a, self.config.n_split_points)
            for a in leaf.subspace if a in leaf.observers
        ]
        epsilon = hoeffding_bound(self.value_range, self.config.split_confidence, leaf.total_weight)
        return decide_split(candidates, epsilon, self.config.tie_threshold)

    def _apply_split(self, leaf: LearningNode, parent: Optional[SplitNode], branch: int, test) -> None:
        children = [self._new_leaf(leaf.depth + 1) for _ in range(test.n_branches)]
        node = SplitNode(test, children, leaf.class_counts.copy(), leaf.subspace, leaf.depth)
        if parent is None:
            self.root = node
        else:
            parent.children[branch] = node
        self.n_splits += 1

    def predict(self, instance: Instance) -> np.ndarray:
        """
        Non-negative per-class scores from the reached leaf.

        A leaf that has not seen any weight yet answers with the counts its
        parent had when it split; an empty tree answers all zeros.
        """
        self._check(instance)
        leaf, parent, _ = self._find_leaf(instance.values)
        if leaf.total_weight <= 0:
            if parent is not None:
                return parent.class_counts.copy()
            return np.zeros(self.schema.n_classes)
        return leaf.votes(instance.values, self.config.leaf_prediction)

    def reset(self) -> None:
        """Drop all statistics; the rng keeps advancing so later subspaces differ"""
        self.instances_seen = 0
        self.n_splits = 0
        self.root = self._new_leaf(0)

    # -----------------------------
    # Inspection
    # -----------------------------
    def iter_nodes(self) -> Iterator:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if isinstance(node, SplitNode):
                stack.extend(reversed(node.children))

    def leaves(self) -> List[LearningNode]:
        return [n for n in self.iter_nodes() if isinstance(n, LearningNode)]

    @property
    def depth(self) -> int:
        return max(n.depth for n in self.iter_nodes())

    @property
    def n_nodes(self) -> int:
        return sum(1 for _ in self.iter_nodes())

    def describe(self) -> str:
        """Indented text dump of the tree structure"""
        lines = []
        self._describe(self.root, 0, lines)
        return '\n'.join(lines)

    def _describe(self, node, indent: int, lines: List[str]) -> None:
        pad = '  ' * indent
        if isinstance(node, LearningNode):
            counts = ', '.join(f"{c:g}" for c in node.class_counts)
            lines.append(f"{pad}leaf [{counts}]")
            return
        for branch, child in enumerate(node.children):
            lines.append(f"{pad}if {node.test.describe(self.schema, branch)}:")
            self._describe(child, indent + 1, lines)
