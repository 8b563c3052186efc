"""
Synthetic stream generators and drift composition.

Generators follow the usual stream-mining definitions (SEA, Agrawal, LED,
random tree, random RBF, rotating hyperplane). Each one owns its random
streams; two generators built with the same kind, parameters and seed emit
identical sequences.
"""
import itertools
import logging
from typing import Dict, Iterator, List, Optional

import numpy as np
from scipy.special import expit

from errors import DomainError
from models import AttributeSpec, Instance, Schema, check_same_schema
from utils import RNG_DRIFT, RNG_GENERATOR_INSTANCES, RNG_GENERATOR_MODEL, derive_rng

logger = logging.getLogger(__name__)


class StreamGenerator:
    """Base class: a deterministic, endless source of instances"""

    kind = 'stream'

    def __init__(self, seed: int = 1):
        self.seed = int(seed)
        self.instance_counter = 0
        self.rng = None
        self._schema = None

    @property
    def schema(self) -> Schema:
        return self._schema

    def restart(self) -> None:
        """Rewind to the first instance"""
        self.instance_counter = 0
        self.rng = derive_rng(self.seed, RNG_GENERATOR_INSTANCES)
        self._prepare()

    def _prepare(self) -> None:
        pass

    def _generate(self) -> Instance:
        raise NotImplementedError

    def next_instance(self) -> Instance:
        instance = self._generate()
        self.instance_counter += 1
        return instance

    def __iter__(self) -> Iterator[Instance]:
        while True:
            yield self.next_instance()

    def take(self, n: int) -> Iterator[Instance]:
        return itertools.islice(iter(self), n)

    def parameters(self) -> Dict:
        return {}

    def __repr__(self):
        params = ', '.join(f"{k}={v}" for k, v in self.parameters().items())
        return f"{type(self).__name__}({params}, seed={self.seed})"


def _check_probability(name: str, value: float) -> float:
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must be in [0, 1], got {value}")
    return float(value)


class SEAGenerator(StreamGenerator):
    """Three uniform attributes in [0, 10); class 0 iff attr1 + attr2 <= threshold"""

    kind = 'sea'
    THRESHOLDS = {1: 8.0, 2: 9.0, 3: 7.0, 4: 9.5}

    def __init__(self, function: int = 1, noise: float = 0.1, seed: int = 1):
        super().__init__(seed)
        if function not in self.THRESHOLDS:
            raise DomainError(f"SEA function must be one of 1-4, got {function}")
        self.function = function
        self.threshold = self.THRESHOLDS[function]
        self.noise = _check_probability('noise', noise)
        self._schema = Schema(
            [AttributeSpec.numeric(f"attrib{i + 1}") for i in range(3)],
            ['groupA', 'groupB'], relation=f"sea_f{function}")
        self.restart()

    def parameters(self) -> Dict:
        return {'function': self.function, 'noise': self.noise}

    def classify(self, values) -> int:
        return 0 if values[0] + values[1] <= self.threshold else 1

    def _generate(self) -> Instance:
        values = self.rng.uniform(0.0, 10.0, 3)
        class_index = self.classify(values)
        if self.rng.random() < self.noise:
            class_index = 1 - class_index
        return Instance(values, class_index)


class AgrawalGenerator(StreamGenerator):
    """Loan-application schema with ten classification functions"""

    kind = 'agrawal'

    def __init__(self, function: int = 1, perturbation: float = 0.05, seed: int = 1):
        super().__init__(seed)
        if not 1 <= function <= 10:
            raise DomainError(f"Agrawal function must be in 1-10, got {function}")
        self.function = function
        self.perturbation = _check_probability('perturbation', perturbation)
        self._schema = Schema([
            AttributeSpec.numeric('salary'),
            AttributeSpec.numeric('commission'),
            AttributeSpec.numeric('age'),
            AttributeSpec.nominal('elevel', [f"level{i}" for i in range(5)]),
            AttributeSpec.nominal('car', [f"car{i}" for i in range(1, 21)]),
            AttributeSpec.nominal('zipcode', [f"zipcode{i}" for i in range(1, 10)]),
            AttributeSpec.numeric('hvalue'),
            AttributeSpec.numeric('hyears'),
            AttributeSpec.numeric('loan'),
        ], ['groupA', 'groupB'], relation=f"agrawal_f{function}")
        self.restart()

    def parameters(self) -> Dict:
        return {'function': self.function, 'perturbation': self.perturbation}

    @staticmethod
    def _band(value, low, high) -> int:
        return 0 if low <= value <= high else 1

    def classify(self, salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan) -> int:
        f = self.function
        band = self._band
        if f == 1:
            return 0 if age < 40 or age >= 60 else 1
        if f == 2:
            if age < 40:
                return band(salary, 50000, 100000)
            if age < 60:
                return band(salary, 75000, 125000)
            return band(salary, 25000, 75000)
        if f == 3:
            if age < 40:
                return 0 if elevel in (0, 1) else 1
            if age < 60:
                return 0 if elevel in (1, 2, 3) else 1
            return 0 if elevel in (2, 3, 4) else 1
        if f == 4:
            if age < 40:
                if elevel in (0, 1):
                    return band(salary, 25000, 75000)
                return band(salary, 50000, 100000)
            if age < 60:
                if elevel in (1, 2, 3):
                    return band(salary, 50000, 100000)
                return band(salary, 75000, 125000)
            if elevel in (2, 3, 4):
                return band(salary, 50000, 100000)
            return band(salary, 25000, 75000)
        if f == 5:
            if age < 40:
                if 50000 <= salary <= 100000:
                    return band(loan, 100000, 300000)
                return band(loan, 200000, 400000)
            if age < 60:
                if 75000 <= salary <= 125000:
                    return band(loan, 200000, 400000)
                return band(loan, 300000, 500000)
            if 25000 <= salary <= 75000:
                return band(loan, 300000, 500000)
            return band(loan, 100000, 300000)
        if f == 6:
            total = salary + commission
            if age < 40:
                return band(total, 50000, 100000)
            if age < 60:
                return band(total, 75000, 125000)
            return band(total, 25000, 75000)
        if f == 7:
            disposable = 2.0 * (salary + commission) / 3.0 - loan / 5.0 - 20000.0
        elif f == 8:
            disposable = 2.0 * (salary + commission) / 3.0 - 5000.0 * elevel - 20000.0
        elif f == 9:
            disposable = 2.0 * (salary + commission) / 3.0 - 5000.0 * elevel - loan / 5.0 - 10000.0
        else:
            equity = hvalue * (hyears - 20.0) / 10.0 if hyears >= 20 else 0.0
            disposable = 2.0 * (salary + commission) / 3.0 - 5000.0 * elevel + equity / 5.0 - 10000.0
        return 0 if disposable > 1.0 else 1

    def _perturb(self, value, low, high, span=None):
        span = high - low if span is None else span
        value += span * (2.0 * (self.rng.random() - 0.5)) * self.perturbation
        return min(max(value, low), high)

    def _generate(self) -> Instance:
        rng = self.rng
        salary = 20000.0 + 130000.0 * rng.random()
        commission = 0.0 if salary >= 75000.0 else 10000.0 + 65000.0 * rng.random()
        age = float(20 + rng.integers(61))
        elevel = int(rng.integers(5))
        car = int(rng.integers(20))
        zipcode = int(rng.integers(9))
        hvalue = (9.0 - zipcode) * 100000.0 * (0.5 + rng.random())
        hyears = float(1 + rng.integers(30))
        loan = rng.random() * 500000.0
        class_index = self.classify(salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan)
        if self.perturbation > 0.0:
            salary = self._perturb(salary, 20000.0, 150000.0)
            if commission > 0:
                commission = self._perturb(commission, 10000.0, 75000.0)
            age = float(np.round(self._perturb(age, 20.0, 80.0)))
            hvalue = self._perturb(hvalue, 0.0, 135000.0, span=(9.0 - zipcode) * 100000.0)
            hyears = float(np.round(self._perturb(hyears, 1.0, 30.0)))
            loan = self._perturb(loan, 0.0, 500000.0)
        values = [salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan]
        return Instance(np.array(values), class_index)


class LEDGenerator(StreamGenerator):
    """Seven-segment digits with 17 irrelevant bits; n_drift_features swaps relevant positions"""

    kind = 'led'
    N_RELEVANT = 7
    N_ATTRIBUTES = 24
    SEGMENTS = np.array([
        [1, 1, 1, 0, 1, 1, 1],
        [0, 0, 1, 0, 0, 1, 0],
        [1, 0, 1, 1, 1, 0, 1],
        [1, 0, 1, 1, 0, 1, 1],
        [0, 1, 1, 1, 0, 1, 0],
        [1, 1, 0, 1, 0, 1, 1],
        [1, 1, 0, 1, 1, 1, 1],
        [1, 0, 1, 0, 0, 1, 0],
        [1, 1, 1, 1, 1, 1, 1],
        [1, 1, 1, 1, 0, 1, 1],
    ], dtype=np.float64)

    def __init__(self, noise: float = 0.1, n_drift_features: int = 0, seed: int = 1):
        super().__init__(seed)
        self.noise = _check_probability('noise', noise)
        if not 0 <= n_drift_features <= self.N_RELEVANT:
            raise DomainError(f"n_drift_features must be in [0, 7], got {n_drift_features}")
        self.n_drift_features = n_drift_features
        self._schema = Schema(
            [AttributeSpec.nominal(f"att{i + 1}", ['0', '1']) for i in range(self.N_ATTRIBUTES)],
            [str(d) for d in range(10)], relation=f"led_d{n_drift_features}")
        self.restart()

    def parameters(self) -> Dict:
        return {'noise': self.noise, 'n_drift_features': self.n_drift_features}

    def _prepare(self) -> None:
        # position[k] is the output column that carries logical attribute k
        model_rng = derive_rng(self.seed, RNG_GENERATOR_MODEL)
        position = np.arange(self.N_ATTRIBUTES)
        n_irrelevant = self.N_ATTRIBUTES - self.N_RELEVANT
        for _ in range(self.n_drift_features):
            segment = int(model_rng.integers(self.N_RELEVANT))
            other = self.N_RELEVANT + int(model_rng.integers(n_irrelevant))
            position[segment], position[other] = position[other], position[segment]
        self.position = position

    def _generate(self) -> Instance:
        digit = int(self.rng.integers(10))
        logical = np.empty(self.N_ATTRIBUTES)
        segments = self.SEGMENTS[digit].copy()
        flips = self.rng.random(self.N_RELEVANT) < self.noise
        segments[flips] = 1.0 - segments[flips]
        logical[:self.N_RELEVANT] = segments
        logical[self.N_RELEVANT:] = self.rng.integers(2, size=self.N_ATTRIBUTES - self.N_RELEVANT)
        values = np.empty(self.N_ATTRIBUTES)
        values[self.position] = logical
        return Instance(values, digit)


class _TreeNode:
    __slots__ = ('attribute', 'split_value', 'children', 'class_index')

    def __init__(self):
        self.attribute = None
        self.split_value = 0.0
        self.children: List['_TreeNode'] = []
        self.class_index = 0


class RandomTreeGenerator(StreamGenerator):
    """Labels uniform attributes with a randomly built decision tree"""

    kind = 'rtg'

    def __init__(self, n_classes: int = 2, n_nominal: int = 5, n_numeric: int = 5,
                 n_values: int = 5, max_depth: int = 5, first_leaf_level: int = 3,
                 leaf_fraction: float = 0.15, seed: int = 1):
        super().__init__(seed)
        if n_nominal + n_numeric < 1 or n_classes < 2:
            raise DomainError("random tree generator needs attributes and at least 2 classes")
        if first_leaf_level > max_depth:
            raise DomainError("first_leaf_level cannot exceed max_depth")
        self.n_classes = n_classes
        self.n_nominal = n_nominal
        self.n_numeric = n_numeric
        self.n_values = n_values
        self.max_depth = max_depth
        self.first_leaf_level = first_leaf_level
        self.leaf_fraction = _check_probability('leaf_fraction', leaf_fraction)
        attributes = [AttributeSpec.nominal(f"nominal{i + 1}", [f"value{v + 1}" for v in range(n_values)])
                      for i in range(n_nominal)]
        attributes += [AttributeSpec.numeric(f"numeric{i + 1}") for i in range(n_numeric)]
        self._schema = Schema(attributes, [f"class{c + 1}" for c in range(n_classes)], relation='rtg')
        self.restart()

    def parameters(self) -> Dict:
        return {'max_depth': self.max_depth, 'first_leaf_level': self.first_leaf_level}

    def _prepare(self) -> None:
        model_rng = derive_rng(self.seed, RNG_GENERATOR_MODEL)
        self.root = self._grow(0, list(range(self.n_nominal)),
                               [0.0] * self.n_numeric, [1.0] * self.n_numeric, model_rng)

    def _grow(self, depth, nominal_candidates, low, high, rng) -> _TreeNode:
        node = _TreeNode()
        if depth >= self.max_depth or (
                depth >= self.first_leaf_level and self.leaf_fraction >= 1.0 - rng.random()):
            node.class_index = int(rng.integers(self.n_classes))
            return node
        choice = int(rng.integers(len(nominal_candidates) + self.n_numeric))
        if choice < len(nominal_candidates):
            attribute = nominal_candidates[choice]
            node.attribute = attribute
            remaining = [a for a in nominal_candidates if a != attribute]
            node.children = [self._grow(depth + 1, remaining, low, high, rng) for _ in range(self.n_values)]
        else:
            numeric = choice - len(nominal_candidates)
            node.attribute = self.n_nominal + numeric
            node.split_value = low[numeric] + rng.random() * (high[numeric] - low[numeric])
            left_high = list(high)
            left_high[numeric] = node.split_value
            right_low = list(low)
            right_low[numeric] = node.split_value
            node.children = [self._grow(depth + 1, nominal_candidates, low, left_high, rng),
                             self._grow(depth + 1, nominal_candidates, right_low, high, rng)]
        return node

    def classify(self, values) -> int:
        node = self.root
        while node.children:
            if node.attribute < self.n_nominal:
                node = node.children[int(values[node.attribute])]
            else:
                node = node.children[0 if values[node.attribute] < node.split_value else 1]
        return node.class_index

    def _generate(self) -> Instance:
        values = np.empty(self.n_nominal + self.n_numeric)
        values[:self.n_nominal] = self.rng.integers(self.n_values, size=self.n_nominal)
        values[self.n_nominal:] = self.rng.random(self.n_numeric)
        return Instance(values, self.classify(values))


class RandomRBFGenerator(StreamGenerator):
    """Gaussian clouds around labelled centroids; drifting centroids move at a fixed speed"""

    kind = 'rbf'

    def __init__(self, n_centroids: int = 50, n_attributes: int = 10, n_classes: int = 5,
                 speed: float = 0.0, n_drift_centroids: Optional[int] = None, seed: int = 1):
        super().__init__(seed)
        if n_centroids < 1 or n_attributes < 1 or n_classes < 2:
            raise DomainError("RBF generator needs centroids, attributes and at least 2 classes")
        if speed < 0:
            raise DomainError(f"speed must be non-negative, got {speed}")
        self.n_centroids = n_centroids
        self.n_attributes = n_attributes
        self.n_classes = n_classes
        self.speed = float(speed)
        self.n_drift_centroids = n_centroids if n_drift_centroids is None else min(n_drift_centroids, n_centroids)
        self._schema = Schema([AttributeSpec.numeric(f"att{i + 1}") for i in range(n_attributes)],
                              [f"class{c + 1}" for c in range(n_classes)], relation='rbf')
        self.restart()

    def parameters(self) -> Dict:
        return {'n_centroids': self.n_centroids, 'speed': self.speed,
                'n_drift_centroids': self.n_drift_centroids}

    def _prepare(self) -> None:
        model_rng = derive_rng(self.seed, RNG_GENERATOR_MODEL)
        self.centres = model_rng.random((self.n_centroids, self.n_attributes))
        self.labels = model_rng.integers(self.n_classes, size=self.n_centroids)
        self.std_devs = model_rng.random(self.n_centroids)
        weights = model_rng.random(self.n_centroids)
        self.probabilities = weights / weights.sum()
        directions = model_rng.uniform(-1.0, 1.0, (self.n_drift_centroids, self.n_attributes))
        norms = np.linalg.norm(directions, axis=1, keepdims=True)
        self.velocities = directions / np.where(norms > 0, norms, 1.0) * self.speed

    def _move_centroids(self) -> None:
        k = self.n_drift_centroids
        moved = self.centres[:k] + self.velocities
        out = (moved < 0.0) | (moved > 1.0)
        self.velocities[out] = -self.velocities[out]
        moved[out] = self.centres[:k][out] + self.velocities[out]
        self.centres[:k] = moved

    def _generate(self) -> Instance:
        if self.speed > 0.0 and self.n_drift_centroids > 0:
            self._move_centroids()
        c = int(self.rng.choice(self.n_centroids, p=self.probabilities))
        direction = self.rng.uniform(-1.0, 1.0, self.n_attributes)
        norm = np.linalg.norm(direction)
        if norm > 0:
            direction /= norm
        magnitude = self.rng.standard_normal() * self.std_devs[c]
        return Instance(self.centres[c] + direction * magnitude, int(self.labels[c]))


class HyperplaneGenerator(StreamGenerator):
    """Rotating hyperplane: class 1 iff w.x > sum(w) / 2 (ties go to class 0)"""

    kind = 'hyperplane'

    def __init__(self, n_attributes: int = 10, n_drift_features: int = 10, mag_change: float = 0.001,
                 sigma: float = 0.1, noise: float = 0.05, seed: int = 1):
        super().__init__(seed)
        if n_attributes < 1 or not 0 <= n_drift_features <= n_attributes:
            raise DomainError("hyperplane needs 0 <= n_drift_features <= n_attributes")
        self.n_attributes = n_attributes
        self.n_drift_features = n_drift_features
        self.mag_change = float(mag_change)
        self.sigma = _check_probability('sigma', sigma)
        self.noise = _check_probability('noise', noise)
        self._schema = Schema([AttributeSpec.numeric(f"att{i + 1}") for i in range(n_attributes)],
                              ['class1', 'class2'], relation='hyperplane')
        self.restart()

    def parameters(self) -> Dict:
        return {'mag_change': self.mag_change, 'noise': self.noise, 'n_drift_features': self.n_drift_features}

    def _prepare(self) -> None:
        model_rng = derive_rng(self.seed, RNG_GENERATOR_MODEL)
        self.weights = model_rng.random(self.n_attributes)
        self.directions = np.where(np.arange(self.n_attributes) < self.n_drift_features, 1.0, 0.0)

    def classify(self, values) -> int:
        return 1 if float(np.dot(self.weights, values)) > 0.5 * float(self.weights.sum()) else 0

    def _generate(self) -> Instance:
        values = self.rng.random(self.n_attributes)
        class_index = self.classify(values)
        if self.rng.random() < self.noise:
            class_index = 1 - class_index
        if self.mag_change > 0 and self.n_drift_features > 0:
            k = self.n_drift_features
            self.weights[:k] += self.directions[:k] * self.mag_change
            flips = self.rng.random(k) < self.sigma
            self.directions[:k][flips] *= -1.0
        return Instance(values, class_index)


class ConceptDriftStream(StreamGenerator):
    """
    Switches from `stream` to `drift_stream` around `position`.

    Instance i is drawn from the drift stream with probability
    1 / (1 + exp(-4 (i - position) / width)); width 1 is an abrupt change.
    Only the stream that is drawn from advances.
    """

    kind = 'drift'

    def __init__(self, stream: StreamGenerator, drift_stream: StreamGenerator,
                 position: int, width: int = 1, seed: int = 1):
        super().__init__(seed)
        check_same_schema(stream.schema, drift_stream.schema, 'concept drift stream')
        if width < 1:
            raise DomainError(f"drift width must be a positive integer, got {width}")
        self.stream = stream
        self.drift_stream = drift_stream
        self.position = int(position)
        self.width = int(width)
        self.last_from_drift = False
        self._schema = stream.schema
        self.restart()

    def parameters(self) -> Dict:
        return {'position': self.position, 'width': self.width}

    def restart(self) -> None:
        self.instance_counter = 0
        self.rng = derive_rng(self.seed, RNG_DRIFT)
        if getattr(self, 'stream', None) is not None:
            self.stream.restart()
            self.drift_stream.restart()

    def drift_probability(self, index: int) -> float:
        return float(expit(4.0 * (index - self.position) / self.width))

    def _generate(self) -> Instance:
        p = self.drift_probability(self.instance_counter)
        self.last_from_drift = self.rng.random() < p
        source = self.drift_stream if self.last_from_drift else self.stream
        return source.next_instance()

    def __repr__(self):
        return f"ConceptDriftStream({self.stream!r} -> {self.drift_stream!r}, " \
               f"position={self.position}, width={self.width})"


GENERATORS = {
    SEAGenerator.kind: SEAGenerator,
    AgrawalGenerator.kind: AgrawalGenerator,
    LEDGenerator.kind: LEDGenerator,
    RandomTreeGenerator.kind: RandomTreeGenerator,
    RandomRBFGenerator.kind: RandomRBFGenerator,
    HyperplaneGenerator.kind: HyperplaneGenerator,
}

# generator kind -> keyword of its noise level; kinds without one take no noise
NOISE_PARAMETERS = {
    SEAGenerator.kind: 'noise',
    AgrawalGenerator.kind: 'perturbation',
    LEDGenerator.kind: 'noise',
    HyperplaneGenerator.kind: 'noise',
}


def make_generator(kind: str, seed: int = 1, **parameters) -> StreamGenerator:
    """Build a generator by kind name ('sea', 'agrawal', 'led', 'rtg', 'rbf', 'hyperplane')"""
    try:
        cls = GENERATORS[kind.lower()]
    except KeyError:
        raise DomainError(f"unknown generator kind '{kind}'")
    try:
        return cls(seed=seed, **parameters)
    except TypeError as e:
        raise DomainError(f"bad parameters for generator '{kind}': {e}")
