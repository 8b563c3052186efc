from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from errors import SchemaMismatch

NUMERIC = 'numeric'
NOMINAL = 'nominal'


@dataclass(frozen=True)
class AttributeSpec:
    """One input attribute: numeric, or nominal with a fixed value list"""
    name: str
    kind: str = NUMERIC
    values: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (NUMERIC, NOMINAL):
            raise SchemaMismatch(f"attribute '{self.name}' has unknown kind '{self.kind}'")
        if self.kind == NOMINAL:
            if not self.values:
                raise SchemaMismatch(f"nominal attribute '{self.name}' has no values")
            if len(set(self.values)) != len(self.values):
                raise SchemaMismatch(f"nominal attribute '{self.name}' has duplicate values")
        elif self.values:
            raise SchemaMismatch(f"numeric attribute '{self.name}' cannot declare values")

    @property
    def is_nominal(self) -> bool:
        return self.kind == NOMINAL

    @classmethod
    def numeric(cls, name: str) -> 'AttributeSpec':
        return cls(name, NUMERIC)

    @classmethod
    def nominal(cls, name: str, values: Sequence[str]) -> 'AttributeSpec':
        return cls(name, NOMINAL, tuple(values))


@dataclass(frozen=True)
class Schema:
    """Ordered attributes plus class labels shared by every instance of a stream"""
    attributes: Tuple[AttributeSpec, ...]
    class_labels: Tuple[str, ...]
    relation: str = 'stream'

    def __post_init__(self):
        object.__setattr__(self, 'attributes', tuple(self.attributes))
        object.__setattr__(self, 'class_labels', tuple(self.class_labels))
        if len(self.attributes) < 1:
            raise SchemaMismatch("schema needs at least one attribute")
        if len(self.class_labels) < 2:
            raise SchemaMismatch("schema needs at least two class labels")
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise SchemaMismatch("attribute names must be unique")

    @property
    def n_attributes(self) -> int:
        return len(self.attributes)

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)

    @property
    def nominal_indices(self) -> List[int]:
        return [i for i, a in enumerate(self.attributes) if a.is_nominal]

    def describe(self) -> str:
        return f"{self.relation}: {self.n_attributes} attrs, {self.n_classes} labels"


@dataclass
class Instance:
    """One labelled stream example"""
    values: np.ndarray
    class_index: int
    weight: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)

    def with_weight(self, weight: float) -> 'Instance':
        return replace(self, weight=float(weight))

    def check(self, schema: Schema) -> None:
        """Raise SchemaMismatch unless this instance satisfies the schema invariants"""
        if self.values.shape != (schema.n_attributes,):
            raise SchemaMismatch(
                f"instance has {self.values.size} values, schema expects {schema.n_attributes}")
        if not 0 <= self.class_index < schema.n_classes:
            raise SchemaMismatch(f"class index {self.class_index} outside [0, {schema.n_classes})")
        if not self.weight >= 0:
            raise SchemaMismatch(f"negative instance weight {self.weight}")
        for i in schema.nominal_indices:
            v = self.values[i]
            n_values = len(schema.attributes[i].values)
            if v != int(v) or not 0 <= v < n_values:
                raise SchemaMismatch(
                    f"nominal value {v} of '{schema.attributes[i].name}' outside its {n_values} values")


@dataclass
class MissingValueCounter:
    """Per-attribute count of '?' values replaced while reading a file"""
    counts: List[int] = field(default_factory=list)

    def record(self, attribute_index: int) -> bool:
        """Count one missing value; True the first time the attribute is seen missing"""
        while len(self.counts) <= attribute_index:
            self.counts.append(0)
        self.counts[attribute_index] += 1
        return self.counts[attribute_index] == 1

    @property
    def total(self) -> int:
        return sum(self.counts)

    def for_attribute(self, attribute_index: int) -> int:
        return self.counts[attribute_index] if attribute_index < len(self.counts) else 0


def check_same_schema(first: Schema, second: Schema, context: Optional[str] = None) -> None:
    """Attributes and labels must match; the relation name may differ"""
    if (first.attributes, first.class_labels) != (second.attributes, second.class_labels):
        where = f" ({context})" if context else ""
        raise SchemaMismatch(f"streams disagree on schema{where}")
