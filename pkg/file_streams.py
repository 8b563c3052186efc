"""
Lazy readers for ARFF and CSV datasets.

Supported ARFF subset: @relation, @attribute (numeric/real/integer or a nominal
value list), @data, '%' comments and '?' missing values. Missing numeric
values become 0.0 and missing nominal values become category 0; every
replacement is counted per column.
"""
import csv
import logging
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from errors import ParseError, UnknownNominalValue, UnsupportedAttribute
from models import AttributeSpec, Instance, MissingValueCounter, Schema

logger = logging.getLogger(__name__)

MISSING = '?'
NUMERIC_TYPES = ('numeric', 'real', 'integer')
UNSUPPORTED_TYPES = ('string', 'date', 'relational')


def _unquote(token: str) -> str:
    token = token.strip()
    if len(token) >= 2 and token[0] == token[-1] and token[0] in ("'", '"'):
        return token[1:-1]
    return token


def _split_fields(text: str, line_number: int) -> List[str]:
    """Comma-separated fields; single or double quotes protect commas, backslash escapes inside quotes"""
    if "'" not in text and '"' not in text:
        return [field.strip() for field in text.split(',')]
    fields: List[str] = []
    current: List[str] = []
    quote = None
    escaped = False
    for ch in text:
        if escaped:
            current.append(ch)
            escaped = False
        elif quote is not None:
            if ch == '\\':
                escaped = True
            elif ch == quote:
                quote = None
            else:
                current.append(ch)
        elif ch in ("'", '"') and not ''.join(current).strip():
            current = []
            quote = ch
        elif ch == ',':
            fields.append(''.join(current).strip())
            current = []
        else:
            current.append(ch)
    if quote is not None:
        raise ParseError(f"unterminated {quote}-quoted value", line_number)
    fields.append(''.join(current).strip())
    return fields


def _parse_attribute_line(line: str, line_number: int) -> AttributeSpec:
    body = line.strip()[len('@attribute'):].strip()
    if not body:
        raise ParseError("empty @attribute declaration", line_number)
    if body[0] in ("'", '"'):
        end = body.find(body[0], 1)
        if end < 0:
            raise ParseError("unterminated attribute name", line_number)
        name, type_text = body[1:end], body[end + 1:].strip()
    else:
        parts = body.split(None, 1)
        if len(parts) < 2:
            raise ParseError(f"attribute '{parts[0]}' has no type", line_number)
        name, type_text = parts
    lowered = type_text.lower()
    if lowered.startswith('{'):
        if not type_text.rstrip().endswith('}'):
            raise ParseError(f"unterminated value list for '{name}'", line_number)
        values = _split_fields(type_text.strip()[1:-1], line_number)
        values = [v for v in values if v != '']
        if not values:
            raise ParseError(f"empty value list for '{name}'", line_number)
        return AttributeSpec.nominal(name, values)
    keyword = lowered.split()[0]
    if keyword in NUMERIC_TYPES:
        return AttributeSpec.numeric(name)
    if keyword in UNSUPPORTED_TYPES:
        raise UnsupportedAttribute(f"{keyword} attribute '{name}' is not supported", line_number)
    raise ParseError(f"unknown attribute type '{type_text}' for '{name}'", line_number)


class _RowDecoder:
    """Turns text fields into an Instance for one (schema, class column) layout"""

    def __init__(self, columns: Sequence[AttributeSpec], class_column: int, missing: MissingValueCounter):
        self.columns = list(columns)
        self.class_column = class_column
        self.missing = missing
        self.lookups = [
            {v: i for i, v in enumerate(spec.values)} if spec.is_nominal else None
            for spec in self.columns
        ]

    def decode(self, fields: List[str], line_number: int) -> Instance:
        if len(fields) != len(self.columns):
            raise ParseError(f"expected {len(self.columns)} fields, found {len(fields)}", line_number)
        values = []
        class_index = 0
        for column, (spec, token) in enumerate(zip(self.columns, fields)):
            if token == MISSING or token == '':
                if self.missing.record(column):
                    logger.warning(f"Missing values in column '{spec.name}', first at line {line_number}")
                value = 0.0
            elif spec.is_nominal:
                try:
                    value = float(self.lookups[column][token])
                except KeyError:
                    raise UnknownNominalValue(token, spec.name, line_number)
            else:
                try:
                    value = float(token)
                except ValueError:
                    raise ParseError(f"'{token}' is not numeric (attribute '{spec.name}')", line_number)
            if column == self.class_column:
                class_index = int(value)
            else:
                values.append(value)
        return Instance(np.array(values), class_index)


def _build_schema(columns: Sequence[AttributeSpec], class_column: int, relation: str) -> Schema:
    class_spec = columns[class_column]
    if not class_spec.is_nominal:
        raise UnsupportedAttribute(f"class attribute '{class_spec.name}' must be nominal")
    attributes = [spec for i, spec in enumerate(columns) if i != class_column]
    return Schema(attributes, class_spec.values, relation=relation)


def _resolve_class_column(class_index: Optional[int], n_columns: int) -> int:
    column = n_columns - 1 if class_index is None else class_index
    if column < 0:
        column += n_columns
    if not 0 <= column < n_columns:
        raise ParseError(f"class column {class_index} outside the {n_columns} columns")
    return column


class ArffReader:
    """Parses the header eagerly; instances are decoded lazily on iteration"""

    def __init__(self, path: str, class_index: Optional[int] = None):
        self.path = path
        self.relation = 'dataset'
        self.columns: List[AttributeSpec] = []
        self.missing = MissingValueCounter()
        self._data_line = self._read_header()
        if not self.columns:
            raise ParseError("no @attribute declarations before @data")
        self.class_column = _resolve_class_column(class_index, len(self.columns))
        self.schema = _build_schema(self.columns, self.class_column, self.relation)

    def _read_header(self) -> int:
        with open(self.path, encoding='utf-8') as handle:
            for line_number, line in enumerate(handle, start=1):
                stripped = line.strip()
                if not stripped or stripped.startswith('%'):
                    continue
                lowered = stripped.lower()
                if lowered.startswith('@relation'):
                    self.relation = _unquote(stripped[len('@relation'):].strip()) or self.relation
                elif lowered.startswith('@attribute'):
                    self.columns.append(_parse_attribute_line(stripped, line_number))
                elif lowered.startswith('@data'):
                    return line_number
                else:
                    raise ParseError(f"unexpected header line '{stripped[:40]}'", line_number)
        raise ParseError("missing @data section")

    def __iter__(self) -> Iterator[Instance]:
        decoder = _RowDecoder(self.columns, self.class_column, self.missing)
        with open(self.path, encoding='utf-8') as handle:
            for line_number, line in enumerate(handle, start=1):
                if line_number <= self._data_line:
                    continue
                stripped = line.strip()
                if not stripped or stripped.startswith('%'):
                    continue
                if stripped.startswith('{'):
                    raise ParseError("sparse ARFF rows are not supported", line_number)
                instance = decoder.decode(_split_fields(stripped, line_number), line_number)
                instance.check(self.schema)
                yield instance


def read_arff(path: str, class_index: Optional[int] = None) -> Tuple[Schema, Iterator[Instance]]:
    """Schema from the header and a lazy instance iterator in file order"""
    reader = ArffReader(path, class_index)
    return reader.schema, iter(reader)


class CsvReader:
    """CSV rows typed against a known schema; the class column defaults to the last field"""

    def __init__(self, path: str, schema: Schema, has_header: bool = False,
                 class_index: Optional[int] = None):
        self.path = path
        self.schema = schema
        self.has_header = has_header
        n_columns = schema.n_attributes + 1
        self.class_column = _resolve_class_column(class_index, n_columns)
        columns = list(schema.attributes)
        columns.insert(self.class_column, AttributeSpec.nominal('class', schema.class_labels))
        self.columns = columns
        self.missing = MissingValueCounter()

    def __iter__(self) -> Iterator[Instance]:
        decoder = _RowDecoder(self.columns, self.class_column, self.missing)
        with open(self.path, newline='', encoding='utf-8') as handle:
            reader = csv.reader(handle)
            skip_header = self.has_header
            try:
                for row in reader:
                    if not row:
                        continue
                    if skip_header:
                        skip_header = False
                        continue
                    instance = decoder.decode([field.strip() for field in row], reader.line_num)
                    instance.check(self.schema)
                    yield instance
            except csv.Error as e:
                raise ParseError(str(e), reader.line_num)


def read_csv(path: str, schema: Schema, has_header: bool = False,
             class_index: Optional[int] = None) -> Iterator[Instance]:
    return iter(CsvReader(path, schema, has_header, class_index))


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def detect_csv_header(path: str, sample_rows: int = 100) -> bool:
    """
    True when the first non-empty row looks like column names: some column is
    numeric in every sampled data row but not in the first row.
    """
    with open(path, newline='', encoding='utf-8') as handle:
        rows = []
        for row in csv.reader(handle):
            if row:
                rows.append([field.strip() for field in row])
            if len(rows) > sample_rows:
                break
    if len(rows) < 2:
        return False
    first, body = rows[0], rows[1:]
    for i, token in enumerate(first):
        if token in (MISSING, '') or _is_number(token):
            continue
        column = [row[i] for row in body if i < len(row) and row[i] not in (MISSING, '')]
        if column and all(_is_number(value) for value in column):
            return True
    return False


def infer_csv_schema(path: str, has_header: bool = False, class_index: Optional[int] = None,
                     relation: str = 'csv') -> Schema:
    """First pass over a CSV file: all-numeric columns become numeric, others nominal (sorted values)"""
    names: Optional[List[str]] = None
    distinct: List[set] = []
    numeric: List[bool] = []
    with open(path, newline='', encoding='utf-8') as handle:
        reader = csv.reader(handle)
        for row in reader:
            if not row:
                continue
            row = [field.strip() for field in row]
            if has_header and names is None:
                names = row
                continue
            if not distinct:
                distinct = [set() for _ in row]
                numeric = [True] * len(row)
            if len(row) != len(distinct):
                raise ParseError(f"expected {len(distinct)} fields, found {len(row)}", reader.line_num)
            for i, token in enumerate(row):
                if token in (MISSING, ''):
                    continue
                distinct[i].add(token)
                if numeric[i] and not _is_number(token):
                    numeric[i] = False
    if not distinct:
        raise ParseError("cannot infer a schema from an empty file")
    if names is not None and len(names) != len(distinct):
        raise ParseError(f"header has {len(names)} names for {len(distinct)} columns", 1)
    names = names or [f"att{i + 1}" for i in range(len(distinct))]
    class_column = _resolve_class_column(class_index, len(distinct))
    columns = []
    for i, name in enumerate(names):
        if i == class_column or not numeric[i]:
            values = sorted(distinct[i], key=lambda v: (float(v), v) if numeric[i] else (0.0, v))
            columns.append(AttributeSpec.nominal(name, values or ['?']))
        else:
            columns.append(AttributeSpec.numeric(name))
    class_spec = columns[class_column]
    attributes = [c for i, c in enumerate(columns) if i != class_column]
    return Schema(attributes, class_spec.values, relation=relation)
