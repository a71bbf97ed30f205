"""Trait-table ingestion: parsing, categorical encoding, min-max normalization.

A trait table is delimiter-separated text with a header row.  The first
column holds unit identifiers (genotypes); every other column is a trait,
either numeric or categorical.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .errors import ConfigError, DataError

NUMERIC = "numeric"
CATEGORICAL = "categorical"
KINDS = (NUMERIC, CATEGORICAL)


@dataclass(frozen=True)
class Column:
    name: str
    kind: str = NUMERIC


@dataclass(frozen=True)
class FeatureTable:
    """Raw rows: one unit id plus ``m`` cells (floats or category labels)."""

    unit_ids: tuple[str, ...]
    columns: tuple[Column, ...]
    cells: tuple[tuple[float | str, ...], ...]

    def __post_init__(self):
        n, m = len(self.unit_ids), len(self.columns)
        if n < 2:
            raise DataError(f"fewer than 2 units (got {n})")
        if m < 1:
            raise DataError("table has no trait columns")
        if len(self.cells) != n:
            raise DataError(f"{len(self.cells)} rows of cells for {n} unit ids")
        for uid, row in zip(self.unit_ids, self.cells):
            if len(row) != m:
                raise DataError(f"ragged row for unit {uid!r}: {len(row)} cells, expected {m}")
        seen: set[str] = set()
        for uid in self.unit_ids:
            if uid in seen:
                raise DataError(f"duplicate unit id {uid!r}")
            seen.add(uid)

    @property
    def n(self) -> int:
        return len(self.unit_ids)

    @property
    def m(self) -> int:
        return len(self.columns)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DataError(f"unknown column {name!r}") from None

    def column(self, name: str) -> list[float | str]:
        j = self.column_index(name)
        return [row[j] for row in self.cells]

    def is_numeric(self) -> bool:
        return all(c.kind == NUMERIC for c in self.columns)

    def to_array(self) -> np.ndarray:
        if not self.is_numeric():
            cats = [c.name for c in self.columns if c.kind != NUMERIC]
            raise DataError(f"categorical columns must be encoded first: {cats}")
        return np.array(self.cells, dtype=float)

    def select(self, names: Sequence[str]) -> "FeatureTable":
        """Keep only the named traits, in the given order."""
        idx = [self.column_index(name) for name in names]
        return FeatureTable(
            self.unit_ids,
            tuple(self.columns[j] for j in idx),
            tuple(tuple(row[j] for j in idx) for row in self.cells),
        )

    @classmethod
    def from_array(
        cls,
        values: np.ndarray,
        unit_ids: Sequence[str] | None = None,
        names: Sequence[str] | None = None,
    ) -> "FeatureTable":
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise DataError("expected a 2-d array of trait values")
        n, m = values.shape
        unit_ids = tuple(unit_ids) if unit_ids is not None else tuple(str(i + 1) for i in range(n))
        names = tuple(names) if names is not None else tuple(f"t{j + 1}" for j in range(m))
        return cls(unit_ids, tuple(Column(nm) for nm in names), tuple(map(tuple, values.tolist())))


def parse_table(
    source: str | TextIO,
    schema: Mapping[str, str] | None = None,
    delimiter: str = ",",
    traits: Sequence[str] | None = None,
) -> FeatureTable:
    """Parse delimited text into a :class:`FeatureTable`.

    ``schema`` maps column names to ``"numeric"`` or ``"categorical"``;
    undeclared columns are numeric.  ``traits`` optionally restricts (and
    orders) the kept columns.  Errors name the offending line and column.
    """
    schema = dict(schema or {})
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source, delimiter=delimiter)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("empty input: no header row") from None
    if len(header) < 2:
        raise DataError("header must name a unit id column and at least one trait")
    names = header[1:]
    if len(set(names)) != len(names):
        raise DataError(f"duplicate column names in header: {names}")

    for name, kind in schema.items():
        if name not in names:
            raise ConfigError(f"schema names unknown column {name!r}")
        if kind not in KINDS:
            raise ConfigError(f"column {name!r}: kind must be one of {KINDS}, got {kind!r}")
    keep = list(traits) if traits is not None else names
    for name in keep:
        if name not in names:
            raise ConfigError(f"trait {name!r} is not a column of the input")
    keep_idx = [names.index(name) for name in keep]
    kinds = [schema.get(name, NUMERIC) for name in keep]

    unit_ids: list[str] = []
    rows: list[tuple[float | str, ...]] = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(reader, start=2):
        if not raw or all(not c.strip() for c in raw):
            continue
        if len(raw) != len(header):
            raise DataError(f"line {lineno}: ragged row with {len(raw) - 1} trait cells, expected {len(names)}")
        uid = raw[0].strip()
        if uid in seen:
            raise DataError(f"line {lineno}: duplicate unit id {uid!r} (first seen on line {seen[uid]})")
        seen[uid] = lineno
        row: list[float | str] = []
        for j, kind in zip(keep_idx, kinds):
            cell = raw[j + 1].strip()
            if cell == "":
                raise DataError(f"line {lineno}, column {names[j]!r}: missing value")
            if kind == NUMERIC:
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(f"line {lineno}, column {names[j]!r}: cannot parse {cell!r} as a number") from None
                if not math.isfinite(value):
                    raise DataError(f"line {lineno}, column {names[j]!r}: non-finite value {cell!r}")
                row.append(value)
            else:
                row.append(cell)
        unit_ids.append(uid)
        rows.append(tuple(row))

    if len(rows) < 2:
        raise DataError(f"fewer than 2 units (got {len(rows)})")
    columns = tuple(Column(name, kind) for name, kind in zip(keep, kinds))
    return FeatureTable(tuple(unit_ids), columns, tuple(rows))


def read_table(path, schema=None, delimiter=",", traits=None) -> FeatureTable:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_table(fh, schema=schema, delimiter=delimiter, traits=traits)


def _as_code_map(spec: Sequence[str] | Mapping[str, float]) -> dict[str, float]:
    if isinstance(spec, Mapping):
        return {str(k): float(v) for k, v in spec.items()}
    labels = list(spec)
    if len(set(labels)) != len(labels):
        raise ConfigError(f"encoding lists a label twice: {labels}")
    return {label: float(i) for i, label in enumerate(labels)}


def encode_categorical(
    table: FeatureTable, maps: Mapping[str, Sequence[str] | Mapping[str, float]]
) -> FeatureTable:
    """Replace categorical cells by ordinal codes.

    A map is either an ordered label list (codes 0, 1, 2, ...) or an explicit
    label-to-code mapping.
    """
    codes = {name: _as_code_map(spec) for name, spec in maps.items()}
    columns = list(table.columns)
    cells = [list(row) for row in table.cells]
    for j, col in enumerate(table.columns):
        if col.kind != CATEGORICAL:
            continue
        if col.name not in codes:
            raise ConfigError(f"no encoding map for categorical column {col.name!r}")
        cmap = codes[col.name]
        for uid, row in zip(table.unit_ids, cells):
            label = row[j]
            if label not in cmap:
                raise DataError(f"column {col.name!r}: unmapped label {label!r} (unit {uid!r})")
            row[j] = cmap[label]
        columns[j] = Column(col.name, NUMERIC)
    return FeatureTable(table.unit_ids, tuple(columns), tuple(map(tuple, cells)))


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NormalizedTable:
    """Min-max normalized trait matrix plus per-unit deviation scores.

    ``deviations[i]`` sums, over traits, how far unit ``i`` sits below the
    best (largest) normalized value of that trait.
    """

    unit_ids: tuple[str, ...]
    names: tuple[str, ...]
    values: np.ndarray
    deviations: np.ndarray
    column_mins: np.ndarray
    column_maxs: np.ndarray
    raw: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]


def deviations(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return (values.max(axis=0) - values).sum(axis=1)


def normalize(table: FeatureTable | np.ndarray) -> NormalizedTable:
    """Scale each trait to [0, 1]; constant traits become all zeros."""
    if not isinstance(table, FeatureTable):
        table = FeatureTable.from_array(table)
    raw = table.to_array()
    if not np.all(np.isfinite(raw)):
        raise DataError("non-finite trait values")
    lo = raw.min(axis=0)
    hi = raw.max(axis=0)
    span = hi - lo
    constant = span == 0
    values = (raw - lo) / np.where(constant, 1.0, span)
    values[:, constant] = 0.0
    return NormalizedTable(
        unit_ids=table.unit_ids,
        names=table.names,
        values=_frozen(values),
        deviations=_frozen(deviations(values)),
        column_mins=_frozen(lo),
        column_maxs=_frozen(hi),
        raw=_frozen(raw),
    )


def load_normalized(
    path,
    schema: Mapping[str, str] | None = None,
    encodings: Mapping[str, Iterable[str]] | None = None,
    delimiter: str = ",",
    traits: Sequence[str] | None = None,
) -> tuple[FeatureTable, NormalizedTable]:
    """Parse, encode and normalize a trait file in one step."""
    table = read_table(path, schema=schema, delimiter=delimiter, traits=traits)
    encoded = encode_categorical(table, encodings or {})
    return table, normalize(encoded)
