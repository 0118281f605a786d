"""Dynamically typed cell values and their comparison semantics.

A cell value is a plain Python object drawn from six kinds:

    null     -> None
    boolean  -> bool
    number   -> float (64-bit, never NaN; NaN normalizes to null)
    text     -> str
    list     -> list of values
    map      -> dict of str -> value (insertion-ordered, unique keys)

Plain Python equality is *not* safe for these values (True == 1.0, and
dict/list comparison ignores kind), so all structural work goes through
``values_equal``, ``value_key``, and ``compare`` below.
"""

from __future__ import annotations

import enum
import math
import re
from typing import Any, Iterable

Value = Any  # one of: None, bool, float, str, list, dict


class Kind(enum.IntEnum):
    """Value kinds, ordered by the tie-break convention used everywhere."""

    NULL = 0
    BOOLEAN = 1
    NUMBER = 2
    TEXT = 3
    LIST = 4
    MAP = 5


class Ordering(enum.Enum):
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"
    INCOMPARABLE = "incomparable"


def kind_of(value: Value) -> Kind:
    if value is None:
        return Kind.NULL
    if isinstance(value, bool):  # must precede the number check
        return Kind.BOOLEAN
    if isinstance(value, (int, float)):
        return Kind.NUMBER
    if isinstance(value, str):
        return Kind.TEXT
    if isinstance(value, (list, tuple)):
        return Kind.LIST
    if isinstance(value, dict):
        return Kind.MAP
    raise TypeError(f"not a value: {value!r}")


def normalize(value: Value) -> Value:
    """Coerce arbitrary input into the canonical value representation.

    Ints become floats, NaN and infinities become null, tuples become
    lists, and map keys must be text. Idempotent.
    """
    kind = kind_of(value)
    if kind is Kind.NUMBER:
        f = float(value)
        return None if not math.isfinite(f) else f
    if kind is Kind.LIST:
        return [normalize(v) for v in value]
    if kind is Kind.MAP:
        out = {}
        for k, v in value.items():
            if not isinstance(k, str):
                raise TypeError(f"map keys must be text, got {k!r}")
            out[k] = normalize(v)
        return out
    return value


def values_equal(a: Value, b: Value) -> bool:
    """Deep structural equality; kinds must match (true != 1.0)."""
    ka, kb = kind_of(a), kind_of(b)
    if ka is not kb:
        return False
    if ka is Kind.LIST:
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    if ka is Kind.MAP:
        if len(a) != len(b):
            return False
        return all(k in b and values_equal(v, b[k]) for k, v in a.items())
    return a == b


def value_key(value: Value) -> tuple:
    """Hashable key with the same equivalence classes as values_equal."""
    kind = kind_of(value)
    if kind is Kind.LIST:
        return (kind.value, tuple(value_key(v) for v in value))
    if kind is Kind.MAP:
        return (kind.value, tuple((k, value_key(v)) for k, v in value.items()))
    return (kind.value, value)


def compare(a: Value, b: Value) -> Ordering:
    """Order two values.

    Total within one scalar kind (numeric order, lexicographic text,
    false < true). Null sorts before every non-null value. Everything
    else, including any pair involving a list or map, is incomparable.
    """
    ka, kb = kind_of(a), kind_of(b)
    if ka is Kind.NULL and kb is Kind.NULL:
        return Ordering.EQUAL
    if ka is Kind.NULL:
        return Ordering.LESS
    if kb is Kind.NULL:
        return Ordering.GREATER
    if ka is not kb or ka in (Kind.LIST, Kind.MAP):
        return Ordering.INCOMPARABLE
    if ka is Kind.BOOLEAN:
        a, b = int(a), int(b)
    if a < b:
        return Ordering.LESS
    if a > b:
        return Ordering.GREATER
    return Ordering.EQUAL


def sort_key(value: Value) -> tuple:
    """Deterministic total-order key (kind rank, then in-kind order).

    Used for sorting rows in views; consistent with ``compare`` wherever
    compare is not incomparable.
    """
    kind = kind_of(value)
    if kind is Kind.NULL:
        return (0,)
    if kind is Kind.BOOLEAN:
        return (1, int(value))
    if kind is Kind.NUMBER:
        return (2, value)
    if kind is Kind.TEXT:
        return (3, value)
    # lists/maps have no in-kind order; fall back to their canonical key
    return (kind.value + 1, repr(value_key(value)))


_NUMERAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def infer_cell(raw: str) -> Value:
    """Type a raw text cell the way CSV import does.

    Empty text is null, "true"/"false" (any case) are booleans, strict
    decimal numerals are numbers, everything else stays text. Total.
    """
    if raw == "":
        return None
    low = raw.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    if _NUMERAL.match(raw):
        f = float(raw)
        return f if math.isfinite(f) else raw
    return raw


def canonical_number(value: float) -> str:
    """Shortest stable rendering: integral floats drop the trailing .0."""
    if value == int(value) and abs(value) <= 2**53:
        return str(int(value))
    return repr(value)


def to_text(value: Value) -> str:
    """Render a value as display text (null -> empty string)."""
    kind = kind_of(value)
    if kind is Kind.NULL:
        return ""
    if kind is Kind.BOOLEAN:
        return "true" if value else "false"
    if kind is Kind.NUMBER:
        return canonical_number(value)
    if kind is Kind.TEXT:
        return value
    from graphloom.io import canonical_dumps  # deferred: io imports values

    return canonical_dumps(value)


class ColumnSummary:
    """Per-kind counts over one column of values."""

    __slots__ = ("counts", "total")

    def __init__(self, values: Iterable[Value]):
        self.counts = {kind: 0 for kind in Kind}
        self.total = 0
        for v in values:
            self.counts[kind_of(v)] += 1
            self.total += 1

    @property
    def dominant(self) -> Kind:
        best = Kind.NULL
        for kind in Kind:  # ascending kind order breaks ties low
            if self.counts[kind] > self.counts[best]:
                best = kind
        return best

    def as_map(self) -> dict:
        out = {kind.name.lower(): float(n) for kind, n in self.counts.items()}
        out["dominant"] = self.dominant.name.lower()
        out["total"] = float(self.total)
        return out


def summarize_column(values: Iterable[Value]) -> ColumnSummary:
    return ColumnSummary(values)
