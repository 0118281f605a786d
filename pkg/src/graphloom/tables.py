"""The table network: static and derived tables under lazy evaluation.

Tables sit beneath the interpreted network model. Static tables hold
imported rows; derived tables hold a specification (expand, unroll,
facet, promote, or an op-supplied computation) and materialize on first
demand. Results are cached per table; mutating an upstream spec
invalidates exactly the downstream transitive closure.

Row identity is ordinal-based: RowId = (table id, position in canonical
row order), stable across re-evaluation of an unchanged spec.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from graphloom.errors import (
    CyclicDerivation,
    DanglingSource,
    NameCollision,
    UnknownAttribute,
    UnknownTable,
)
from graphloom.values import Kind, Value, kind_of, normalize, value_key


class _Index:
    """Sentinel key meaning "match on the row ordinal"."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INDEX"


INDEX = _Index()

Key = object  # attribute name (str) or INDEX


@dataclass(eq=False)
class TableLink:
    """Key-based row matching between two tables.

    A source row matches a target row when their key cells are deeply
    equal; a list-valued cell matches when any element equals the other
    side. Null keys never match anything, null included.
    """

    source_table: str
    source_key: Key
    target_table: str
    target_key: Key


@dataclass(frozen=True)
class ExpandedSpec:
    """Map attribute exploded into sibling columns, one row per source row."""

    source_id: str
    attr: str

    @property
    def source_ids(self) -> tuple[str, ...]:
        return (self.source_id,)

    def compute(self, network: "TableNetwork"):
        rows = network.evaluate(self.source_id)
        names: list[str] = ["_origin"]
        for row in rows:
            cell = row.get(self.attr)
            if kind_of(cell) is Kind.MAP:
                for key in cell:
                    if key not in names:
                        names.append(key)
        out = []
        for ordinal, row in enumerate(rows):
            cell = row.get(self.attr)
            new_row = {name: None for name in names}
            new_row["_origin"] = float(ordinal)
            if kind_of(cell) is Kind.MAP:
                for key, val in cell.items():
                    new_row[key] = val
            out.append(new_row)
        return names, out


@dataclass(frozen=True)
class UnrolledSpec:
    """List attribute flattened to one row per element, with backlink."""

    source_id: str
    attr: str

    @property
    def source_ids(self) -> tuple[str, ...]:
        return (self.source_id,)

    def compute(self, network: "TableNetwork"):
        rows = network.evaluate(self.source_id)
        names: list[str] = ["_origin"]
        has_scalar = False
        for row in rows:
            cell = row.get(self.attr)
            if kind_of(cell) is not Kind.LIST:
                continue
            for element in cell:
                if kind_of(element) is Kind.MAP:
                    for key in element:
                        if key not in names:
                            names.append(key)
                else:
                    has_scalar = True
        if has_scalar and "value" not in names:
            names.append("value")
        out = []
        for ordinal, row in enumerate(rows):
            cell = row.get(self.attr)
            if kind_of(cell) is not Kind.LIST:
                continue
            for element in cell:
                new_row = {name: None for name in names}
                new_row["_origin"] = float(ordinal)
                if kind_of(element) is Kind.MAP:
                    for key, val in element.items():
                        new_row[key] = val
                else:
                    new_row["value"] = element
                out.append(new_row)
        return names, out


@dataclass(frozen=True)
class FacetedSpec:
    """Rows of the source whose attribute deeply equals one value."""

    source_id: str
    attr: str
    match_key: tuple  # value_key of the facet value

    @property
    def source_ids(self) -> tuple[str, ...]:
        return (self.source_id,)

    def compute(self, network: "TableNetwork"):
        rows = network.evaluate(self.source_id)
        names = list(network.attribute_names(self.source_id))
        out = [dict(r) for r in rows if r.get(self.attr) is not None and value_key(r[self.attr]) == self.match_key]
        return names, out


@dataclass(frozen=True)
class PromotedSpec:
    """Unique non-null values of one attribute, first-seen order."""

    source_id: str
    attr: str

    @property
    def source_ids(self) -> tuple[str, ...]:
        return (self.source_id,)

    def compute(self, network: "TableNetwork"):
        rows = network.evaluate(self.source_id)
        seen = set()
        out = []
        for row in rows:
            cell = row.get(self.attr)
            if cell is None:
                continue
            key = value_key(cell)
            if key in seen:
                continue
            seen.add(key)
            out.append({self.attr: cell})
        return [self.attr], out


@dataclass(frozen=True)
class ComputedSpec:
    """Op-supplied derivation: fixed sources plus a compute callback.

    The callback receives the network and returns (attribute names, rows).
    Used for match-pair edge tables, pair expansions, projections, rollups,
    supernodes, and connectivity-based derivation/filtering.
    """

    source_ids: tuple[str, ...]
    compute_fn: Callable = field(compare=False)
    label: str = "computed"

    def compute(self, network: "TableNetwork"):
        return self.compute_fn(network)


@dataclass(eq=False)
class Table:
    id: str
    name: str
    derivation: object | None = None  # None means static
    attribute_names: Optional[list[str]] = None  # known lazily for derived
    static_rows: Optional[tuple] = None
    renames: dict = field(default_factory=dict)  # computed name -> display name

    @property
    def is_static(self) -> bool:
        return self.derivation is None

    @property
    def source_ids(self) -> tuple[str, ...]:
        return () if self.is_static else tuple(self.derivation.source_ids)


class TableNetwork:
    """Registry of tables and links with lazy, cached evaluation."""

    def __init__(self, warn: Callable[[str], None] | None = None):
        self.tables: dict[str, Table] = {}
        self.links: list[TableLink] = []
        self.cache_enabled = True  # off trades row identity for freshness
        self.generation = 0
        self._ids = itertools.count()
        self._row_cache: dict[str, tuple] = {}
        self._name_cache: dict[str, tuple[str, ...]] = {}
        self._match_cache: dict[int, tuple] = {}
        self._eval_stack: list[str] = []
        self._warn = warn or (lambda message: None)

    # -- registration ------------------------------------------------------

    def _new_id(self) -> str:
        return f"t{next(self._ids)}"

    def add_static_table(self, name: str, attribute_names: Sequence[str], rows: Iterable[dict]) -> Table:
        names = list(attribute_names)
        if len(set(names)) != len(names):
            raise NameCollision(f"duplicate attribute names in table {name!r}")
        stored = []
        extra_keys = 0
        for row in rows:
            clean = {}
            for key in names:
                clean[key] = normalize(row.get(key))
            extra_keys += sum(1 for key in row if key not in clean)
            stored.append(clean)
        if extra_keys:
            self._warn(f"table {name!r}: ignored {extra_keys} cell(s) outside the declared attributes")
        table = Table(id=self._new_id(), name=name, attribute_names=names, static_rows=tuple(stored))
        self.tables[table.id] = table
        self._bump()
        return table

    def add_derived_table(self, name: str, derivation) -> Table:
        for source in derivation.source_ids:
            if source not in self.tables:
                raise DanglingSource(f"derived table {name!r} references missing table {source!r}")
        table = Table(id=self._new_id(), name=name, derivation=derivation)
        self.tables[table.id] = table
        self._bump()
        return table

    def add_link(self, link: TableLink) -> TableLink:
        self._require(link.source_table)
        self._require(link.target_table)
        self._check_key(link.source_table, link.source_key)
        self._check_key(link.target_table, link.target_key)
        self.links.append(link)
        self._bump()
        return link

    def _require(self, table_id: str) -> Table:
        if table_id not in self.tables:
            raise UnknownTable(f"no table {table_id!r}")
        return self.tables[table_id]

    def _check_key(self, table_id: str, key: Key) -> None:
        if key is INDEX:
            return
        if key not in self.attribute_names(table_id):
            raise UnknownAttribute(f"table {table_id!r} has no attribute {key!r}")

    # -- evaluation --------------------------------------------------------

    def evaluate(self, table_id: str) -> tuple:
        """Materialized rows, computed on first demand and cached.

        Repeated calls return the identical tuple until an upstream spec
        mutation invalidates this table.
        """
        table = self._require(table_id)
        if table_id in self._row_cache:
            return self._row_cache[table_id]
        if table_id in self._eval_stack:
            chain = " -> ".join(self._eval_stack + [table_id])
            raise CyclicDerivation(f"cycle in derived tables: {chain}")
        if table.is_static:
            names = tuple(table.attribute_names)
            rows = table.static_rows
        else:
            self._eval_stack.append(table_id)
            try:
                raw_names, raw_rows = table.derivation.compute(self)
            finally:
                self._eval_stack.pop()
            names = tuple(table.renames.get(n, n) for n in raw_names)
            if table.renames:
                rows = tuple({table.renames.get(k, k): v for k, v in row.items()} for row in raw_rows)
            else:
                rows = tuple(raw_rows)
        self._name_cache[table_id] = names
        if self.cache_enabled:
            self._row_cache[table_id] = rows
        return rows

    def attribute_names(self, table_id: str) -> tuple[str, ...]:
        table = self._require(table_id)
        if table.is_static:
            return tuple(table.attribute_names)
        if table_id not in self._name_cache:
            self.evaluate(table_id)
        return self._name_cache[table_id]

    def row_count(self, table_id: str) -> int:
        return len(self.evaluate(table_id))

    # -- structural operations ----------------------------------------------

    def expand(self, table_id: str, attr: str) -> Table:
        """Map attribute to sibling columns in a child table."""
        self._require(table_id)
        if attr not in self.attribute_names(table_id):
            raise UnknownAttribute(f"table {table_id!r} has no attribute {attr!r}")
        name = f"{self.tables[table_id].name}.{attr}"
        return self.add_derived_table(name, ExpandedSpec(table_id, attr))

    def unroll(self, table_id: str, attr: str) -> Table:
        """List attribute to one row per element; links back to the source."""
        self._require(table_id)
        if attr not in self.attribute_names(table_id):
            raise UnknownAttribute(f"table {table_id!r} has no attribute {attr!r}")
        name = f"{self.tables[table_id].name}.{attr}"
        table = self.add_derived_table(name, UnrolledSpec(table_id, attr))
        self.add_link(TableLink(table.id, "_origin", table_id, INDEX))
        return table

    def promote_table(self, table_id: str, attr: str) -> Table:
        self._require(table_id)
        if attr not in self.attribute_names(table_id):
            raise UnknownAttribute(f"table {table_id!r} has no attribute {attr!r}")
        name = f"{self.tables[table_id].name}.{attr} (unique)"
        return self.add_derived_table(name, PromotedSpec(table_id, attr))

    def facet_table(self, table_id: str, attr: str, value: Value, label: str) -> Table:
        self._require(table_id)
        if attr not in self.attribute_names(table_id):
            raise UnknownAttribute(f"table {table_id!r} has no attribute {attr!r}")
        return self.add_derived_table(label, FacetedSpec(table_id, attr, value_key(value)))

    def rename_attribute(self, table_id: str, old: str, new: str) -> None:
        table = self._require(table_id)
        names = self.attribute_names(table_id)
        if old not in names:
            raise UnknownAttribute(f"table {table_id!r} has no attribute {old!r}")
        if new in names:
            raise NameCollision(f"table {table_id!r} already has attribute {new!r}")
        if table.is_static:
            table.attribute_names = [new if n == old else n for n in table.attribute_names]
            table.static_rows = tuple({(new if k == old else k): v for k, v in row.items()} for row in table.static_rows)
        else:
            # map the *computed* name that currently displays as `old`
            computed = next((k for k, v in table.renames.items() if v == old), old)
            table.renames[computed] = new
        for link in self.links:
            if link.source_table == table_id and link.source_key == old:
                link.source_key = new
            if link.target_table == table_id and link.target_key == old:
                link.target_key = new
        self.invalidate(table_id)

    def replace_static_rows(self, table_id: str, rows: Iterable[dict]) -> None:
        table = self._require(table_id)
        if not table.is_static:
            raise UnknownTable(f"table {table_id!r} is not static")
        table.static_rows = tuple({k: normalize(row.get(k)) for k in table.attribute_names} for row in rows)
        self.invalidate(table_id)

    # -- cache management ----------------------------------------------------

    def _bump(self) -> None:
        self.generation += 1

    def dependents(self, table_id: str) -> set[str]:
        """Transitive closure of tables derived from the given one."""
        out: set[str] = set()
        frontier = [table_id]
        while frontier:
            current = frontier.pop()
            for table in self.tables.values():
                if current in table.source_ids and table.id not in out:
                    out.add(table.id)
                    frontier.append(table.id)
        return out

    def invalidate(self, table_id: str) -> None:
        """Drop cached rows for a table and everything downstream of it."""
        for tid in {table_id} | self.dependents(table_id):
            self._row_cache.pop(tid, None)
            self._name_cache.pop(tid, None)
        self._bump()

    # -- link matching --------------------------------------------------------

    def match_map(self, link: TableLink) -> dict[int, tuple[int, ...]]:
        """Source ordinal -> matching target ordinals (ascending), cached."""
        src_rows = self.evaluate(link.source_table)
        trg_rows = self.evaluate(link.target_table)
        cached = self._match_cache.get(id(link))
        if cached is not None and cached[0] is src_rows and cached[1] is trg_rows:
            return cached[2]
        index: dict[tuple, list[int]] = {}
        for ordinal, row in enumerate(trg_rows):
            for key in _cell_keys(row, link.target_key, ordinal):
                index.setdefault(key, []).append(ordinal)
        mapping: dict[int, tuple[int, ...]] = {}
        for ordinal, row in enumerate(src_rows):
            hits: set[int] = set()
            for key in _cell_keys(row, link.source_key, ordinal):
                hits.update(index.get(key, ()))
            if hits:
                mapping[ordinal] = tuple(sorted(hits))
        self._match_cache[id(link)] = (src_rows, trg_rows, mapping)
        return mapping


def _cell_keys(row: dict, key: Key, ordinal: int) -> list[tuple]:
    """Hashable match keys for one cell; null contributes nothing."""
    if key is INDEX:
        return [value_key(float(ordinal))]
    cell = row.get(key)
    if cell is None:
        return []
    if kind_of(cell) is Kind.LIST:
        seen = []
        for element in cell:
            if element is None:
                continue
            k = value_key(element)
            if k not in seen:
                seen.append(k)
        return seen
    return [value_key(cell)]
