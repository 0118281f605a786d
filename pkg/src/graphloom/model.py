"""The interpreted network model above the table network.

Classes map tables to generic items, nodes, or edges. An edge class
carries up to two paths through the table network, one per side; either
may be absent, leaving the class partially or fully disconnected.
Instance-level adjacency is resolved by walking those paths hop by hop
through table links.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from graphloom.errors import (
    GraphLoomError,
    NameCollision,
    UnknownClass,
    WrongInterpretation,
)
from graphloom.tables import TableLink, TableNetwork

PALETTE_SIZE = 8


class Interpretation(enum.Enum):
    GENERIC = "generic"
    NODE = "node"
    EDGE = "edge"


class ItemRef(NamedTuple):
    class_id: str
    ordinal: int


@dataclass(eq=False)
class EdgeSide:
    """A chain of table links from the edge's table to a node class's table."""

    links: tuple[TableLink, ...]
    end_class_id: str


@dataclass(eq=False)
class EdgeEnds:
    source: Optional[EdgeSide] = None
    target: Optional[EdgeSide] = None
    directed: bool = False


@dataclass(eq=False)
class ClassSpec:
    id: str
    label: str
    table_id: str
    interpretation: Interpretation = Interpretation.GENERIC
    edge_ends: Optional[EdgeEnds] = None
    color: Optional[int] = None  # palette slot, or None for gray overflow


class NetworkModel:
    """Ordered collection of classes over a table network."""

    def __init__(self, network: TableNetwork):
        self.network = network
        self.classes: dict[str, ClassSpec] = {}
        self._ids = itertools.count()
        self._endpoint_cache: dict[str, tuple] = {}

    # -- class management ----------------------------------------------------

    def _new_id(self) -> str:
        cid = f"c{next(self._ids)}"
        while cid in self.classes:  # skip ids pinned by model-reconstructing imports
            cid = f"c{next(self._ids)}"
        return cid

    def _next_color(self) -> Optional[int]:
        used = {c.color for c in self.classes.values() if c.color is not None}
        for slot in range(PALETTE_SIZE):
            if slot not in used:
                return slot
        return None

    def add_class(
        self,
        label: str,
        table_id: str,
        interpretation: Interpretation = Interpretation.GENERIC,
        class_id: Optional[str] = None,
    ) -> ClassSpec:
        if not label:
            raise GraphLoomError("class label must be non-empty")
        self.network._require(table_id)
        cid = class_id if class_id is not None else self._new_id()
        if cid in self.classes:
            raise NameCollision(f"class id {cid!r} already exists")
        spec = ClassSpec(
            id=cid,
            label=label,
            table_id=table_id,
            interpretation=interpretation,
            edge_ends=EdgeEnds() if interpretation is Interpretation.EDGE else None,
            color=self._next_color(),
        )
        self.classes[cid] = spec
        return spec

    def require(self, class_id: str) -> ClassSpec:
        if class_id not in self.classes:
            raise UnknownClass(f"no class {class_id!r}")
        return self.classes[class_id]

    def require_node(self, class_id: str) -> ClassSpec:
        spec = self.require(class_id)
        if spec.interpretation is not Interpretation.NODE:
            raise WrongInterpretation(f"class {spec.label!r} is not a node class")
        return spec

    def require_edge(self, class_id: str) -> ClassSpec:
        spec = self.require(class_id)
        if spec.interpretation is not Interpretation.EDGE:
            raise WrongInterpretation(f"class {spec.label!r} is not an edge class")
        return spec

    def node_classes(self) -> list[ClassSpec]:
        return [c for c in self.classes.values() if c.interpretation is Interpretation.NODE]

    def edge_classes(self) -> list[ClassSpec]:
        return [c for c in self.classes.values() if c.interpretation is Interpretation.EDGE]

    def count_instances(self, class_id: str) -> int:
        return self.network.row_count(self.require(class_id).table_id)

    # -- interpretation -------------------------------------------------------

    def set_interpretation(self, class_id: str, interpretation: Interpretation) -> None:
        spec = self.require(class_id)
        if spec.interpretation is interpretation:
            return
        if spec.interpretation is Interpretation.NODE:
            self._sever_sides_ending_at(class_id)
        spec.interpretation = interpretation
        spec.edge_ends = EdgeEnds() if interpretation is Interpretation.EDGE else None
        self._endpoint_cache.clear()

    def _sever_sides_ending_at(self, class_id: str) -> None:
        for other in self.classes.values():
            ends = other.edge_ends
            if ends is None:
                continue
            if ends.source is not None and ends.source.end_class_id == class_id:
                ends.source = None
            if ends.target is not None and ends.target.end_class_id == class_id:
                ends.target = None

    def delete_class(self, class_id: str) -> None:
        """Remove a class; dependent edges become disconnected, not deleted."""
        self.require(class_id)
        self._sever_sides_ending_at(class_id)
        del self.classes[class_id]
        self._endpoint_cache.clear()

    def rename_class(self, class_id: str, label: str) -> None:
        if not label:
            raise GraphLoomError("class label must be non-empty")
        self.require(class_id).label = label

    def rename_attribute(self, class_id: str, old: str, new: str) -> None:
        spec = self.require(class_id)
        self.network.rename_attribute(spec.table_id, old, new)
        self._endpoint_cache.clear()

    # -- edge sides -----------------------------------------------------------

    def set_side(self, edge_class_id: str, side: str, edge_side: Optional[EdgeSide]) -> None:
        spec = self.require_edge(edge_class_id)
        if edge_side is not None:
            self._validate_side(spec, edge_side)
        if side == "source":
            spec.edge_ends.source = edge_side
        elif side == "target":
            spec.edge_ends.target = edge_side
        else:
            raise GraphLoomError(f"side must be source or target, not {side!r}")
        self._endpoint_cache.clear()

    def _validate_side(self, edge_spec: ClassSpec, side: EdgeSide) -> None:
        if not side.links:
            raise GraphLoomError("an edge side path needs at least one link")
        end = self.require(side.end_class_id)
        if end.interpretation is not Interpretation.NODE:
            raise WrongInterpretation(f"edge side must end at a node class, not {end.label!r}")
        expected = edge_spec.table_id
        for link in side.links:
            if link.source_table != expected:
                raise GraphLoomError("edge side links do not chain from the edge table")
            expected = link.target_table
        if expected != end.table_id:
            raise GraphLoomError("edge side path does not reach the end class's table")

    # -- adjacency resolution ---------------------------------------------------

    def _resolve_side(self, side: Optional[EdgeSide], ordinal: int) -> tuple[ItemRef, ...]:
        if side is None:
            return ()
        frontier = [ordinal]
        for link in side.links:
            mapping = self.network.match_map(link)
            seen: set[int] = set()
            advanced: list[int] = []
            for o in frontier:
                for hit in mapping.get(o, ()):
                    if hit not in seen:
                        seen.add(hit)
                        advanced.append(hit)
            frontier = advanced
            if not frontier:
                break
        return tuple(ItemRef(side.end_class_id, o) for o in frontier)

    def resolve_endpoints(self, item: ItemRef) -> tuple[tuple[ItemRef, ...], tuple[ItemRef, ...]]:
        """All node items reachable on each side of one edge item."""
        spec = self.require_edge(item.class_id)
        table = self.endpoints_table(item.class_id)
        return table[item.ordinal] if item.ordinal < len(table) else ((), ())

    def endpoints_table(self, edge_class_id: str) -> tuple:
        """Per-row resolved (source items, target items) for an edge class."""
        spec = self.require_edge(edge_class_id)
        cached = self._endpoint_cache.get(edge_class_id)
        if cached is not None and cached[0] == self.network.generation:
            return cached[1]
        count = self.network.row_count(spec.table_id)
        ends = spec.edge_ends
        table = tuple(
            (self._resolve_side(ends.source, i), self._resolve_side(ends.target, i))
            for i in range(count)
        )
        self._endpoint_cache[edge_class_id] = (self.network.generation, table)
        return table

    def _side_index(self, edge_class_id: str) -> tuple[dict, dict]:
        """ordinal-of-node -> edge ordinals, for each side of one edge class."""
        cached = self._endpoint_cache.get(("idx", edge_class_id))
        if cached is not None and cached[0] == self.network.generation:
            return cached[1]
        by_source: dict[ItemRef, list[int]] = {}
        by_target: dict[ItemRef, list[int]] = {}
        for edge_ordinal, (sources, targets) in enumerate(self.endpoints_table(edge_class_id)):
            for ref in sources:
                by_source.setdefault(ref, []).append(edge_ordinal)
            for ref in targets:
                by_target.setdefault(ref, []).append(edge_ordinal)
        result = (by_source, by_target)
        self._endpoint_cache[("idx", edge_class_id)] = (self.network.generation, result)
        return result

    def neighbors(self, item: ItemRef) -> list[tuple[ItemRef, ItemRef, str]]:
        """(edge item, opposite node item, role of the queried node) triples.

        Deterministic order: edge class order, then edge row, then
        opposite endpoint ordinal; the node's source-role entries precede
        its target-role entries within one edge row.
        """
        self.require_node(item.class_id)
        out: list[tuple[ItemRef, ItemRef, str]] = []
        seen: set[tuple] = set()
        for edge in self.edge_classes():
            by_source, by_target = self._side_index(edge.id)
            table = self.endpoints_table(edge.id)
            rows = sorted(set(by_source.get(item, ())) | set(by_target.get(item, ())))
            for edge_ordinal in rows:
                edge_ref = ItemRef(edge.id, edge_ordinal)
                sources, targets = table[edge_ordinal]
                if item in sources:
                    for other in sorted(targets, key=lambda r: r.ordinal):
                        entry = (edge_ref, other, "source")
                        if entry not in seen:
                            seen.add(entry)
                            out.append(entry)
                if item in targets:
                    for other in sorted(sources, key=lambda r: r.ordinal):
                        entry = (edge_ref, other, "target")
                        if entry not in seen:
                            seen.add(entry)
                            out.append(entry)
        return out

    def adjacency_of_node_class(self, class_id: str) -> list[tuple[str, str]]:
        """(edge class id, side) pairs whose path ends at this node class."""
        self.require(class_id)
        out = []
        for edge in self.edge_classes():
            ends = edge.edge_ends
            if ends.source is not None and ends.source.end_class_id == class_id:
                out.append((edge.id, "source"))
            if ends.target is not None and ends.target.end_class_id == class_id:
                out.append((edge.id, "target"))
        return out
