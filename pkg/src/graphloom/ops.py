"""Wrangling operations over the two-layer engine.

The Engine owns a table network plus a network model and exposes the
operation vocabulary: seven modeling operations (connect, disconnect,
promote, facet, convert in both directions, edge projection, supernodes,
rollup), two item operations (attribute and connectivity filtering), three
attribute operations (in-class derive, connected derive, direction), and
the housekeeping operations (interpret, rename, delete, unroll, expand).

Each operation validates fully, then commits; on an unexpected mid-commit
failure the engine state is rolled back. Every successful operation
appends a replayable OpRecord to the operation log.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from graphloom.errors import (
    AmbiguousSides,
    GraphLoomError,
    NameCollision,
    NeedBothSides,
    NoOpSignal,
    SideOccupied,
    TooManyFacets,
    UnknownAttribute,
    Unsupported,
    WrongInterpretation,
)
from graphloom.expr import ExprSpec, PredicateSpec, attr_names, eval_predicate, eval_reduce, eval_row, parse
from graphloom.model import ClassSpec, EdgeEnds, EdgeSide, Interpretation, ItemRef, NetworkModel
from graphloom.tables import INDEX, ComputedSpec, TableLink, TableNetwork
from graphloom.values import Value, to_text, value_key

FACET_GUARD = 64


@dataclass
class OpRecord:
    """A replayable record of one applied operation."""

    op_name: str
    params: dict
    result_class_ids: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class PathSpec:
    """A walk over the model: anchor class plus alternating node/edge hops."""

    anchor: str
    hops: tuple[str, ...]

    def classes(self) -> tuple[str, ...]:
        return (self.anchor,) + self.hops


# -- param (de)serialization helpers ---------------------------------------


def key_param(key) -> Value:
    return {"index": True} if key is INDEX else key


def param_key(value):
    if isinstance(value, dict) and value.get("index"):
        return INDEX
    return value


def expr_param(spec: ExprSpec) -> Value:
    return {"standard": spec.reducer} if spec.reducer is not None else {"custom": spec.source}


def param_expr(value) -> ExprSpec:
    if "standard" in value:
        return ExprSpec.standard(value["standard"])
    return ExprSpec.custom(value["custom"])


def predicate_param(pred: PredicateSpec) -> Value:
    if pred.source is not None:
        return {"custom": pred.source}
    return {"attr": pred.attr, "op": pred.op, "literal": pred.literal}


def param_predicate(value) -> PredicateSpec:
    if "custom" in value:
        return PredicateSpec.custom(value["custom"])
    return PredicateSpec.comparison(value["attr"], value["op"], value.get("literal"))


def path_param(path: PathSpec) -> Value:
    return {"anchor": path.anchor, "hops": list(path.hops)}


def param_path(value) -> PathSpec:
    return PathSpec(value["anchor"], tuple(value["hops"]))


def reducers_param(reducers) -> Value:
    return [{"attr": a, "reducer": expr_param(r), "as": n} for a, r, n in reducers]


def param_reducers(value):
    return [(entry["attr"], param_expr(entry["reducer"]), entry["as"]) for entry in value or []]


# -- path plans --------------------------------------------------------------


@dataclass(frozen=True)
class _Step:
    kind: str  # "n2e" or "e2n"
    chains: tuple[tuple[TableLink, ...], ...]


@dataclass(frozen=True)
class _PathPlan:
    anchor_table: str
    end_table: str
    steps: tuple[_Step, ...]
    table_ids: tuple[str, ...]


def follow_links(network: TableNetwork, links: Sequence[TableLink], ordinal: int) -> tuple[int, ...]:
    """Walk a link chain from one row, deduplicating per hop."""
    frontier = [ordinal]
    for link in links:
        mapping = network.match_map(link)
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
    return tuple(frontier)


def _reversed_links(links: Sequence[TableLink]) -> tuple[TableLink, ...]:
    return tuple(
        TableLink(l.target_table, l.target_key, l.source_table, l.source_key) for l in reversed(links)
    )


def _path_instances(network: TableNetwork, plan: _PathPlan) -> list[tuple[int, ...]]:
    """Distinct concrete instantiations as ordinal tuples (anchor first)."""
    current: list[tuple[int, ...]] = [(i,) for i in range(network.row_count(plan.anchor_table))]
    for step in plan.steps:
        hop_maps: list[dict[int, tuple[int, ...]]] = []
        for chain in step.chains:
            edge_table = chain[0].source_table
            per_edge = {
                e: follow_links(network, chain, e) for e in range(network.row_count(edge_table))
            }
            if step.kind == "n2e":
                inverted: dict[int, list[int]] = {}
                for e, nodes in per_edge.items():
                    for n in nodes:
                        inverted.setdefault(n, []).append(e)
                hop_maps.append({n: tuple(es) for n, es in inverted.items()})
            else:
                hop_maps.append(per_edge)
        out: list[tuple[int, ...]] = []
        seen: set[tuple[int, ...]] = set()
        for tup in current:
            hits = sorted({h for m in hop_maps for h in m.get(tup[-1], ())})
            for hit in hits:
                extended = tup + (hit,)
                if extended not in seen:
                    seen.add(extended)
                    out.append(extended)
        current = out
    return current


class Engine:
    """Facade combining the table network, the model, and the op log."""

    def __init__(self):
        self.warnings: list[str] = []
        self.network = TableNetwork(warn=self.warn)
        self.model = NetworkModel(self.network)
        self.oplog: list[OpRecord] = []
        self.import_log: list[dict] = []
        self.mutation_seq = 0
        self.lock = threading.RLock()

    def warn(self, message: str) -> None:
        self.warnings.append(message)

    # -- transactions ---------------------------------------------------------

    def _snapshot(self):
        classes = {}
        for cid, spec in self.model.classes.items():
            ends = spec.edge_ends
            classes[cid] = ClassSpec(
                id=spec.id,
                label=spec.label,
                table_id=spec.table_id,
                interpretation=spec.interpretation,
                edge_ends=None
                if ends is None
                else EdgeEnds(
                    source=None if ends.source is None else EdgeSide(ends.source.links, ends.source.end_class_id),
                    target=None if ends.target is None else EdgeSide(ends.target.links, ends.target.end_class_id),
                    directed=ends.directed,
                ),
                color=spec.color,
            )
        return (classes, dict(self.network.tables), list(self.network.links), len(self.oplog))

    def _restore(self, snap) -> None:
        classes, tables, links, oplen = snap
        self.model.classes = classes
        self.model._endpoint_cache.clear()
        self.network.tables = tables
        self.network.links = links
        self.network._row_cache = {k: v for k, v in self.network._row_cache.items() if k in tables}
        self.network._name_cache = {k: v for k, v in self.network._name_cache.items() if k in tables}
        self.network._bump()
        del self.oplog[oplen:]

    def _commit(self, op_name: str, params: dict, result_ids: list[str]) -> OpRecord:
        record = OpRecord(op_name, params, result_ids)
        self.oplog.append(record)
        self.mutation_seq += 1
        return record

    def _transaction(self, fn: Callable[[], OpRecord]) -> OpRecord:
        with self.lock:
            snap = self._snapshot()
            try:
                return fn()
            except BaseException:
                self._restore(snap)
                raise

    # -- imports and housekeeping ------------------------------------------------

    def add_static_class(
        self,
        name: str,
        attribute_names: Sequence[str],
        rows: Sequence[dict],
        interpretation: Interpretation = Interpretation.GENERIC,
        class_id: Optional[str] = None,
        record: bool = True,
    ) -> ClassSpec:
        """Register an imported table and its generic class.

        Direct additions record themselves as inline imports so that
        purely programmatic sessions still replay from their script.
        """
        with self.lock:
            table = self.network.add_static_table(name, attribute_names, rows)
            spec = self.model.add_class(name, table.id, interpretation, class_id=class_id)
            self.mutation_seq += 1
            if record:
                inline = {
                    "attributes": list(attribute_names),
                    "rows": [dict(r) for r in self.network.evaluate(table.id)],
                    "interpretation": interpretation.value,
                }
                self.register_import(name, "inlineTable", None, inline)
            return spec

    def register_import(self, name: str, format_name: str, path: Optional[str], inline) -> None:
        """inline may be text or a document value; scripts serialize it lazily."""
        self.import_log.append({"name": name, "format": format_name, "path": path, "inline": inline})

    def interpret_as_node(self, class_id: str) -> OpRecord:
        return self._interpret(class_id, Interpretation.NODE, "interpretAsNode")

    def interpret_as_edge(self, class_id: str) -> OpRecord:
        return self._interpret(class_id, Interpretation.EDGE, "interpretAsEdge")

    def interpret_as_generic(self, class_id: str) -> OpRecord:
        return self._interpret(class_id, Interpretation.GENERIC, "interpretAsGeneric")

    def _interpret(self, class_id: str, interpretation: Interpretation, op_name: str) -> OpRecord:
        def run():
            self.model.require(class_id)
            self.model.set_interpretation(class_id, interpretation)
            return self._commit(op_name, {"class": class_id}, [class_id])

        return self._transaction(run)

    def rename_class(self, class_id: str, label: str) -> OpRecord:
        def run():
            self.model.rename_class(class_id, label)
            return self._commit("renameClass", {"class": class_id, "label": label}, [class_id])

        return self._transaction(run)

    def rename_attribute(self, class_id: str, old: str, new: str) -> OpRecord:
        def run():
            self.model.rename_attribute(class_id, old, new)
            return self._commit("renameAttribute", {"class": class_id, "old": old, "new": new}, [class_id])

        return self._transaction(run)

    def delete_class(self, class_id: str) -> OpRecord:
        def run():
            self.model.delete_class(class_id)
            return self._commit("deleteClass", {"class": class_id}, [])

        return self._transaction(run)

    def unroll_to_class(self, class_id: str, attr: str) -> OpRecord:
        """New class from a list attribute, connected back to its source."""

        def run():
            spec = self.model.require(class_id)
            table = self.network.unroll(spec.table_id, attr)
            as_node = spec.interpretation is Interpretation.NODE
            new_spec = self.model.add_class(
                attr, table.id, Interpretation.NODE if as_node else Interpretation.GENERIC
            )
            result = [new_spec.id]
            if as_node:
                edge_spec = self._origin_edge_class(new_spec, spec, table.id)
                result.append(edge_spec.id)
            else:
                self.warn(f"unroll of non-node class {spec.label!r}: items linked but no edge class created")
            return self._commit("unrollToClass", {"class": class_id, "attr": attr}, result)

        return self._transaction(run)

    def expand_to_class(self, class_id: str, attr: str) -> OpRecord:
        """New class from a map attribute, one row per source row."""

        def run():
            spec = self.model.require(class_id)
            table = self.network.expand(spec.table_id, attr)
            as_node = spec.interpretation is Interpretation.NODE
            new_spec = self.model.add_class(
                attr, table.id, Interpretation.NODE if as_node else Interpretation.GENERIC
            )
            result = [new_spec.id]
            if as_node:
                edge_spec = self._origin_edge_class(new_spec, spec, table.id)
                result.append(edge_spec.id)
            else:
                self.warn(f"expand of non-node class {spec.label!r}: items linked but no edge class created")
            return self._commit("expandToClass", {"class": class_id, "attr": attr}, result)

        return self._transaction(run)

    def _origin_edge_class(self, new_spec: ClassSpec, source_spec: ClassSpec, derived_table_id: str) -> ClassSpec:
        """Edge class materializing the _origin backlink of unroll/expand."""
        network = self.network

        def compute(net: TableNetwork):
            rows = net.evaluate(derived_table_id)
            out = [
                {"_source": float(i), "_target": row.get("_origin")} for i, row in enumerate(rows)
            ]
            return ["_source", "_target"], out

        pair_table = network.add_derived_table(
            f"{new_spec.label}-{source_spec.label}",
            ComputedSpec((derived_table_id,), compute, label="origin-edges"),
        )
        edge_spec = self.model.add_class(
            f"{new_spec.label}-{source_spec.label}", pair_table.id, Interpretation.EDGE
        )
        src_link = network.add_link(TableLink(pair_table.id, "_source", derived_table_id, INDEX))
        trg_link = network.add_link(TableLink(pair_table.id, "_target", source_spec.table_id, INDEX))
        self.model.set_side(edge_spec.id, "source", EdgeSide((src_link,), new_spec.id))
        self.model.set_side(edge_spec.id, "target", EdgeSide((trg_link,), source_spec.id))
        return edge_spec

    # -- modeling operations ------------------------------------------------------

    def connect(self, src_class_id: str, trg_class_id: str, src_key, trg_key) -> OpRecord:
        """Attach an edge side, or build a new edge class between two nodes."""

        def run():
            src = self.model.require(src_class_id)
            trg = self.model.require(trg_class_id)
            kinds = (src.interpretation, trg.interpretation)
            if Interpretation.GENERIC in kinds:
                raise WrongInterpretation("connect requires node or edge classes on both ends")
            if kinds == (Interpretation.EDGE, Interpretation.EDGE):
                raise Unsupported("cannot connect two edge classes")
            params = {
                "src": src_class_id,
                "trg": trg_class_id,
                "srcKey": key_param(src_key),
                "trgKey": key_param(trg_key),
            }
            self.network._check_key(src.table_id, src_key)
            self.network._check_key(trg.table_id, trg_key)
            if Interpretation.EDGE in kinds:
                edge, node = (src, trg) if src.interpretation is Interpretation.EDGE else (trg, src)
                edge_key, node_key = (src_key, trg_key) if edge is src else (trg_key, src_key)
                ends = edge.edge_ends
                if ends.source is None:
                    side = "source"
                elif ends.target is None:
                    side = "target"
                else:
                    raise SideOccupied(f"both sides of {edge.label!r} are attached; disconnect first")
                link = self.network.add_link(TableLink(edge.table_id, edge_key, node.table_id, node_key))
                self.model.set_side(edge.id, side, EdgeSide((link,), node.id))
                return self._commit("connect", params, [edge.id])
            # node-node: new edge class over the match pairs
            link = TableLink(src.table_id, src_key, trg.table_id, trg_key)

            def compute(net: TableNetwork):
                mapping = net.match_map(link)
                rows = [
                    {"_source": float(s), "_target": float(t)}
                    for s in sorted(mapping)
                    for t in mapping[s]
                ]
                return ["_source", "_target"], rows

            label = f"{src.label}-{trg.label}"
            pair_table = self.network.add_derived_table(
                label, ComputedSpec((src.table_id, trg.table_id), compute, label="match-pairs")
            )
            edge_spec = self.model.add_class(label, pair_table.id, Interpretation.EDGE)
            src_link = self.network.add_link(TableLink(pair_table.id, "_source", src.table_id, INDEX))
            trg_link = self.network.add_link(TableLink(pair_table.id, "_target", trg.table_id, INDEX))
            self.model.set_side(edge_spec.id, "source", EdgeSide((src_link,), src.id))
            self.model.set_side(edge_spec.id, "target", EdgeSide((trg_link,), trg.id))
            return self._commit("connect", params, [edge_spec.id])

        return self._transaction(run)

    def disconnect(self, edge_class_id: str, side: str) -> OpRecord:
        def run():
            spec = self.model.require_edge(edge_class_id)
            current = spec.edge_ends.source if side == "source" else spec.edge_ends.target
            if current is None:
                raise NoOpSignal(f"{side} side of {spec.label!r} is already disconnected")
            self.model.set_side(edge_class_id, side, None)
            return self._commit("disconnect", {"class": edge_class_id, "side": side}, [edge_class_id])

        return self._transaction(run)

    def promote(self, class_id: str, attr: str) -> OpRecord:
        """Unique values of an attribute become a new node class, connected back."""

        def run():
            spec = self.model.require(class_id)
            promoted = self.network.promote_table(spec.table_id, attr)
            node_spec = self.model.add_class(attr, promoted.id, Interpretation.NODE)
            result = [node_spec.id]
            source_table = spec.table_id
            promoted_id = promoted.id

            def compute(net: TableNetwork):
                src_rows = net.evaluate(source_table)
                prom_rows = net.evaluate(promoted_id)
                by_key = {value_key(row[attr]): i for i, row in enumerate(prom_rows)}
                out = []
                for i, row in enumerate(src_rows):
                    cell = row.get(attr)
                    if cell is None:
                        continue
                    out.append({"_source": float(i), "_target": float(by_key[value_key(cell)])})
                return ["_source", "_target"], out

            if spec.interpretation is Interpretation.NODE:
                label = f"{spec.label}-{attr}"
                pair_table = self.network.add_derived_table(
                    label, ComputedSpec((source_table, promoted_id), compute, label="promotion-edges")
                )
                edge_spec = self.model.add_class(label, pair_table.id, Interpretation.EDGE)
                src_link = self.network.add_link(TableLink(pair_table.id, "_source", source_table, INDEX))
                trg_link = self.network.add_link(TableLink(pair_table.id, "_target", promoted_id, INDEX))
                self.model.set_side(edge_spec.id, "source", EdgeSide((src_link,), spec.id))
                self.model.set_side(edge_spec.id, "target", EdgeSide((trg_link,), node_spec.id))
                result.append(edge_spec.id)
            else:
                self.warn(f"promote on non-node class {spec.label!r}: unique-value class created without edges")
            return self._commit("promote", {"class": class_id, "attr": attr}, result)

        return self._transaction(run)

    def facet(self, class_id: str, attr: str, allow_many: bool = False) -> OpRecord:
        """One new class per distinct non-null value of an attribute."""

        def run():
            spec = self.model.require(class_id)
            rows = self.network.evaluate(spec.table_id)
            if attr not in self.network.attribute_names(spec.table_id):
                raise UnknownAttribute(f"class {spec.label!r} has no attribute {attr!r}")
            distinct: list = []
            seen: set = set()
            for row in rows:
                cell = row.get(attr)
                if cell is None:
                    continue
                key = value_key(cell)
                if key not in seen:
                    seen.add(key)
                    distinct.append(cell)
            if len(distinct) > FACET_GUARD and not allow_many:
                raise TooManyFacets(f"facet on {attr!r} would create {len(distinct)} classes")
            result = []
            for value in distinct:
                label = f"{to_text(value)} {spec.label}"
                table = self.network.facet_table(spec.table_id, attr, value, label)
                facet_spec = self.model.add_class(label, table.id, spec.interpretation)
                if spec.interpretation is Interpretation.EDGE:
                    ends = spec.edge_ends
                    facet_spec.edge_ends.directed = ends.directed
                    for side_name, side in (("source", ends.source), ("target", ends.target)):
                        if side is None:
                            continue
                        self.model.set_side(facet_spec.id, side_name, self._rehead_side(side, table.id))
                result.append(facet_spec.id)
            return self._commit("facet", {"class": class_id, "attr": attr}, result)

        return self._transaction(run)

    def _rehead_side(self, side: EdgeSide, new_table_id: str) -> EdgeSide:
        """Start an inherited path from a row-subset table with the same columns."""
        first = side.links[0]
        if first.source_key is INDEX:
            raise Unsupported("cannot inherit an index-keyed edge path across a row slice")
        new_first = self.network.add_link(
            TableLink(new_table_id, first.source_key, first.target_table, first.target_key)
        )
        return EdgeSide((new_first,) + side.links[1:], side.end_class_id)

    def convert_to_edges(
        self,
        class_id: str,
        source_attachment: Optional[tuple[str, str]] = None,
        target_attachment: Optional[tuple[str, str]] = None,
    ) -> OpRecord:
        """Turn a node class into an edge class over its former adjacency.

        Each former node row becomes one edge per endpoint pair resolved
        through it; the former connecting edge classes are removed from the
        model (their tables remain as intermediates).
        """

        def run():
            spec = self.model.require_node(class_id)
            candidates: list[tuple[str, str, EdgeSide, tuple[TableLink, ...]]] = []
            for edge_id, side_name in self.model.adjacency_of_node_class(class_id):
                ends = self.model.classes[edge_id].edge_ends
                own = ends.source if side_name == "source" else ends.target
                opp = ends.target if side_name == "source" else ends.source
                if opp is None:
                    self.warn(f"conversion skips {edge_id!r}: opposite side is disconnected")
                    continue
                chain = _reversed_links(own.links) + opp.links
                candidates.append((edge_id, side_name, opp, chain))
            params = {"class": class_id}
            if source_attachment is not None:
                params["sourceVia"] = list(source_attachment)
            if target_attachment is not None:
                params["targetVia"] = list(target_attachment)

            if source_attachment is not None or target_attachment is not None:
                if source_attachment is None or target_attachment is None:
                    raise GraphLoomError("explicit conversion requires both side attachments")
                lookup = {(c[0], c[1]): c for c in candidates}
                try:
                    chosen = [lookup[tuple(source_attachment)], lookup[tuple(target_attachment)]]
                except KeyError as missing:
                    raise GraphLoomError(f"no such attachment: {missing}") from None
            elif len(candidates) == 0:
                self.model.set_interpretation(class_id, Interpretation.EDGE)
                return self._commit("convertToEdges", params, [class_id])
            elif len(candidates) <= 2:
                order = {cid: i for i, cid in enumerate(self.model.classes)}
                chosen = sorted(candidates, key=lambda c: (order[c[2].end_class_id], order[c[0]], c[1]))
                if len(chosen) == 1:
                    chosen = [chosen[0], chosen[0]]
            else:
                raise AmbiguousSides(
                    f"{spec.label!r} is adjacent through {len(candidates)} attachments; pick two",
                    [(c[0], c[1]) for c in candidates],
                )

            (a_edge, a_side, a_opp, a_chain), (b_edge, b_side, b_opp, b_chain) = chosen
            same_attachment = (a_edge, a_side) == (b_edge, b_side)
            own_table = spec.table_id
            own_names = self.network.attribute_names(own_table)
            if "_source" in own_names or "_target" in own_names:
                raise NameCollision("conversion reserves the _source and _target columns")
            for link in a_chain + b_chain:
                if link not in self.network.links:
                    self.network.add_link(link)

            source_tables = tuple(
                dict.fromkeys(
                    (own_table,)
                    + tuple(l.target_table for l in a_chain)
                    + tuple(l.target_table for l in b_chain)
                )
            )

            def compute(net: TableNetwork):
                rows = net.evaluate(own_table)
                names = list(net.attribute_names(own_table)) + ["_source", "_target"]
                out = []
                for i, row in enumerate(rows):
                    side_a = follow_links(net, a_chain, i)
                    if same_attachment:
                        ordinals = sorted(side_a)
                        pairs = [(s, t) for x, s in enumerate(ordinals) for t in ordinals[x + 1 :]]
                    else:
                        side_b = follow_links(net, b_chain, i)
                        pairs = [(s, t) for s in side_a for t in side_b]
                    for s, t in pairs:
                        out.append({**row, "_source": float(s), "_target": float(t)})
                return names, out

            pair_table = self.network.add_derived_table(
                f"{spec.label} (pairs)", ComputedSpec(source_tables, compute, label="pair-expansion")
            )
            removed = {a_edge, b_edge}
            for edge_id in removed:
                self.model.delete_class(edge_id)
            self.model.set_interpretation(class_id, Interpretation.EDGE)
            spec.table_id = pair_table.id
            a_end_table = self.model.classes[a_opp.end_class_id].table_id
            b_end_table = self.model.classes[b_opp.end_class_id].table_id
            src_link = self.network.add_link(TableLink(pair_table.id, "_source", a_end_table, INDEX))
            trg_link = self.network.add_link(TableLink(pair_table.id, "_target", b_end_table, INDEX))
            self.model.set_side(class_id, "source", EdgeSide((src_link,), a_opp.end_class_id))
            self.model.set_side(class_id, "target", EdgeSide((trg_link,), b_opp.end_class_id))
            return self._commit("convertToEdges", params, [class_id])

        return self._transaction(run)

    def convert_to_nodes(self, class_id: str) -> OpRecord:
        """Turn an edge class into a node class, preserving its connectivity."""

        def run():
            spec = self.model.require_edge(class_id)
            ends = spec.edge_ends
            sides = [(n, s) for n, s in (("source", ends.source), ("target", ends.target)) if s is not None]
            self.model.set_interpretation(class_id, Interpretation.NODE)
            result = [class_id]
            for side_name, side in sides:
                end_spec = self.model.classes[side.end_class_id]
                chain = side.links
                own_table = spec.table_id

                def compute(net: TableNetwork, chain=chain, own_table=own_table):
                    rows_count = net.row_count(own_table)
                    out = []
                    for i in range(rows_count):
                        for o in follow_links(net, chain, i):
                            out.append({"_source": float(i), "_target": float(o)})
                    return ["_source", "_target"], out

                label = f"{spec.label}-{end_spec.label}"
                sources = tuple(dict.fromkeys((own_table,) + tuple(l.target_table for l in chain)))
                pair_table = self.network.add_derived_table(
                    label, ComputedSpec(sources, compute, label="endpoint-edges")
                )
                edge_spec = self.model.add_class(label, pair_table.id, Interpretation.EDGE)
                src_link = self.network.add_link(TableLink(pair_table.id, "_source", own_table, INDEX))
                trg_link = self.network.add_link(TableLink(pair_table.id, "_target", end_spec.table_id, INDEX))
                self.model.set_side(edge_spec.id, "source", EdgeSide((src_link,), class_id))
                self.model.set_side(edge_spec.id, "target", EdgeSide((trg_link,), end_spec.id))
                result.append(edge_spec.id)
            return self._commit("convertToNodes", {"class": class_id}, result)

        return self._transaction(run)

    def project_edge(self, path: PathSpec) -> OpRecord:
        """New edge class with one edge per concrete path instantiation."""

        def run():
            plan = self._path_plan(path)
            anchor = self.model.require_node(path.anchor)
            end = self.model.require_node(path.hops[-1])
            if len(path.hops) < 2:
                raise GraphLoomError("projection paths need at least two hops")

            def compute(net: TableNetwork):
                tuples = _path_instances(net, plan)
                rows = [{"_source": float(t[0]), "_target": float(t[-1])} for t in tuples]
                return ["_source", "_target"], rows

            label = f"{anchor.label}-{end.label}"
            pair_table = self.network.add_derived_table(
                label, ComputedSpec(plan.table_ids, compute, label="projection")
            )
            edge_spec = self.model.add_class(label, pair_table.id, Interpretation.EDGE)
            src_link = self.network.add_link(TableLink(pair_table.id, "_source", anchor.table_id, INDEX))
            trg_link = self.network.add_link(TableLink(pair_table.id, "_target", end.table_id, INDEX))
            self.model.set_side(edge_spec.id, "source", EdgeSide((src_link,), anchor.id))
            self.model.set_side(edge_spec.id, "target", EdgeSide((trg_link,), end.id))
            return self._commit("projectEdge", {"path": path_param(path)}, [edge_spec.id])

        return self._transaction(run)

    def create_supernode(
        self,
        class_id: str,
        member_filter: PredicateSpec,
        label: str,
        reducers: Sequence[tuple[str, ExprSpec, str]] = (),
    ) -> OpRecord:
        """Aggregate matching members under a new single-node class."""

        def run():
            spec = self.model.require_node(class_id)
            self._check_predicate(member_filter, spec)
            member_table = spec.table_id
            for target_attr, _, _ in reducers:
                if target_attr not in self.network.attribute_names(member_table):
                    raise UnknownAttribute(f"class {spec.label!r} has no attribute {target_attr!r}")
            warn = self.warn

            def members_of(net: TableNetwork) -> list[int]:
                rows = net.evaluate(member_table)
                return [i for i, row in enumerate(rows) if eval_predicate(member_filter, row, warn)]

            def compute_node(net: TableNetwork):
                rows = net.evaluate(member_table)
                members = members_of(net)
                node_row = {"label": label}
                for target_attr, reducer, new_attr in reducers:
                    node_row[new_attr] = eval_reduce(reducer, [rows[m].get(target_attr) for m in members], warn)
                return ["label"] + [n for _, _, n in reducers], [node_row]

            def compute_edges(net: TableNetwork):
                rows = [{"_source": 0.0, "_target": float(m)} for m in members_of(net)]
                return ["_source", "_target"], rows

            node_table = self.network.add_derived_table(
                label, ComputedSpec((member_table,), compute_node, label="supernode")
            )
            node_spec = self.model.add_class(label, node_table.id, Interpretation.NODE)
            edge_table = self.network.add_derived_table(
                f"{label} members", ComputedSpec((member_table,), compute_edges, label="supernode-members")
            )
            edge_spec = self.model.add_class(f"{label} members", edge_table.id, Interpretation.EDGE)
            src_link = self.network.add_link(TableLink(edge_table.id, "_source", node_table.id, INDEX))
            trg_link = self.network.add_link(TableLink(edge_table.id, "_target", member_table, INDEX))
            self.model.set_side(edge_spec.id, "source", EdgeSide((src_link,), node_spec.id))
            self.model.set_side(edge_spec.id, "target", EdgeSide((trg_link,), spec.id))
            if self.network.row_count(edge_table.id) == 0:
                self.warn(f"supernode {label!r} has no members")
            params = {
                "class": class_id,
                "filter": predicate_param(member_filter),
                "label": label,
                "reducers": reducers_param(reducers),
            }
            return self._commit("createSupernode", params, [node_spec.id, edge_spec.id])

        return self._transaction(run)

    def rollup_edges(self, edge_class_id: str, reducers: Sequence[tuple[str, ExprSpec, str]] = ()) -> OpRecord:
        """Merge parallel edges into one counted edge per endpoint pair."""

        def run():
            spec = self.model.require_edge(edge_class_id)
            ends = spec.edge_ends
            if ends.source is None or ends.target is None:
                raise NeedBothSides(f"rollup needs both sides of {spec.label!r} attached")
            own_table = spec.table_id
            attrs = self.network.attribute_names(own_table)
            for target_attr, _, _ in reducers:
                if target_attr not in attrs:
                    raise UnknownAttribute(f"class {spec.label!r} has no attribute {target_attr!r}")
            src_chain, trg_chain = ends.source.links, ends.target.links
            directed = ends.directed
            # a-b and b-a only merge when both sides land in the same class
            unordered = not directed and ends.source.end_class_id == ends.target.end_class_id
            warn = self.warn

            def compute(net: TableNetwork):
                rows = net.evaluate(own_table)
                groups: dict[tuple[int, int], list[int]] = {}
                for i in range(len(rows)):
                    for s in follow_links(net, src_chain, i):
                        for t in follow_links(net, trg_chain, i):
                            key = (min(s, t), max(s, t)) if unordered else (s, t)
                            groups.setdefault(key, []).append(i)
                names = ["_source", "_target", "count"] + [n for _, _, n in reducers]
                out = []
                for (s, t), members in groups.items():
                    row = {"_source": float(s), "_target": float(t), "count": float(len(members))}
                    for target_attr, reducer, new_attr in reducers:
                        row[new_attr] = eval_reduce(reducer, [rows[m].get(target_attr) for m in members], warn)
                    out.append(row)
                return names, out

            sources = tuple(
                dict.fromkeys(
                    (own_table,)
                    + tuple(l.target_table for l in src_chain)
                    + tuple(l.target_table for l in trg_chain)
                )
            )
            label = f"{spec.label} (rolled)"
            table = self.network.add_derived_table(label, ComputedSpec(sources, compute, label="rollup"))
            rolled = self.model.add_class(label, table.id, Interpretation.EDGE)
            rolled.edge_ends.directed = directed
            src_end = self.model.classes[ends.source.end_class_id]
            trg_end = self.model.classes[ends.target.end_class_id]
            src_link = self.network.add_link(TableLink(table.id, "_source", src_end.table_id, INDEX))
            trg_link = self.network.add_link(TableLink(table.id, "_target", trg_end.table_id, INDEX))
            self.model.set_side(rolled.id, "source", EdgeSide((src_link,), src_end.id))
            self.model.set_side(rolled.id, "target", EdgeSide((trg_link,), trg_end.id))
            params = {"class": edge_class_id, "reducers": reducers_param(reducers)}
            return self._commit("rollupEdges", params, [rolled.id])

        return self._transaction(run)

    # -- item operations -----------------------------------------------------------

    def filter_attr(self, class_id: str, predicate: PredicateSpec) -> OpRecord:
        """Keep only rows where the predicate holds; adjacency follows."""

        def run():
            spec = self.model.require(class_id)
            self._check_predicate(predicate, spec)
            warn = self.warn
            old_table = spec.table_id

            def survivors(net: TableNetwork) -> list[int]:
                rows = net.evaluate(old_table)
                return [i for i, row in enumerate(rows) if eval_predicate(predicate, row, warn)]

            self._replace_class_table(spec, survivors, f"{spec.label} (filtered)")
            params = {"class": class_id, "predicate": predicate_param(predicate)}
            return self._commit("filterAttr", params, [class_id])

        return self._transaction(run)

    def filter_connectivity(
        self,
        class_id: str,
        path: PathSpec,
        target_attr: str,
        reducer: ExprSpec,
        predicate: PredicateSpec,
    ) -> OpRecord:
        """Filter by a value reduced over a path, without materializing it.

        The predicate sees the reduced value as the attribute "value".
        """

        def run():
            spec = self.model.require(class_id)
            if path.anchor != class_id:
                raise GraphLoomError("connectivity filter path must anchor at the filtered class")
            plan = self._path_plan(path)
            end_table = self.model.require(path.hops[-1]).table_id
            if target_attr not in self.network.attribute_names(end_table):
                raise UnknownAttribute(f"path target has no attribute {target_attr!r}")
            if predicate.source is None and predicate.attr != "value":
                raise GraphLoomError('connectivity predicates compare the reduced "value"')
            warn = self.warn
            old_table = spec.table_id

            def survivors(net: TableNetwork) -> list[int]:
                per_anchor = _collect_values(net, plan, end_table, target_attr)
                count = net.row_count(old_table)
                out = []
                for i in range(count):
                    reduced = eval_reduce(reducer, per_anchor.get(i, []), warn)
                    if eval_predicate(predicate, {"value": reduced}, warn):
                        out.append(i)
                return out

            self._replace_class_table(
                spec, survivors, f"{spec.label} (filtered)", extra_sources=plan.table_ids
            )
            params = {
                "class": class_id,
                "path": path_param(path),
                "targetAttr": target_attr,
                "reducer": expr_param(reducer),
                "predicate": predicate_param(predicate),
            }
            return self._commit("filterConnectivity", params, [class_id])

        return self._transaction(run)

    # -- attribute operations ---------------------------------------------------------

    def derive_in_class(self, class_id: str, new_attr: str, expression: ExprSpec) -> OpRecord:
        """Compute a new attribute per row from this class's own attributes."""

        def run():
            spec = self.model.require(class_id)
            attrs = self.network.attribute_names(spec.table_id)
            if new_attr in attrs:
                raise NameCollision(f"class {spec.label!r} already has attribute {new_attr!r}")
            if expression.source is None:
                raise GraphLoomError("in-class derivation requires a custom expression")
            unknown = attr_names(parse(expression.source)) - set(attrs)
            if unknown:
                raise UnknownAttribute(f"expression references unknown attributes: {sorted(unknown)}")
            warn = self.warn
            old_table = spec.table_id

            def augment(net: TableNetwork, row: dict) -> Value:
                return eval_row(expression, row, warn)

            self._wrap_class_table(spec, new_attr, augment, f"{spec.label} (+{new_attr})")
            params = {"class": class_id, "attr": new_attr, "expr": expr_param(expression)}
            return self._commit("deriveInClass", params, [class_id])

        return self._transaction(run)

    def derive_connected(
        self,
        class_id: str,
        path: PathSpec,
        target_attr: str,
        reducer: ExprSpec,
        new_attr: str,
    ) -> OpRecord:
        """Reduce attribute values collected over a path into a new attribute.

        Values are collected once per concrete path instantiation, so an
        item reached twice counts twice; this is what makes means and
        ratios weight by multiplicity.
        """

        def run():
            spec = self.model.require(class_id)
            if path.anchor != class_id:
                raise GraphLoomError("derivation path must anchor at the derived class")
            attrs = self.network.attribute_names(spec.table_id)
            if new_attr in attrs:
                raise NameCollision(f"class {spec.label!r} already has attribute {new_attr!r}")
            plan = self._path_plan(path)
            end_table = self.model.require(path.hops[-1]).table_id
            if target_attr not in self.network.attribute_names(end_table):
                raise UnknownAttribute(f"path target has no attribute {target_attr!r}")
            warn = self.warn
            old_table = spec.table_id

            def compute(net: TableNetwork):
                rows = net.evaluate(old_table)
                names = list(net.attribute_names(old_table)) + [new_attr]
                per_anchor = _collect_values(net, plan, end_table, target_attr)
                out = []
                for i, row in enumerate(rows):
                    out.append({**row, new_attr: eval_reduce(reducer, per_anchor.get(i, []), warn)})
                return names, out

            new_table = self.network.add_derived_table(
                f"{spec.label} (+{new_attr})",
                ComputedSpec(tuple(dict.fromkeys((old_table,) + plan.table_ids)), compute, label="derive-connected"),
            )
            self._swap_class_table(spec, new_table.id, origin_attr=None)
            params = {
                "class": class_id,
                "path": path_param(path),
                "targetAttr": target_attr,
                "reducer": expr_param(reducer),
                "attr": new_attr,
            }
            return self._commit("deriveConnected", params, [class_id])

        return self._transaction(run)

    def set_direction(self, edge_class_id: str, mode: str) -> OpRecord:
        """undirected | asIs | swapped."""

        def run():
            spec = self.model.require_edge(edge_class_id)
            ends = spec.edge_ends
            if mode == "undirected":
                ends.directed = False
            elif mode == "asIs":
                ends.directed = True
            elif mode == "swapped":
                ends.directed = True
                ends.source, ends.target = ends.target, ends.source
            else:
                raise GraphLoomError(f"unknown direction mode {mode!r}")
            self.model._endpoint_cache.clear()
            return self._commit("setDirection", {"class": edge_class_id, "mode": mode}, [edge_class_id])

        return self._transaction(run)

    # -- shared mechanics -------------------------------------------------------------

    def _check_predicate(self, predicate: PredicateSpec, spec: ClassSpec) -> None:
        attrs = set(self.network.attribute_names(spec.table_id))
        if predicate.source is not None:
            unknown = attr_names(parse(predicate.source)) - attrs
        else:
            unknown = {predicate.attr} - attrs
        if unknown:
            raise UnknownAttribute(f"predicate references unknown attributes: {sorted(unknown)}")

    def _replace_class_table(
        self,
        spec: ClassSpec,
        survivors: Callable[[TableNetwork], list[int]],
        name: str,
        extra_sources: tuple[str, ...] = (),
    ) -> None:
        """Swap a class onto a row-subset table, keeping paths resolvable."""
        old_table = spec.table_id
        names = self.network.attribute_names(old_table)
        origin_attr = "_origin"
        while origin_attr in names:
            origin_attr += "_"

        def compute(net: TableNetwork):
            rows = net.evaluate(old_table)
            out_names = list(net.attribute_names(old_table)) + [origin_attr]
            out = [{**rows[i], origin_attr: float(i)} for i in survivors(net)]
            return out_names, out

        new_table = self.network.add_derived_table(
            name, ComputedSpec(tuple(dict.fromkeys((old_table,) + extra_sources)), compute, label="filter")
        )
        self._swap_class_table(spec, new_table.id, origin_attr=origin_attr)

    def _wrap_class_table(self, spec: ClassSpec, new_attr: str, augment, name: str) -> None:
        """Swap a class onto a one-to-one wrapper table adding one column."""
        old_table = spec.table_id

        def compute(net: TableNetwork):
            rows = net.evaluate(old_table)
            names = list(net.attribute_names(old_table)) + [new_attr]
            out = [{**row, new_attr: augment(net, row)} for row in rows]
            return names, out

        new_table = self.network.add_derived_table(name, ComputedSpec((old_table,), compute, label="derive"))
        self._swap_class_table(spec, new_table.id, origin_attr=None)

    def _swap_class_table(self, spec: ClassSpec, new_table_id: str, origin_attr: Optional[str]) -> None:
        """Point a class at a replacement table and reroute affected paths.

        origin_attr names the backlink column for row subsets; None means
        the replacement is one-to-one and ordinal-preserving, so identity
        index links suffice.
        """
        old_table = spec.table_id
        if origin_attr is None:
            forward = self.network.add_link(TableLink(old_table, INDEX, new_table_id, INDEX))
            backward = self.network.add_link(TableLink(new_table_id, INDEX, old_table, INDEX))
        else:
            forward = self.network.add_link(TableLink(old_table, INDEX, new_table_id, origin_attr))
            backward = self.network.add_link(TableLink(new_table_id, origin_attr, old_table, INDEX))
        # incoming: edge sides ending at this class now extend to the new table
        for other in self.model.classes.values():
            ends = other.edge_ends
            if ends is None:
                continue
            for side in (ends.source, ends.target):
                if side is not None and side.end_class_id == spec.id:
                    side.links = side.links + (forward,)
        # outgoing: this class's own edge paths now start one hop earlier
        if spec.edge_ends is not None:
            for side in (spec.edge_ends.source, spec.edge_ends.target):
                if side is not None:
                    side.links = (backward,) + side.links
        spec.table_id = new_table_id
        self.model._endpoint_cache.clear()

    def _path_plan(self, path: PathSpec) -> _PathPlan:
        """Validate a path against the model and pin it to table-level links."""
        sequence = [self.model.require(cid) for cid in path.classes()]
        if not path.hops:
            raise GraphLoomError("a path needs at least one hop")
        steps: list[_Step] = []
        for prev, nxt in zip(sequence, sequence[1:]):
            kinds = (prev.interpretation, nxt.interpretation)
            if kinds == (Interpretation.NODE, Interpretation.EDGE):
                ends = nxt.edge_ends
                chains = tuple(
                    side.links
                    for side in (ends.source, ends.target)
                    if side is not None and side.end_class_id == prev.id
                )
                if not chains:
                    raise GraphLoomError(f"classes {prev.label!r} and {nxt.label!r} are not adjacent")
                steps.append(_Step("n2e", chains))
            elif kinds == (Interpretation.EDGE, Interpretation.NODE):
                ends = prev.edge_ends
                chains = tuple(
                    side.links
                    for side in (ends.source, ends.target)
                    if side is not None and side.end_class_id == nxt.id
                )
                if not chains:
                    raise GraphLoomError(f"classes {prev.label!r} and {nxt.label!r} are not adjacent")
                steps.append(_Step("e2n", chains))
            else:
                raise GraphLoomError("path hops must alternate between node and edge classes")
        table_ids = tuple(dict.fromkeys(spec.table_id for spec in sequence))
        return _PathPlan(sequence[0].table_id, sequence[-1].table_id, tuple(steps), table_ids)


def _collect_values(network: TableNetwork, plan: _PathPlan, end_table: str, target_attr: str) -> dict[int, list]:
    """Anchor ordinal -> target values, one per path instantiation."""
    rows = network.evaluate(end_table)
    out: dict[int, list] = {}
    for tup in _path_instances(network, plan):
        out.setdefault(tup[0], []).append(rows[tup[-1]].get(target_attr))
    return out
