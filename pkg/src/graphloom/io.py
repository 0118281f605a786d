"""Import and export formats, all byte-exact.

The canonical nested-document serialization is JSON with pinned
formatting: reserved keys first (fixed order), remaining keys sorted,
compact separators, shortest number rendering, "\\n" line ending, ASCII
escapes. Every document this package writes (exports, pipeline scripts,
service payloads) goes through it, which is what makes golden-file and
round-trip tests possible.
"""

from __future__ import annotations

import csv as _csv
import io as _io
import json
import zipfile
from dataclasses import dataclass, field
from typing import Optional

from graphloom.errors import GraphLoomError, MalformedCsv, UnsupportedShape
from graphloom.model import Interpretation, ItemRef
from graphloom.ops import Engine
from graphloom.values import (
    Kind,
    Value,
    canonical_number,
    infer_cell,
    kind_of,
    normalize,
)

RESERVED_KEYS = (
    "version",
    "id",
    "source",
    "target",
    "class",
    "directed",
    "opName",
    "params",
    "resultClassIds",
    "name",
    "format",
    "path",
    "inline",
    "imports",
    "ops",
    "exports",
    "nodes",
    "links",
    "danglingLinks",
)

_ESCAPES = {
    "\\": "\\\\",
    '"': '\\"',
    "\n": "\\n",
    "\r": "\\r",
    "\t": "\\t",
    "\b": "\\b",
    "\f": "\\f",
}


def _escape_text(text: str) -> str:
    out = []
    for ch in text:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20 or ord(ch) > 0x7E:
            code = ord(ch)
            if code > 0xFFFF:
                code -= 0x10000
                out.append(f"\\u{0xD800 + (code >> 10):04x}\\u{0xDC00 + (code & 0x3FF):04x}")
            else:
                out.append(f"\\u{code:04x}")
        else:
            out.append(ch)
    return "".join(out)


def _key_order(keys) -> list[str]:
    reserved = [k for k in RESERVED_KEYS if k in keys]
    rest = sorted(k for k in keys if k not in RESERVED_KEYS)
    return reserved + rest


def canonical_dumps(value: Value) -> str:
    kind = kind_of(value)
    if kind is Kind.NULL:
        return "null"
    if kind is Kind.BOOLEAN:
        return "true" if value else "false"
    if kind is Kind.NUMBER:
        return canonical_number(float(value))
    if kind is Kind.TEXT:
        return f'"{_escape_text(value)}"'
    if kind is Kind.LIST:
        return "[" + ",".join(canonical_dumps(v) for v in value) + "]"
    parts = [f'"{_escape_text(k)}":{canonical_dumps(value[k])}' for k in _key_order(value.keys())]
    return "{" + ",".join(parts) + "}"


def canonical_bytes(value: Value) -> bytes:
    return (canonical_dumps(value) + "\n").encode("utf-8")


def parse_document(text: str | bytes) -> Value:
    """Parse a nested document (JSON); non-finite numbers become null."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        raw = json.loads(text, parse_constant=lambda _: None)
    except json.JSONDecodeError as err:
        raise GraphLoomError(f"malformed document: {err}") from None
    return normalize(raw)


# --------------------------------------------------------------------------
# Import
# --------------------------------------------------------------------------


def import_csv(engine: Engine, name: str, text: str, path: Optional[str] = None) -> str:
    """RFC-4180-style CSV to a static table + generic class. Returns class id."""
    reader = _csv.reader(_io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedCsv(f"{name!r} has no header row") from None
    if not header:
        raise MalformedCsv(f"{name!r} has an empty header row")
    rows = []
    ragged = 0
    for cells in reader:
        if len(cells) != len(header):
            ragged += 1
            cells = (cells + [""] * len(header))[: len(header)]
        rows.append({h: infer_cell(c) for h, c in zip(header, cells)})
    if ragged:
        engine.warn(f"{name!r}: {ragged} ragged row(s) padded or truncated")
    spec = engine.add_static_class(name, header, rows, record=False)
    engine.register_import(name, "csv", path, None if path else text)
    return spec.id


def _rows_from_list(items: list) -> tuple[list[str], list[dict]]:
    names: list[str] = []
    rows = []
    for item in items:
        if kind_of(item) is Kind.MAP:
            for key in item:
                if key not in names:
                    names.append(key)
            rows.append(item)
        else:
            if "value" not in names:
                names.append("value")
            rows.append({"value": item})
    return names, rows


def import_nested(engine: Engine, name: str, text: str, path: Optional[str] = None) -> list[str]:
    """Nested document to static tables; list and map cells survive intact."""
    doc = parse_document(text)
    kind = kind_of(doc)
    created: list[str] = []
    if kind is Kind.LIST:
        names, rows = _rows_from_list(doc)
        created.append(engine.add_static_class(name, names, rows, record=False).id)
    elif kind is Kind.MAP:
        if not all(kind_of(v) is Kind.LIST for v in doc.values()):
            raise UnsupportedShape(f"{name!r}: expected a list of maps or a map of named lists")
        for table_name, items in doc.items():
            names, rows = _rows_from_list(items)
            created.append(engine.add_static_class(table_name, names, rows, record=False).id)
    else:
        raise UnsupportedShape(f"{name!r}: top-level value must be a list or map")
    engine.register_import(name, "nested", path, None if path else text)
    return created


def import_node_link(engine: Engine, name: str, text: str, path: Optional[str] = None) -> list[str]:
    """Node-link document to two plain static tables (name_nodes, name_links)."""
    doc = parse_document(text)
    if kind_of(doc) is not Kind.MAP or "nodes" not in doc or "links" not in doc:
        raise UnsupportedShape(f"{name!r}: expected a map with nodes and links")
    created = []
    for suffix in ("nodes", "links"):
        names, rows = _rows_from_list(doc[suffix])
        created.append(engine.add_static_class(f"{name}_{suffix}", names, rows, record=False).id)
    engine.register_import(name, "nodeLink", path, None if path else text)
    return created


def import_node_link_model(engine: Engine, text: str, path: Optional[str] = None, name: str = "import") -> list[str]:
    """Rebuild node and edge classes from a node-link export.

    Node class ids are recovered from the exported id prefixes, so
    re-exporting reproduces the original document byte for byte. Only
    valid on an engine whose model is still empty.
    """
    if engine.model.classes:
        raise GraphLoomError("node-link model import needs a fresh engine")
    doc = parse_document(text)
    if kind_of(doc) is not Kind.MAP or "nodes" not in doc or "links" not in doc:
        raise UnsupportedShape("expected a map with nodes and links")
    if doc.get("danglingLinks"):
        engine.warn("dangling links in the document were skipped")

    node_classes: dict[str, dict] = {}
    for node in doc["nodes"]:
        label = node.get("class")
        node_id = node.get("id")
        if not isinstance(node_id, str) or "/" not in node_id or not isinstance(label, str):
            raise UnsupportedShape("node entries need id and class")
        class_id = node_id.rsplit("/", 1)[0]
        bucket = node_classes.setdefault(label, {"class_id": class_id, "names": [], "rows": []})
        row = {k: v for k, v in node.items() if k not in ("id", "class")}
        for key in row:
            if key not in bucket["names"]:
                bucket["names"].append(key)
        bucket["rows"].append(row)

    created = []
    by_class_id: dict[str, str] = {}
    for label, bucket in node_classes.items():
        spec = engine.add_static_class(
            label, bucket["names"], bucket["rows"], Interpretation.NODE, class_id=bucket["class_id"], record=False
        )
        created.append(spec.id)
        by_class_id[bucket["class_id"]] = spec.id

    def split_ref(ref: str) -> tuple[str, int]:
        prefix, ordinal = ref.rsplit("/", 1)
        return prefix, int(ordinal)

    link_classes: dict[tuple, dict] = {}
    for link in doc["links"]:
        label = link.get("class")
        src_class, src_ord = split_ref(link["source"])
        trg_class, trg_ord = split_ref(link["target"])
        key = (label, src_class, trg_class, bool(link.get("directed")))
        bucket = link_classes.setdefault(key, {"names": ["_source", "_target"], "rows": []})
        row = {k: v for k, v in link.items() if k not in ("source", "target", "class", "directed")}
        for attr in row:
            if attr not in bucket["names"]:
                bucket["names"].append(attr)
        bucket["rows"].append({"_source": float(src_ord), "_target": float(trg_ord), **row})

    from graphloom.model import EdgeSide
    from graphloom.tables import INDEX, TableLink

    for (label, src_class, trg_class, directed), bucket in link_classes.items():
        spec = engine.add_static_class(label, bucket["names"], bucket["rows"], Interpretation.EDGE, record=False)
        src_link = engine.network.add_link(
            TableLink(spec.table_id, "_source", engine.model.classes[src_class].table_id, INDEX)
        )
        trg_link = engine.network.add_link(
            TableLink(spec.table_id, "_target", engine.model.classes[trg_class].table_id, INDEX)
        )
        engine.model.set_side(spec.id, "source", EdgeSide((src_link,), src_class))
        engine.model.set_side(spec.id, "target", EdgeSide((trg_link,), trg_class))
        spec.edge_ends.directed = directed
        created.append(spec.id)
    engine.register_import(name, "nodeLinkModel", path, None if path else text)
    return created


# --------------------------------------------------------------------------
# Export
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExportRequest:
    format: str = "nodeLink"  # nodeLink | csvZip | gexf
    class_selection: Optional[tuple[str, ...]] = None  # None means all
    include_disconnected_edges: bool = False


def _selected(engine: Engine, request: ExportRequest, interpretation: Interpretation) -> list:
    out = []
    for spec in engine.model.classes.values():
        if spec.interpretation is not interpretation:
            continue
        if request.class_selection is not None and spec.id not in request.class_selection:
            continue
        out.append(spec)
    return out


def _node_id(ref: ItemRef) -> str:
    return f"{ref.class_id}/{ref.ordinal}"


def _scalar_attrs(row: dict) -> dict:
    return {k: v for k, v in row.items() if kind_of(v) not in (Kind.LIST, Kind.MAP)}


def _link_pairs(engine: Engine, edge_spec, node_ids: set[str]):
    """Per edge row: exportable (source id, target id) pairs."""
    table = engine.model.endpoints_table(edge_spec.id)
    for ordinal, (sources, targets) in enumerate(table):
        pairs = [
            (_node_id(s), _node_id(t))
            for s in sources
            for t in targets
            if _node_id(s) in node_ids and _node_id(t) in node_ids
        ]
        resolved = [_node_id(r) for r in sources if _node_id(r) in node_ids], [
            _node_id(r) for r in targets if _node_id(r) in node_ids
        ]
        yield ordinal, pairs, resolved


def export_node_link(engine: Engine, request: ExportRequest) -> bytes:
    nodes = []
    node_ids: set[str] = set()
    for spec in _selected(engine, request, Interpretation.NODE):
        rows = engine.network.evaluate(spec.table_id)
        for ordinal, row in enumerate(rows):
            node_id = f"{spec.id}/{ordinal}"
            node_ids.add(node_id)
            nodes.append({"id": node_id, "class": spec.label, **_scalar_attrs(row)})
    links = []
    dangling = []
    for spec in _selected(engine, request, Interpretation.EDGE):
        rows = engine.network.evaluate(spec.table_id)
        directed = spec.edge_ends.directed
        for ordinal, pairs, (res_src, res_trg) in _link_pairs(engine, spec, node_ids):
            attrs = _scalar_attrs(rows[ordinal])
            attrs.pop("_source", None)
            attrs.pop("_target", None)
            if pairs:
                for src_id, trg_id in pairs:
                    links.append(
                        {"source": src_id, "target": trg_id, "class": spec.label, "directed": directed, **attrs}
                    )
            elif request.include_disconnected_edges:
                dangling.append(
                    {
                        "source": res_src[0] if res_src else None,
                        "target": res_trg[0] if res_trg else None,
                        "class": spec.label,
                        "directed": directed,
                        **attrs,
                    }
                )
    doc = {"nodes": nodes, "links": links}
    if request.include_disconnected_edges:
        doc["danglingLinks"] = dangling
    return canonical_bytes(doc)


def sample_document(engine: Engine, sample) -> bytes:
    """Serialize a network sample in the node-link shape (subset semantics)."""
    nodes = []
    for ref in sample.nodes:
        spec = engine.model.classes[ref.class_id]
        row = engine.network.evaluate(spec.table_id)[ref.ordinal]
        nodes.append({"id": _node_id(ref), "class": spec.label, **_scalar_attrs(row)})
    links = []
    for edge_ref, src_ref, trg_ref in sample.edges:
        spec = engine.model.classes[edge_ref.class_id]
        row = engine.network.evaluate(spec.table_id)[edge_ref.ordinal]
        attrs = _scalar_attrs(row)
        attrs.pop("_source", None)
        attrs.pop("_target", None)
        links.append(
            {
                "source": _node_id(src_ref),
                "target": _node_id(trg_ref),
                "class": spec.label,
                "directed": spec.edge_ends.directed,
                **attrs,
            }
        )
    return canonical_bytes({"nodes": nodes, "links": links})


def _csv_cell(value: Value) -> str:
    kind = kind_of(value)
    if kind is Kind.NULL:
        return ""
    if kind is Kind.BOOLEAN:
        return "true" if value else "false"
    if kind is Kind.NUMBER:
        return canonical_number(value)
    if kind is Kind.TEXT:
        return value
    return canonical_dumps(value)


def export_csv_zip(engine: Engine, request: ExportRequest) -> bytes:
    """One CSV per selected class, zipped with fixed metadata for byte stability."""
    buffer = _io.BytesIO()
    used_names: set[str] = set()
    selected = [
        spec
        for spec in engine.model.classes.values()
        if request.class_selection is None or spec.id in request.class_selection
    ]
    node_ids: set[str] = set()
    for spec in selected:
        if spec.interpretation is Interpretation.NODE:
            for ordinal in range(engine.network.row_count(spec.table_id)):
                node_ids.add(f"{spec.id}/{ordinal}")
    with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
        for spec in selected:
            base = spec.label
            filename = f"{base}.csv"
            counter = 2
            while filename in used_names:
                filename = f"{base}-{counter}.csv"
                counter += 1
            used_names.add(filename)
            rows = engine.network.evaluate(spec.table_id)
            attrs = list(engine.network.attribute_names(spec.table_id))
            out = _io.StringIO()
            writer = _csv.writer(out, lineterminator="\n")
            if spec.interpretation is Interpretation.EDGE:
                attrs = [a for a in attrs if a not in ("_source", "_target")]
                writer.writerow(["_source", "_target"] + attrs)
                for ordinal, pairs, (res_src, res_trg) in _link_pairs(engine, spec, node_ids):
                    cells = [_csv_cell(rows[ordinal].get(a)) for a in attrs]
                    if pairs:
                        for src_id, trg_id in pairs:
                            writer.writerow([src_id, trg_id] + cells)
                    elif request.include_disconnected_edges:
                        writer.writerow(
                            [res_src[0] if res_src else "", res_trg[0] if res_trg else ""] + cells
                        )
            else:
                writer.writerow(attrs)
                for row in rows:
                    writer.writerow([_csv_cell(row.get(a)) for a in attrs])
            info = zipfile.ZipInfo(filename, date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            archive.writestr(info, out.getvalue())
    return buffer.getvalue()


def _xml_escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )


def _gexf_type(values: list) -> str:
    kinds = {kind_of(v) for v in values if v is not None}
    if kinds == {Kind.NUMBER}:
        return "double"
    if kinds == {Kind.BOOLEAN}:
        return "boolean"
    return "string"


def _gexf_value(value: Value) -> str:
    kind = kind_of(value)
    if kind is Kind.BOOLEAN:
        return "true" if value else "false"
    if kind is Kind.NUMBER:
        return canonical_number(value)
    if kind is Kind.TEXT:
        return value
    return canonical_dumps(value)


def export_gexf(engine: Engine, request: ExportRequest) -> bytes:
    """GEXF 1.2draft document; class labels travel as a reserved attribute."""
    node_specs = _selected(engine, request, Interpretation.NODE)
    edge_specs = _selected(engine, request, Interpretation.EDGE)

    def attribute_block(specs, skip=()) -> tuple[list[tuple[str, str, str]], dict[str, str]]:
        columns: dict[str, list] = {}
        for spec in specs:
            rows = engine.network.evaluate(spec.table_id)
            for attr in engine.network.attribute_names(spec.table_id):
                if attr in skip:
                    continue
                columns.setdefault(attr, []).extend(row.get(attr) for row in rows)
        declared = [("0", "class", "string")]
        ids = {}
        for counter, attr in enumerate(sorted(columns), start=1):
            declared.append((str(counter), attr, _gexf_type(columns[attr])))
            ids[attr] = str(counter)
        return declared, ids

    node_attrs, node_ids_by_attr = attribute_block(node_specs)
    edge_attrs, edge_ids_by_attr = attribute_block(edge_specs, skip=("_source", "_target"))

    directed_flags = {spec.edge_ends.directed for spec in edge_specs}
    if directed_flags == {True}:
        default_type = "directed"
    else:
        default_type = "undirected"
    mixed = len(directed_flags) > 1

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<gexf xmlns="http://www.gexf.net/1.2draft" version="1.2">',
        '  <meta lastmodifieddate="2000-01-01">',
        "    <creator>graphloom</creator>",
        "  </meta>",
        f'  <graph mode="static" defaultedgetype="{default_type}">',
    ]
    for class_name, declared in (("node", node_attrs), ("edge", edge_attrs)):
        lines.append(f'    <attributes class="{class_name}">')
        for attr_id, title, attr_type in declared:
            lines.append(
                f'      <attribute id="{attr_id}" title="{_xml_escape(title)}" type="{attr_type}"/>'
            )
        lines.append("    </attributes>")

    known_node_ids: set[str] = set()
    lines.append("    <nodes>")
    for spec in node_specs:
        rows = engine.network.evaluate(spec.table_id)
        for ordinal, row in enumerate(rows):
            node_id = f"{spec.id}/{ordinal}"
            known_node_ids.add(node_id)
            lines.append(f'      <node id="{node_id}" label="{_xml_escape(node_id)}">')
            lines.append("        <attvalues>")
            lines.append(f'          <attvalue for="0" value="{_xml_escape(spec.label)}"/>')
            for attr, attr_id in node_ids_by_attr.items():
                value = row.get(attr)
                if value is None:
                    continue
                lines.append(f'          <attvalue for="{attr_id}" value="{_xml_escape(_gexf_value(value))}"/>')
            lines.append("        </attvalues>")
            lines.append("      </node>")
    lines.append("    </nodes>")

    lines.append("    <edges>")
    skipped_dangling = 0
    for spec in edge_specs:
        rows = engine.network.evaluate(spec.table_id)
        edge_type = "directed" if spec.edge_ends.directed else "undirected"
        for ordinal, pairs, _resolved in _link_pairs(engine, spec, known_node_ids):
            if not pairs:
                skipped_dangling += 1
                continue
            for pair_index, (src_id, trg_id) in enumerate(pairs):
                edge_id = f"{spec.id}/{ordinal}/{pair_index}"
                type_attr = f' type="{edge_type}"' if mixed else ""
                lines.append(
                    f'      <edge id="{edge_id}" source="{src_id}" target="{trg_id}"{type_attr}>'
                )
                lines.append("        <attvalues>")
                lines.append(f'          <attvalue for="0" value="{_xml_escape(spec.label)}"/>')
                row = rows[ordinal]
                for attr, attr_id in edge_ids_by_attr.items():
                    value = row.get(attr)
                    if value is None:
                        continue
                    lines.append(
                        f'          <attvalue for="{attr_id}" value="{_xml_escape(_gexf_value(value))}"/>'
                    )
                lines.append("        </attvalues>")
                lines.append("      </edge>")
    lines.append("    </edges>")
    lines.append("  </graph>")
    lines.append("</gexf>")
    if skipped_dangling:
        engine.warn(f"gexf export skipped {skipped_dangling} edge(s) without resolvable endpoints")
    return ("\n".join(lines) + "\n").encode("utf-8")


def export(engine: Engine, request: ExportRequest) -> bytes:
    if request.format == "nodeLink":
        return export_node_link(engine, request)
    if request.format == "csvZip":
        return export_csv_zip(engine, request)
    if request.format == "gexf":
        return export_gexf(engine, request)
    raise GraphLoomError(f"unknown export format {request.format!r}")
