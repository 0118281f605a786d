"""Replayable pipeline scripts and project persistence.

A script is the ordered record of a wrangling session: imports, then
operations, then exports. Scripts validate fully before anything
executes; a script that fails validation writes nothing. Running a
recorded session against the same inputs reproduces instance counts,
adjacency, and export bytes exactly, which is what lets interactive
sessions scale to offline batch runs.
"""

from __future__ import annotations

import time
from pathlib import Path
from typing import Callable, Optional

from graphloom import io as gio
from graphloom.errors import GraphLoomError, ValidationError
from graphloom.expr import ExprSpec, PredicateSpec
from graphloom.ops import (
    Engine,
    OpRecord,
    param_expr,
    param_key,
    param_path,
    param_predicate,
    param_reducers,
)

SCRIPT_VERSION = 1

IMPORT_FORMATS = ("csv", "nested", "nodeLink", "nodeLinkModel", "inlineTable")
EXPORT_FORMATS = ("nodeLink", "csvZip", "gexf")


def _import_inline_table(engine: Engine, name: str, text: str, path=None) -> str:
    doc = gio.parse_document(text)
    from graphloom.model import Interpretation

    interpretation = Interpretation(doc.get("interpretation", "generic"))
    spec = engine.add_static_class(name, doc["attributes"], doc["rows"], interpretation)
    return spec.id


_IMPORTERS: dict[str, Callable] = {
    "csv": gio.import_csv,
    "nested": gio.import_nested,
    "nodeLink": gio.import_node_link,
    "nodeLinkModel": lambda engine, name, text, path=None: gio.import_node_link_model(
        engine, text, path=path, name=name
    ),
    "inlineTable": _import_inline_table,
}


def _required(params: dict, *keys: str) -> None:
    for key in keys:
        if key not in params:
            raise ValidationError(f"missing parameter {key!r}")


_OP_APPLIERS: dict[str, Callable[[Engine, dict], OpRecord]] = {
    "connect": lambda e, p: e.connect(p["src"], p["trg"], param_key(p["srcKey"]), param_key(p["trgKey"])),
    "disconnect": lambda e, p: e.disconnect(p["class"], p["side"]),
    "promote": lambda e, p: e.promote(p["class"], p["attr"]),
    "facet": lambda e, p: e.facet(p["class"], p["attr"], allow_many=bool(p.get("allowMany"))),
    "convertToEdges": lambda e, p: e.convert_to_edges(
        p["class"],
        tuple(p["sourceVia"]) if p.get("sourceVia") else None,
        tuple(p["targetVia"]) if p.get("targetVia") else None,
    ),
    "convertToNodes": lambda e, p: e.convert_to_nodes(p["class"]),
    "projectEdge": lambda e, p: e.project_edge(param_path(p["path"])),
    "createSupernode": lambda e, p: e.create_supernode(
        p["class"], param_predicate(p["filter"]), p["label"], param_reducers(p.get("reducers"))
    ),
    "rollupEdges": lambda e, p: e.rollup_edges(p["class"], param_reducers(p.get("reducers"))),
    "filterAttr": lambda e, p: e.filter_attr(p["class"], param_predicate(p["predicate"])),
    "filterConnectivity": lambda e, p: e.filter_connectivity(
        p["class"], param_path(p["path"]), p["targetAttr"], param_expr(p["reducer"]), param_predicate(p["predicate"])
    ),
    "deriveInClass": lambda e, p: e.derive_in_class(p["class"], p["attr"], param_expr(p["expr"])),
    "deriveConnected": lambda e, p: e.derive_connected(
        p["class"], param_path(p["path"]), p["targetAttr"], param_expr(p["reducer"]), p["attr"]
    ),
    "setDirection": lambda e, p: e.set_direction(p["class"], p["mode"]),
    "interpretAsNode": lambda e, p: e.interpret_as_node(p["class"]),
    "interpretAsEdge": lambda e, p: e.interpret_as_edge(p["class"]),
    "interpretAsGeneric": lambda e, p: e.interpret_as_generic(p["class"]),
    "renameClass": lambda e, p: e.rename_class(p["class"], p["label"]),
    "renameAttribute": lambda e, p: e.rename_attribute(p["class"], p["old"], p["new"]),
    "deleteClass": lambda e, p: e.delete_class(p["class"]),
    "unrollToClass": lambda e, p: e.unroll_to_class(p["class"], p["attr"]),
    "expandToClass": lambda e, p: e.expand_to_class(p["class"], p["attr"]),
}

_OP_PARAM_CHECKS: dict[str, tuple[str, ...]] = {
    "connect": ("src", "trg", "srcKey", "trgKey"),
    "disconnect": ("class", "side"),
    "promote": ("class", "attr"),
    "facet": ("class", "attr"),
    "convertToEdges": ("class",),
    "convertToNodes": ("class",),
    "projectEdge": ("path",),
    "createSupernode": ("class", "filter", "label"),
    "rollupEdges": ("class",),
    "filterAttr": ("class", "predicate"),
    "filterConnectivity": ("class", "path", "targetAttr", "reducer", "predicate"),
    "deriveInClass": ("class", "attr", "expr"),
    "deriveConnected": ("class", "path", "targetAttr", "reducer", "attr"),
    "setDirection": ("class", "mode"),
    "interpretAsNode": ("class",),
    "interpretAsEdge": ("class",),
    "interpretAsGeneric": ("class",),
    "renameClass": ("class", "label"),
    "renameAttribute": ("class", "old", "new"),
    "deleteClass": ("class",),
    "unrollToClass": ("class", "attr"),
    "expandToClass": ("class", "attr"),
}


def apply_op(engine: Engine, op_name: str, params: dict) -> OpRecord:
    if op_name not in _OP_APPLIERS:
        raise ValidationError(f"unknown operation {op_name!r}")
    return _OP_APPLIERS[op_name](engine, params)


# --------------------------------------------------------------------------
# Script construction and validation
# --------------------------------------------------------------------------


def record_session(engine: Engine) -> dict:
    """Serialize an engine's imports and operations as a replayable script."""
    imports = []
    for entry in engine.import_log:
        record = {"name": entry["name"], "format": entry["format"]}
        if entry.get("path"):
            record["path"] = entry["path"]
        else:
            inline = entry.get("inline")
            record["inline"] = inline if isinstance(inline, str) else gio.canonical_dumps(inline or "")
        imports.append(record)
    ops = [
        {"opName": op.op_name, "params": op.params, "resultClassIds": list(op.result_class_ids)}
        for op in engine.oplog
    ]
    return {"version": SCRIPT_VERSION, "imports": imports, "ops": ops, "exports": []}


def script_bytes(script: dict) -> bytes:
    return gio.canonical_bytes(script)


def parse_script(text: str | bytes) -> dict:
    return gio.parse_document(text)


def _check_expr_params(op_name: str, params: dict) -> None:
    # parse expressions and predicates now so bad scripts fail in validation
    for key in ("expr", "reducer"):
        if key in params:
            param_expr(params[key])
    for key in ("predicate", "filter"):
        if key in params:
            param_predicate(params[key])
    if "reducers" in params and params["reducers"]:
        param_reducers(params["reducers"])
    if "path" in params:
        path = params["path"]
        if not isinstance(path, dict) or "anchor" not in path or "hops" not in path:
            raise ValidationError(f"{op_name}: path needs anchor and hops")


def validate_script(script: dict, workdir: Optional[str] = None) -> list[str]:
    """Check a script end to end without executing it.

    Returns the list of class ids known to exist after a faithful replay
    (imports are read, but nothing is mutated or written).
    """
    if not isinstance(script, dict):
        raise ValidationError("script must be a document map")
    if script.get("version") != SCRIPT_VERSION:
        raise ValidationError(f"unsupported script version {script.get('version')!r}")
    for section in ("imports", "ops", "exports"):
        if not isinstance(script.get(section), list):
            raise ValidationError(f"script section {section!r} must be a list")

    known: list[str] = []
    probe = Engine()  # imports run against a scratch engine to learn class ids
    for position, entry in enumerate(script["imports"]):
        fmt = entry.get("format")
        if fmt not in IMPORT_FORMATS:
            raise ValidationError(f"import {position}: unknown format {fmt!r}")
        if not entry.get("name"):
            raise ValidationError(f"import {position}: missing name")
        if ("path" in entry) == ("inline" in entry):
            raise ValidationError(f"import {position}: exactly one of path or inline")
        try:
            text = _import_text(entry, workdir)
            result = _IMPORTERS[fmt](probe, entry["name"], text, path=entry.get("path"))
        except OSError as err:
            raise ValidationError(f"import {position}: unreadable input ({err})") from None
        except GraphLoomError as err:
            raise ValidationError(f"import {position}: {err}") from None
        known.extend([result] if isinstance(result, str) else result)

    dynamic = False
    for position, entry in enumerate(script["ops"]):
        op_name = entry.get("opName")
        if op_name not in _OP_APPLIERS:
            raise ValidationError(f"op {position}: unknown operation {op_name!r}")
        params = entry.get("params")
        if not isinstance(params, dict):
            raise ValidationError(f"op {position}: params must be a map")
        missing = [k for k in _OP_PARAM_CHECKS[op_name] if k not in params]
        if missing:
            raise ValidationError(f"op {position} ({op_name}): missing parameters {missing}")
        try:
            _check_expr_params(op_name, params)
        except GraphLoomError as err:
            raise ValidationError(f"op {position} ({op_name}): {err}") from None
        referenced = [params[k] for k in ("class", "src", "trg") if k in params]
        if "path" in params and isinstance(params["path"], dict):
            referenced.append(params["path"].get("anchor"))
            referenced.extend(params["path"].get("hops", []))
        for cid in referenced:
            if cid not in known and not dynamic:
                raise ValidationError(f"op {position} ({op_name}): unknown class {cid!r}")
        results = entry.get("resultClassIds") or []
        if results:
            known.extend(results)
        else:
            dynamic = True  # facet-like ops create data-dependent ids

    for position, entry in enumerate(script["exports"]):
        if entry.get("format") not in EXPORT_FORMATS:
            raise ValidationError(f"export {position}: unknown format {entry.get('format')!r}")
        if not entry.get("path"):
            raise ValidationError(f"export {position}: missing output path")
    return known


def _import_text(entry: dict, workdir: Optional[str]) -> str:
    if "inline" in entry:
        return entry["inline"]
    path = Path(entry["path"])
    if workdir is not None and not path.is_absolute():
        path = Path(workdir) / path
    return path.read_text(encoding="utf-8")


# --------------------------------------------------------------------------
# Execution
# --------------------------------------------------------------------------


def run_script(script: dict, workdir: Optional[str] = None, cache_enabled: bool = True) -> tuple[Engine, dict]:
    """Validate, then execute imports, ops, and exports in order.

    Returns the final engine and a run report. Any failure after
    validation removes files the run had already written.
    """
    validate_script(script, workdir)
    engine = Engine()
    engine.network.cache_enabled = cache_enabled
    report_ops = []
    written: list[Path] = []
    started = time.perf_counter()
    try:
        for entry in script["imports"]:
            text = _import_text(entry, workdir)
            _IMPORTERS[entry["format"]](engine, entry["name"], text, path=entry.get("path"))
        for position, entry in enumerate(script["ops"]):
            op_started = time.perf_counter()
            record = apply_op(engine, entry["opName"], entry["params"])
            expected_ids = entry.get("resultClassIds") or []
            if expected_ids and list(record.result_class_ids) != list(expected_ids):
                raise GraphLoomError(
                    f"op {position} ({entry['opName']}): replay produced classes "
                    f"{record.result_class_ids}, script recorded {expected_ids}"
                )
            counts = {}
            for cid in record.result_class_ids:
                if cid in engine.model.classes:
                    counts[cid] = float(engine.model.count_instances(cid))
            for cid, expected in (entry.get("expect") or {}).items():
                actual = float(engine.model.count_instances(cid))
                if actual != float(expected):
                    raise GraphLoomError(
                        f"op {position} ({entry['opName']}): expected {expected} instances "
                        f"in {cid!r}, found {actual}"
                    )
            report_ops.append(
                {
                    "opName": entry["opName"],
                    "resultClassIds": list(record.result_class_ids),
                    "instanceCounts": counts,
                    "seconds": round(time.perf_counter() - op_started, 6),
                }
            )
        export_paths = []
        for entry in script["exports"]:
            request = gio.ExportRequest(
                format=entry["format"],
                class_selection=tuple(entry["classes"]) if entry.get("classes") else None,
                include_disconnected_edges=bool(entry.get("includeDisconnectedEdges")),
            )
            payload = gio.export(engine, request)
            path = Path(entry["path"])
            if workdir is not None and not path.is_absolute():
                path = Path(workdir) / path
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(payload)
            written.append(path)
            export_paths.append(str(path))
    except BaseException:
        for path in written:
            try:
                path.unlink()
            except OSError:
                pass
        raise
    report = {
        "ops": report_ops,
        "exports": export_paths,
        "warnings": [str(w) for w in engine.warnings],
        "seconds": round(time.perf_counter() - started, 6),
    }
    return engine, report


# --------------------------------------------------------------------------
# Project documents
# --------------------------------------------------------------------------


def project_document(engine: Engine) -> dict:
    """Script plus a model snapshot for session persistence."""
    classes = []
    for spec in engine.model.classes.values():
        classes.append(
            {
                "id": spec.id,
                "label": spec.label,
                "interpretation": spec.interpretation.value,
                "color": float(spec.color) if spec.color is not None else "gray",
                "instances": float(engine.model.count_instances(spec.id)),
                "directed": bool(spec.edge_ends.directed) if spec.edge_ends else False,
            }
        )
    return {"version": SCRIPT_VERSION, "script": record_session(engine), "classes": classes}


def load_project(document: dict, workdir: Optional[str] = None) -> Engine:
    """Rebuild an engine by replaying a project's script.

    The stored snapshot is advisory; a count mismatch raises, because it
    means the inputs changed under the project.
    """
    if not isinstance(document, dict) or "script" not in document:
        raise ValidationError("project document needs a script")
    script = dict(document["script"])
    script["exports"] = []  # loading a project must not rewrite its outputs
    engine, _report = run_script(script, workdir)
    for entry in document.get("classes", []):
        cid = entry.get("id")
        expected = entry.get("instances")
        if cid in engine.model.classes and expected is not None:
            actual = float(engine.model.count_instances(cid))
            if actual != float(expected):
                raise GraphLoomError(
                    f"project snapshot expected {expected} instances in {cid!r}, found {actual}"
                )
    return engine
