"""HTTP facade for the engine, one project per process.

Payloads use the canonical document serialization. Mutations funnel
through the engine's transaction lock and bump a monotone sequence
number that responses echo, so a polling client can detect staleness;
mutating requests may pin the sequence number they saw and get a 409
if it moved.
"""

from __future__ import annotations

import uuid
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from graphloom import io as gio
from graphloom import pipeline, sampler
from graphloom.errors import GraphLoomError, ValidationError
from graphloom.heuristic import score_all_pairs, score_all_pairs_sampled
from graphloom.model import Interpretation, ItemRef
from graphloom.ops import Engine, param_expr, param_path
from graphloom.values import sort_key, summarize_column

MAX_PATH_DEPTH = 8
MAX_PATHS = 1000


def _doc_response(payload, status_code: int = 200) -> Response:
    return Response(content=gio.canonical_bytes(payload), media_type="application/json", status_code=status_code)


def _item_id(ref: ItemRef) -> str:
    return f"{ref.class_id}/{ref.ordinal}"


def _parse_item(text: str) -> ItemRef:
    class_id, _, ordinal = text.rpartition("/")
    return ItemRef(class_id, int(ordinal))


def model_payload(engine: Engine) -> dict:
    classes = []
    for spec in engine.model.classes.values():
        entry = {
            "id": spec.id,
            "label": spec.label,
            "interpretation": spec.interpretation.value,
            "color": float(spec.color) if spec.color is not None else "gray",
            "instances": float(engine.model.count_instances(spec.id)),
        }
        if spec.edge_ends is not None:
            ends = spec.edge_ends
            entry["directed"] = ends.directed
            entry["sourceClass"] = ends.source.end_class_id if ends.source else None
            entry["targetClass"] = ends.target.end_class_id if ends.target else None
        classes.append(entry)
    return {"classes": classes, "sequenceNumber": float(engine.mutation_seq)}


def enumerate_paths(engine: Engine, anchor: str, max_depth: int) -> tuple[list[dict], bool]:
    """All alternating class paths from the anchor, loops included."""
    model = engine.model
    model.require(anchor)
    max_depth = max(1, min(max_depth, MAX_PATH_DEPTH))
    found: list[dict] = []
    truncated = False

    def next_hops(class_id: str) -> list[str]:
        spec = model.classes[class_id]
        if spec.interpretation is Interpretation.NODE:
            return [edge_id for edge_id, _side in model.adjacency_of_node_class(class_id)]
        if spec.interpretation is Interpretation.EDGE:
            ends = spec.edge_ends
            out = []
            for side in (ends.source, ends.target):
                if side is not None:
                    out.append(side.end_class_id)
            return out
        return []

    frontier: list[tuple[str, ...]] = [(anchor,)]
    for _depth in range(max_depth):
        advanced: list[tuple[str, ...]] = []
        for prefix in frontier:
            for nxt in dict.fromkeys(next_hops(prefix[-1])):
                path = prefix + (nxt,)
                if len(found) >= MAX_PATHS:
                    truncated = True
                    break
                found.append({"anchor": anchor, "hops": list(path[1:])})
                advanced.append(path)
            if truncated:
                break
        frontier = advanced
        if truncated or not frontier:
            break
    return found, truncated


def _sample_payload(engine: Engine, result: sampler.NetworkSample) -> dict:
    return {
        "nodes": [_item_id(r) for r in result.nodes],
        "links": [
            {"id": _item_id(e), "source": _item_id(s), "target": _item_id(t)} for e, s, t in result.edges
        ],
        "perClassCounts": {cid: float(n) for cid, n in result.per_class_counts.items()},
        "document": gio.parse_document(gio.sample_document(engine, result)),
    }


def _sample_from_payload(payload: dict) -> sampler.NetworkSample:
    nodes = [_parse_item(t) for t in payload.get("nodes", [])]
    edges = [
        (_parse_item(l["id"]), _parse_item(l["source"]), _parse_item(l["target"]))
        for l in payload.get("links", [])
    ]
    counts = {k: int(v) for k, v in (payload.get("perClassCounts") or {}).items()}
    return sampler.NetworkSample(nodes, edges, counts)


def create_app(engine: Engine, ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="graphloom service")
    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.exception_handler(GraphLoomError)
    async def engine_error(_request: Request, err: GraphLoomError):
        return JSONResponse(status_code=400, content={"error": type(err).__name__, "message": str(err)})

    @app.exception_handler(Exception)
    async def internal_error(_request: Request, err: Exception):
        incident = uuid.uuid4().hex[:12]
        return JSONResponse(
            status_code=500,
            content={"error": "Internal", "message": str(err), "incident": incident},
        )

    @app.get("/model")
    def get_model():
        with engine.lock:
            return _doc_response(model_payload(engine))

    @app.get("/classes/{class_id}/rows")
    def get_rows(
        class_id: str,
        offset: int = 0,
        limit: int = 50,
        sortBy: Optional[str] = None,
        dir: str = "asc",
    ):
        with engine.lock:
            spec = engine.model.require(class_id)
            rows = engine.network.evaluate(spec.table_id)
            names = engine.network.attribute_names(spec.table_id)
            ordered = list(enumerate(rows))
            if sortBy is not None:
                if sortBy not in names:
                    raise GraphLoomError(f"no attribute {sortBy!r} to sort by")
                ordered.sort(key=lambda pair: sort_key(pair[1].get(sortBy)), reverse=(dir == "desc"))
            window = ordered[max(0, offset) : max(0, offset) + max(0, limit)]
            columns = [
                {"name": name, "summary": summarize_column(r.get(name) for r in rows).as_map()}
                for name in names
            ]
            payload = {
                "class": class_id,
                "total": float(len(rows)),
                "columns": columns,
                "rows": [{"ordinal": float(i), "cells": row} for i, row in window],
                "sequenceNumber": float(engine.mutation_seq),
            }
            return _doc_response(payload)

    @app.post("/ops")
    async def post_op(request: Request):
        body = gio.parse_document(await request.body())
        if not isinstance(body, dict) or "opName" not in body:
            raise ValidationError("op body needs opName and params")
        with engine.lock:
            pinned = body.get("ifSequence")
            if pinned is not None and int(pinned) != engine.mutation_seq:
                return JSONResponse(
                    status_code=409,
                    content={
                        "error": "Stale",
                        "message": "sequence number moved",
                        "sequenceNumber": engine.mutation_seq,
                    },
                )
            record = pipeline.apply_op(engine, body["opName"], body.get("params") or {})
            payload = model_payload(engine)
            payload["applied"] = {
                "opName": record.op_name,
                "params": record.params,
                "resultClassIds": list(record.result_class_ids),
            }
            return _doc_response(payload)

    @app.get("/connect/scores")
    def get_scores(src: str, trg: str, sample: Optional[int] = None, seed: int = 0):
        with engine.lock:
            if sample:
                scores = score_all_pairs_sampled(engine.model, src, trg, sample, seed)
            else:
                scores = score_all_pairs(engine.model, src, trg)
            payload = {
                "src": src,
                "trg": trg,
                "scores": [s.as_map() for s in scores],
                "sequenceNumber": float(engine.mutation_seq),
            }
            return _doc_response(payload)

    @app.get("/paths")
    def get_paths(anchor: str, maxDepth: int = 4):
        with engine.lock:
            paths, truncated = enumerate_paths(engine, anchor, maxDepth)
            return _doc_response(
                {"paths": paths, "truncated": truncated, "sequenceNumber": float(engine.mutation_seq)}
            )

    @app.post("/preview/derive")
    async def preview_derive(request: Request):
        body = gio.parse_document(await request.body())
        with engine.lock:
            path = param_path(body["path"])
            reducer = param_expr(body["reducer"])
            target_attr = body["targetAttr"]
            sample_rows = int(body.get("sampleRows", 10))
            spec = engine.model.require(path.anchor)
            plan = engine._path_plan(path)
            end_table = engine.model.require(path.hops[-1]).table_id
            from graphloom.ops import _collect_values
            from graphloom.expr import eval_reduce

            per_anchor = _collect_values(engine.network, plan, end_table, target_attr)
            count = min(sample_rows, engine.network.row_count(spec.table_id))
            values = [
                {"ordinal": float(i), "value": eval_reduce(reducer, per_anchor.get(i, []), engine.warn)}
                for i in range(count)
            ]
            return _doc_response({"values": values, "sequenceNumber": float(engine.mutation_seq)})

    @app.get("/sample")
    def get_sample(perClass: int = 5, seed: int = 0):
        with engine.lock:
            result = sampler.sample(engine.model, sampler.SampleSpec(perClass, (), seed))
            return _doc_response(_sample_payload(engine, result))

    @app.post("/sample/expand")
    async def post_expand(request: Request):
        body = gio.parse_document(await request.body())
        with engine.lock:
            current = _sample_from_payload(body.get("sample") or {})
            expanded = sampler.expand_neighbors(engine.model, current, _parse_item(body["node"]))
            return _doc_response(_sample_payload(engine, expanded))

    @app.post("/sample/seed")
    async def post_seed(request: Request):
        body = gio.parse_document(await request.body())
        with engine.lock:
            current = _sample_from_payload(body.get("sample") or {})
            items = [_parse_item(t) for t in body.get("items", [])]
            seeded = sampler.seed_from_table(engine.model, current, items)
            return _doc_response(_sample_payload(engine, seeded))

    @app.get("/export")
    def get_export(format: str = "nodeLink", includeDisconnectedEdges: bool = False):
        with engine.lock:
            request_spec = gio.ExportRequest(format=format, include_disconnected_edges=includeDisconnectedEdges)
            payload = gio.export(engine, request_spec)
            media = {
                "nodeLink": "application/json",
                "csvZip": "application/zip",
                "gexf": "application/xml",
            }[format]
            return Response(content=payload, media_type=media)

    @app.post("/import")
    async def post_import(request: Request):
        body = gio.parse_document(await request.body())
        with engine.lock:
            fmt = body.get("format", "csv")
            name = body.get("name", "import")
            text = body.get("text", "")
            importer = pipeline._IMPORTERS.get(fmt)
            if importer is None:
                raise ValidationError(f"unknown import format {fmt!r}")
            created = importer(engine, name, text)
            payload = model_payload(engine)
            payload["created"] = created if isinstance(created, list) else [created]
            return _doc_response(payload)

    return app
