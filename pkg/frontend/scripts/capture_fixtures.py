"""Capture service payloads for the frontend test fixtures.

Builds the movie fixture engine, drives the HTTP service exactly the way
the client does, and freezes the payloads under test/fixtures/. Run from
the frontend directory after changing the engine or the fixture:

    python3 scripts/capture_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from fastapi.testclient import TestClient

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "tests"))

from conftest import build_movie_engine  # noqa: E402

from graphloom import io as gio  # noqa: E402
from graphloom import pipeline  # noqa: E402
from graphloom.service import create_app  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "test" / "fixtures"

GESTURE_OPS = [
    {"opName": "promote", "params": {"class": "c0", "attr": "genre"}},
    {"opName": "setDirection", "params": {"class": "c2", "mode": "asIs"}},
    {
        "opName": "deriveConnected",
        "params": {
            "class": "c0",
            "path": {"anchor": "c0", "hops": ["c2", "c1"]},
            "targetAttr": "gender",
            "reducer": {"custom": "sum(map(values, v -> if v = 1 then 1 else 0)) / count(values)"},
            "attr": "men_ratio",
        },
    },
    {"opName": "facet", "params": {"class": "c0", "attr": "genre"}},
    {
        "opName": "filterAttr",
        "params": {
            "class": "c1",
            "predicate": {"attr": "gender", "op": ">", "literal": 0.0},
        },
    },
]


def dump(name: str, payload) -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {name}")


def main() -> None:
    engine, ids = build_movie_engine()
    http = TestClient(create_app(engine))
    preamble_ops = len(engine.oplog)

    dump("model.json", http.get("/model").json())
    dump(
        "rows_movies.json",
        http.get(f"/classes/{ids['movies']}/rows", params={"limit": 10}).json(),
    )
    dump(
        "scores.json",
        http.get("/connect/scores", params={"src": ids["people"], "trg": ids["cast"]}).json(),
    )
    dump("paths.json", http.get("/paths", params={"anchor": ids["people"], "maxDepth": 4}).json())
    dump("sample.json", http.get("/sample", params={"perClass": 3, "seed": 7}).json())

    preview = http.post(
        "/preview/derive",
        content=gio.canonical_bytes(
            {
                "path": GESTURE_OPS[2]["params"]["path"],
                "targetAttr": "gender",
                "reducer": GESTURE_OPS[2]["params"]["reducer"],
                "sampleRows": 3,
            }
        ),
    )
    dump("preview.json", preview.json())

    for op in GESTURE_OPS:
        response = http.post("/ops", content=gio.canonical_bytes(op))
        assert response.status_code == 200, response.text
    dump("model_after_ops.json", http.get("/model").json())
    dump(
        "derived_rows.json",
        http.get(f"/classes/{ids['movies']}/rows", params={"limit": 10}).json(),
    )
    script = pipeline.record_session(engine)
    dump(
        "recorded_ops.json",
        {"preamble": preamble_ops, "ops": script["ops"]},
    )


if __name__ == "__main__":
    main()
