"""Acceptance suite: one test per criterion, one pass/fail line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines.
"""

from __future__ import annotations

import functools
import itertools
import random
import time
import zipfile
from collections import Counter
from io import BytesIO

import networkx as nx

from gexf_check import validate_gexf
from graphloom import io as gio
from graphloom import pipeline
from graphloom.expr import ExprSpec, PredicateSpec
from graphloom.heuristic import score_all_pairs, score_all_pairs_sampled, score_pair
from graphloom.model import ItemRef
from graphloom.ops import Engine, PathSpec, expr_param, path_param, predicate_param
from graphloom.sampler import SampleSpec, sample
from graphloom.tables import INDEX

from conftest import build_movie_engine
from test_heuristic import engine_with, oracle_score
from test_ops import build_bipartite


def criterion(number: int, name: str):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"[ACCEPTANCE] {number:02d} {name}: FAIL")
                raise
            print(f"[ACCEPTANCE] {number:02d} {name}: PASS")

        return wrapper

    return decorate


@criterion(1, "heuristic bounds, oracle agreement, exact scorer speed")
def test_criterion_01():
    engine, src, trg = engine_with(
        [{"k": 1.0}, {"k": 2.0}], [{"k": 1.0}, {"k": 2.0}], ["k"], ["k"]
    )
    assert score_pair(engine.model, src, trg, "k", "k").total == 2.0
    engine, src, trg = engine_with(
        [{"k": 1.0}, {"k": 2.0}], [{"k": 7.0}, {"k": 8.0}], ["k"], ["k"]
    )
    assert score_pair(engine.model, src, trg, "k", "k").total == -2.0

    rng = random.Random(2024)
    pool = [None, 1.0, 2.0, 3.0, 4.0, "x", "y", "z", True, False]
    for trial in range(500):
        n = rng.randint(1, 200) if trial % 25 == 0 else rng.randint(1, 32)
        m = rng.randint(1, 200) if trial % 25 == 12 else rng.randint(1, 32)
        attr_count = rng.randint(1, 5)
        attrs = [f"a{i}" for i in range(attr_count)]
        src_rows = [{a: rng.choice(pool) for a in attrs} for _ in range(n)]
        trg_rows = [{a: rng.choice(pool) for a in attrs} for _ in range(m)]
        engine, src, trg = engine_with(src_rows, trg_rows, attrs, attrs)
        src_key = rng.choice(attrs + [INDEX])
        trg_key = rng.choice(attrs + [INDEX])
        score = score_pair(engine.model, src, trg, src_key, trg_key)
        total, src_c, trg_c, _sd, _td = oracle_score(src_rows, trg_rows, src_key, trg_key)
        assert abs(score.total - total) < 1e-9, f"trial {trial}"
        assert abs(score.src_contribution - src_c) < 1e-9
        assert abs(score.trg_contribution - trg_c) < 1e-9
        assert -2.0 <= score.total <= 2.0

    rng = random.Random(9)
    big_src = [{f"a{i}": rng.random() for i in range(5)} for _ in range(200)]
    big_trg = [{f"a{i}": rng.random() for i in range(5)} for _ in range(200)]
    engine, src, trg = engine_with(big_src, big_trg, [f"a{i}" for i in range(5)], [f"a{i}" for i in range(5)])
    started = time.perf_counter()
    ranked = score_all_pairs(engine.model, src, trg)
    elapsed = time.perf_counter() - started
    assert len(ranked) == 36
    assert elapsed < 5.0, f"exact all-pairs took {elapsed:.2f}s"


@criterion(2, "worked heuristic value 0.75")
def test_criterion_02():
    engine, src, trg = engine_with(
        [{"k": "a"}, {"k": "a"}], [{"k": "a"}, {"k": "b"}], ["k"], ["k"]
    )
    score = score_pair(engine.model, src, trg, "k", "k")
    assert score.total == 0.75
    total, *_ = oracle_score([{"k": "a"}, {"k": "a"}], [{"k": "a"}, {"k": "b"}], "k", "k")
    assert total == 0.75


@criterion(3, "promote: 2 genre nodes, 3 connecting edges")
def test_criterion_03():
    engine = Engine()
    movies = engine.add_static_class(
        "movies",
        ["title", "genre"],
        [
            {"title": "Notting Hill", "genre": "Comedy"},
            {"title": "Pretty Woman", "genre": "Comedy"},
            {"title": "Quiet Drama", "genre": "Drama"},
        ],
    )
    engine.interpret_as_node(movies.id)
    record = engine.promote(movies.id, "genre")
    genre_id, edge_id = record.result_class_ids
    assert engine.model.count_instances(genre_id) == 2
    assert engine.model.count_instances(edge_id) == 3


@criterion(4, "facet partitions the non-null rows; Comedy(2), Drama(1)")
def test_criterion_04():
    engine, ids = build_movie_engine()
    table_id = engine.model.classes[ids["movies"]].table_id
    source_rows = engine.network.evaluate(table_id)
    record = engine.facet(ids["movies"], "genre")
    by_label = {
        engine.model.classes[c].label: engine.model.count_instances(c)
        for c in record.result_class_ids
    }
    assert by_label == {"Comedy movies": 2, "Drama movies": 1}
    union = Counter()
    for cid in record.result_class_ids:
        for row in engine.network.evaluate(engine.model.classes[cid].table_id):
            union[repr(sorted(row.items(), key=lambda kv: kv[0]))] += 1
    expected = Counter(
        repr(sorted(row.items(), key=lambda kv: kv[0]))
        for row in source_rows
        if row.get("genre") is not None
    )
    assert union == expected


@criterion(5, "node-to-edge conversion: pair counts and 2-hop reachability")
def test_criterion_05():
    engine, _people, movies_id, _cast, pairs = build_bipartite(random.Random(1), 6, 3, 9)
    per_movie = Counter(m for _p, m in pairs)
    engine.convert_to_edges(movies_id)
    expected_pairs = sum(k * (k - 1) // 2 for k in per_movie.values())
    assert engine.model.count_instances(movies_id) == expected_pairs

    for seed in range(100):
        rng = random.Random(seed)
        engine, people_id, movies_id, _cast, pairs = build_bipartite(
            rng, n_people=rng.randint(3, 9), n_movies=rng.randint(1, 5), n_cast=rng.randint(2, 14)
        )
        by_movie: dict[int, set[int]] = {}
        for p, m in pairs:
            by_movie.setdefault(m, set()).add(p)
        expected = {
            pair
            for members in by_movie.values()
            for pair in itertools.combinations(sorted(members), 2)
        }
        engine.convert_to_edges(movies_id)
        got = set()
        for ordinal in range(engine.model.count_instances(movies_id)):
            sources, targets = engine.model.resolve_endpoints(ItemRef(movies_id, ordinal))
            for s in sources:
                for t in targets:
                    a, b = sorted((s.ordinal, t.ordinal))
                    if a != b:
                        got.add((a, b))
        assert got == expected, f"seed {seed}"


def build_chain(rng: random.Random):
    """actors -roles- movies -produced- companies, with explicit join tables."""
    engine = Engine()
    n_a, n_m, n_c = rng.randint(2, 6), rng.randint(2, 5), rng.randint(1, 4)
    actors = engine.add_static_class("actors", ["aid"], [{"aid": f"a{i}"} for i in range(n_a)])
    movies = engine.add_static_class("movies", ["mid"], [{"mid": f"m{i}"} for i in range(n_m)])
    companies = engine.add_static_class("companies", ["cid"], [{"cid": f"c{i}"} for i in range(n_c)])
    pairs_am = sorted({(rng.randrange(n_a), rng.randrange(n_m)) for _ in range(rng.randint(1, 10))})
    pairs_mc = sorted({(rng.randrange(n_m), rng.randrange(n_c)) for _ in range(rng.randint(1, 8))})
    roles = engine.add_static_class(
        "roles", ["aid", "mid"], [{"aid": f"a{a}", "mid": f"m{m}"} for a, m in pairs_am]
    )
    produced = engine.add_static_class(
        "produced", ["mid", "cid"], [{"mid": f"m{m}", "cid": f"c{c}"} for m, c in pairs_mc]
    )
    for nid in (actors.id, movies.id, companies.id):
        engine.interpret_as_node(nid)
    for eid in (roles.id, produced.id):
        engine.interpret_as_edge(eid)
    engine.connect(roles.id, actors.id, "aid", "aid")
    engine.connect(roles.id, movies.id, "mid", "mid")
    engine.connect(produced.id, movies.id, "mid", "mid")
    engine.connect(produced.id, companies.id, "cid", "cid")
    return engine, (actors.id, roles.id, movies.id, produced.id, companies.id), pairs_am, pairs_mc


@criterion(6, "edge projection count equals brute-force path enumeration")
def test_criterion_06():
    for seed in range(40):
        rng = random.Random(seed)
        engine, (actors, roles, movies, produced, companies), pairs_am, pairs_mc = build_chain(rng)
        record = engine.project_edge(PathSpec(actors, (roles, movies, produced, companies)))
        brute = {
            (a, i, b1, j, c)
            for i, (a, b1) in enumerate(pairs_am)
            for j, (b2, c) in enumerate(pairs_mc)
            if b1 == b2
        }
        assert engine.model.count_instances(record.result_class_ids[0]) == len(brute), f"seed {seed}"


@criterion(7, "filter/derive and convert/project equivalences")
def test_criterion_07():
    # filterConnectivity == deriveConnected followed by filterAttr
    for seed in range(100):
        rng = random.Random(seed)
        threshold = rng.choice([0.5, 1.0, 2.0])
        op = rng.choice([">=", ">", "="])

        def build():
            engine, people_id, movies_id, cast_id, _pairs = build_bipartite(
                rng_copy, n_people=rng_copy.randint(2, 7), n_movies=rng_copy.randint(1, 4), n_cast=rng_copy.randint(1, 10)
            )
            return engine, people_id, movies_id, cast_id

        rng_copy = random.Random(seed + 10_000)
        a_engine, a_people, a_movies, a_cast = build()
        rng_copy = random.Random(seed + 10_000)
        b_engine, b_people, b_movies, b_cast = build()

        path_a = PathSpec(a_people, (a_cast, a_movies))
        a_engine.filter_connectivity(
            a_people, path_a, "mid", ExprSpec.standard("count"),
            PredicateSpec.comparison("value", op, threshold),
        )
        path_b = PathSpec(b_people, (b_cast, b_movies))
        b_engine.derive_connected(b_people, path_b, "mid", ExprSpec.standard("count"), "tmp")
        b_engine.filter_attr(b_people, PredicateSpec.comparison("tmp", op, threshold))

        surviving_a = [
            row["_origin"]
            for row in a_engine.network.evaluate(a_engine.model.classes[a_people].table_id)
        ]
        surviving_b = [
            row["_origin"]
            for row in b_engine.network.evaluate(b_engine.model.classes[b_people].table_id)
        ]
        assert surviving_a == surviving_b, f"seed {seed}"

    # convert-to-edges adjacency == projection through the node class
    for seed in range(100):
        rng = random.Random(seed + 777)
        spec = (rng.randint(3, 8), rng.randint(1, 4), rng.randint(2, 12))
        engine_a, people_a, movies_a, cast_a, _ = build_bipartite(random.Random(seed), *spec)
        engine_b, people_b, movies_b, cast_b, _ = build_bipartite(random.Random(seed), *spec)

        engine_a.convert_to_edges(movies_a)
        adjacency_a = set()
        for ordinal in range(engine_a.model.count_instances(movies_a)):
            sources, targets = engine_a.model.resolve_endpoints(ItemRef(movies_a, ordinal))
            for s in sources:
                for t in targets:
                    if s.ordinal != t.ordinal:
                        adjacency_a.add(tuple(sorted((s.ordinal, t.ordinal))))

        record = engine_b.project_edge(
            PathSpec(people_b, (cast_b, movies_b, cast_b, people_b))
        )
        projected = record.result_class_ids[0]
        adjacency_b = set()
        for ordinal in range(engine_b.model.count_instances(projected)):
            sources, targets = engine_b.model.resolve_endpoints(ItemRef(projected, ordinal))
            for s in sources:
                for t in targets:
                    if s.ordinal != t.ordinal:
                        adjacency_b.add(tuple(sorted((s.ordinal, t.ordinal))))
        assert adjacency_a == adjacency_b, f"seed {seed}"


@criterion(8, "gender-bias derivation: 0.75 exactly, null for empty cast")
def test_criterion_08():
    engine, ids = build_movie_engine()
    path = PathSpec(ids["movies"], (ids["cast"], ids["people"]))
    ratio = ExprSpec.custom("sum(map(values, v -> if v = 1 then 1 else 0)) / count(values)")
    engine.derive_connected(ids["movies"], path, "gender", ratio, "men_ratio")
    rows = engine.network.evaluate(engine.model.classes[ids["movies"]].table_id)
    assert rows[0]["men_ratio"] == 0.75  # f1: three men of four cast members
    assert rows[2]["men_ratio"] is None  # f3 has no cast


@criterion(9, "taxonomy partition across a scripted 20-op session")
def test_criterion_09():
    engine, ids = build_movie_engine()  # 3 connect/interpret ops already applied
    modeling = {"connect", "disconnect", "promote", "facet", "convertToEdges", "convertToNodes",
                "projectEdge", "createSupernode", "rollupEdges"}
    item = {"filterAttr", "filterConnectivity"}
    attribute = {"deriveInClass", "deriveConnected", "setDirection"}

    path = PathSpec(ids["movies"], (ids["cast"], ids["people"]))
    people_path = PathSpec(ids["people"], (ids["cast"], ids["movies"]))
    session = [
        lambda: engine.promote(ids["movies"], "genre"),                                     # modeling
        lambda: engine.derive_in_class(ids["movies"], "rev_m", ExprSpec.custom("row.revenue / 1000000")),
        lambda: engine.derive_connected(ids["movies"], path, "gender", ExprSpec.standard("count"), "cast_n"),
        lambda: engine.set_direction(ids["cast"], "asIs"),
        lambda: engine.set_direction(ids["cast"], "undirected"),
        lambda: engine.facet(ids["movies"], "genre"),                                       # modeling
        lambda: engine.filter_attr(ids["movies"], PredicateSpec.comparison("revenue", ">", 0.0)),
        lambda: engine.filter_connectivity(ids["people"], people_path, "revenue",
                                           ExprSpec.standard("count"),
                                           PredicateSpec.comparison("value", ">=", 0.0)),
        lambda: engine.create_supernode(
            ids["movies"], PredicateSpec.comparison("genre", "=", "Comedy"), "Comedies"
        ),
        lambda: engine.rollup_edges(ids["cast"]),                                           # modeling
        lambda: engine.derive_in_class(ids["people"], "flag", ExprSpec.custom("1")),
        lambda: engine.set_direction(ids["cast"], "swapped"),
        lambda: engine.filter_attr(ids["people"], PredicateSpec.custom("true")),
        lambda: engine.derive_connected(ids["people"], people_path, "revenue", ExprSpec.standard("sum"), "gross"),
        lambda: engine.disconnect(ids["cast"], "source"),                                   # modeling
        lambda: engine.connect(ids["cast"], ids["people"], "pid", "pid"),                   # modeling
        lambda: engine.derive_in_class(ids["movies"], "flag2", ExprSpec.custom("2")),
        lambda: engine.filter_attr(ids["cast"], PredicateSpec.custom("true")),
        lambda: engine.set_direction(ids["cast"], "asIs"),
        lambda: engine.promote(ids["people"], "gender"),                                    # modeling
    ]
    assert len(session) == 20

    observed_counts: dict[int, dict[str, float]] = {}
    for step, action in enumerate(session):
        classes_before = set(engine.model.classes)
        counts_before = {c: engine.model.count_instances(c) for c in classes_before}
        record = action()
        observed_counts[len(engine.oplog) - 1] = {
            cid: float(engine.model.count_instances(cid))
            for cid in record.result_class_ids
            if cid in engine.model.classes
        }
        name = record.op_name
        if name in item:
            assert set(engine.model.classes) == classes_before, f"step {step}: {name} changed classes"
        elif name in attribute:
            assert set(engine.model.classes) == classes_before, f"step {step}: {name} changed classes"
            counts_after = {c: engine.model.count_instances(c) for c in classes_before}
            assert counts_after == counts_before, f"step {step}: {name} changed instance counts"
        else:
            assert name in modeling, f"step {step}: unclassified op {name}"

    # the session replays as a script with per-op count expectations embedded
    script = pipeline.record_session(engine)
    for index, expect in observed_counts.items():
        if expect:
            script["ops"][index]["expect"] = expect
    replayed, report = pipeline.run_script(script)
    assert len(report["ops"]) == len(script["ops"])


@criterion(10, "record/replay determinism, byte-identical exports")
def test_criterion_10():
    engine, ids = build_movie_engine()
    engine.promote(ids["movies"], "genre")
    engine.derive_connected(
        ids["movies"],
        PathSpec(ids["movies"], (ids["cast"], ids["people"])),
        "gender",
        ExprSpec.standard("count"),
        "cast_n",
    )
    engine.facet(ids["movies"], "genre")
    script = pipeline.record_session(engine)

    def adjacency(e):
        out = Counter()
        for spec in e.model.edge_classes():
            for ordinal, (sources, targets) in enumerate(e.model.endpoints_table(spec.id)):
                for s in sources:
                    for t in targets:
                        out[(spec.label, s, t)] += 1
        return out

    first, _ = pipeline.run_script(script)
    second, _ = pipeline.run_script(script)
    assert set(first.model.classes) == set(engine.model.classes)
    for cid in engine.model.classes:
        assert first.model.count_instances(cid) == engine.model.count_instances(cid)
    assert adjacency(first) == adjacency(engine)
    for format_name in ("nodeLink", "csvZip", "gexf"):
        request = gio.ExportRequest(format=format_name)
        original = gio.export(engine, request)
        assert gio.export(first, request) == original
        assert gio.export(second, request) == original


@criterion(11, "round trips: node-link bytes, csv values, gexf schema")
def test_criterion_11():
    engine, ids = build_movie_engine()
    engine.promote(ids["movies"], "genre")

    node_link = gio.export_node_link(engine, gio.ExportRequest())
    fresh = Engine()
    gio.import_node_link_model(fresh, node_link.decode("utf-8"))
    assert gio.export_node_link(fresh, gio.ExportRequest()) == node_link

    payload = gio.export_csv_zip(
        engine, gio.ExportRequest(format="csvZip", class_selection=(ids["movies"],))
    )
    text = zipfile.ZipFile(BytesIO(payload)).read("movies.csv").decode("utf-8")
    csv_engine = Engine()
    restored_id = gio.import_csv(csv_engine, "movies", text)
    original_rows = engine.network.evaluate(engine.model.classes[ids["movies"]].table_id)
    restored_rows = csv_engine.network.evaluate(csv_engine.model.classes[restored_id].table_id)
    assert list(original_rows) == list(restored_rows)

    gexf = gio.export_gexf(engine, gio.ExportRequest(format="gexf"))
    stats = validate_gexf(gexf)
    graph = nx.read_gexf(BytesIO(gexf))
    assert graph.number_of_nodes() == stats["nodes"]
    assert graph.number_of_edges() == stats["edges"]


@criterion(12, "sampler: coverage, quotas, no dangling, determinism")
def test_criterion_12():
    for seed in range(100):
        rng = random.Random(seed)
        engine = Engine()
        node_ids = []
        for klass in range(rng.randint(2, 3)):
            size = rng.randint(1, 15)
            spec = engine.add_static_class(
                f"n{klass}", ["k"], [{"k": f"{klass}:{i}"} for i in range(size)], record=False
            )
            engine.interpret_as_node(spec.id)
            node_ids.append((spec.id, size))
        edge_ids = []
        for eklass in range(rng.randint(1, 2)):
            left = node_ids[rng.randrange(len(node_ids))]
            right = node_ids[rng.randrange(len(node_ids))]
            pairs = sorted(
                {
                    (rng.randrange(left[1]), rng.randrange(right[1]))
                    for _ in range(rng.randint(1, 20))
                }
            )
            spec = engine.add_static_class(
                f"e{eklass}",
                ["a", "b"],
                [{"a": f"{node_ids.index(left)}:{x}", "b": f"{node_ids.index(right)}:{y}"} for x, y in pairs],
                record=False,
            )
            engine.interpret_as_edge(spec.id)
            engine.connect(spec.id, left[0], "a", "k")
            engine.connect(spec.id, right[0], "b", "k")
            edge_ids.append(spec.id)

        result = sample(engine.model, SampleSpec(target_per_class=5, random_seed=seed))
        node_set = set(result.nodes)
        for cid, count in result.per_class_counts.items():
            assert count <= 5, f"seed {seed}: quota violated"
        for _e, s, t in result.edges:
            assert s in node_set and t in node_set, f"seed {seed}: dangling endpoint"
        for cid, _size in node_ids:
            if engine.model.count_instances(cid) > 0:
                assert result.per_class_counts[cid] >= 1, f"seed {seed}: node class missed"
        for cid in edge_ids:
            if engine.model.count_instances(cid) > 0:
                assert result.per_class_counts[cid] >= 1, f"seed {seed}: edge class missed"
        again = sample(engine.model, SampleSpec(target_per_class=5, random_seed=seed))
        assert gio.sample_document(engine, again) == gio.sample_document(engine, result)


@criterion(13, "sampled scorer: planted key first, at least 10x faster")
def test_criterion_13():
    rng = random.Random(0)
    n = 10_000
    categories = ["a", "b", "c", "d", "e", "f", "g", "h"]
    src_rows = [
        {
            "key": f"id{i}",
            "n1": rng.choice(categories),
            "n2": rng.random(),
            "n3": rng.choice(categories),
            "n4": rng.random(),
        }
        for i in range(n)
    ]
    order = list(range(n))
    rng.shuffle(order)
    trg_rows = [
        {
            "key": f"id{j}",
            "m1": rng.choice(categories),
            "m2": rng.random(),
            "m3": rng.choice(categories),
            "m4": rng.random(),
        }
        for j in order
    ]
    engine, src, trg = engine_with(
        src_rows, trg_rows, ["key", "n1", "n2", "n3", "n4"], ["key", "m1", "m2", "m3", "m4"]
    )
    engine.network.evaluate(engine.model.classes[src].table_id)
    engine.network.evaluate(engine.model.classes[trg].table_id)

    started = time.perf_counter()
    exact = score_all_pairs(engine.model, src, trg)
    exact_seconds = time.perf_counter() - started
    started = time.perf_counter()
    sampled = score_all_pairs_sampled(engine.model, src, trg, 500, seed=42)
    sampled_seconds = time.perf_counter() - started

    assert (exact[0].src_key, exact[0].trg_key) == ("key", "key")
    assert (sampled[0].src_key, sampled[0].trg_key) == ("key", "key")
    speedup = exact_seconds / sampled_seconds
    print(f"    exact {exact_seconds:.3f}s, sampled {sampled_seconds:.3f}s, speedup {speedup:.1f}x")
    assert speedup >= 10.0, f"sampled scorer only {speedup:.1f}x faster"
