from __future__ import annotations

import pytest

from graphloom.errors import CyclicDerivation, NameCollision, UnknownAttribute
from graphloom.tables import INDEX, ComputedSpec, TableLink, TableNetwork


def small_network():
    warnings: list[str] = []
    network = TableNetwork(warn=warnings.append)
    return network, warnings


def test_add_static_table():
    network, warnings = small_network()
    table = network.add_static_table(
        "movies", ["title", "genre"], [{"title": "A", "genre": "Comedy", "junk": 1}]
    )
    assert network.row_count(table.id) == 1
    assert warnings and "junk" not in str(network.evaluate(table.id))
    empty = network.add_static_table("empty", ["a"], [])
    assert network.row_count(empty.id) == 0
    with pytest.raises(NameCollision):
        network.add_static_table("dup", ["a", "a"], [])


def test_missing_attributes_become_null():
    network, _ = small_network()
    table = network.add_static_table("t", ["a", "b"], [{"a": 1}])
    assert network.evaluate(table.id)[0] == {"a": 1.0, "b": None}


def test_evaluate_identity_and_static_rows():
    network, _ = small_network()
    table = network.add_static_table("t", ["a"], [{"a": 1}, {"a": 2}])
    first = network.evaluate(table.id)
    assert network.evaluate(table.id) is first


def test_promoted_table():
    network, _ = small_network()
    movies = network.add_static_table(
        "movies", ["genre"], [{"genre": "Comedy"}, {"genre": "Comedy"}, {"genre": "Drama"}]
    )
    promoted = network.promote_table(movies.id, "genre")
    rows = network.evaluate(promoted.id)
    assert [r["genre"] for r in rows] == ["Comedy", "Drama"]  # first-seen order

    nulls = network.add_static_table("n", ["g"], [{"g": None}, {"g": None}])
    assert network.row_count(network.promote_table(nulls.id, "g").id) == 0


def test_unroll_table():
    network, _ = small_network()
    movies = network.add_static_table(
        "movies",
        ["title", "companies"],
        [
            {"title": "A", "companies": [{"name": "x"}, {"name": "y"}]},
            {"title": "B", "companies": [{"name": "z"}]},
            {"title": "C", "companies": []},
        ],
    )
    unrolled = network.unroll(movies.id, "companies")
    rows = network.evaluate(unrolled.id)
    assert len(rows) == 3  # sum of list lengths
    assert rows[0] == {"_origin": 0.0, "name": "x"}
    # the registered backlink matches rows to their source
    link = network.links[-1]
    assert link.source_key == "_origin" and link.target_key is INDEX
    assert network.match_map(link) == {0: (0,), 1: (0,), 2: (1,)}

    scalars = network.add_static_table("s", ["xs"], [{"xs": [1, 2]}, {"xs": "oops"}])
    flat = network.unroll(scalars.id, "xs")
    assert [r["value"] for r in network.evaluate(flat.id)] == [1.0, 2.0]


def test_expand_table():
    network, _ = small_network()
    tweets = network.add_static_table(
        "tweets",
        ["text", "user"],
        [
            {"text": "hi", "user": {"handle": "a", "followers": 10}},
            {"text": "yo", "user": {"handle": "b"}},
            {"text": "??", "user": "not-a-map"},
        ],
    )
    expanded = network.expand(tweets.id, "user")
    rows = network.evaluate(expanded.id)
    assert len(rows) == 3  # one row per source row
    assert rows[0] == {"_origin": 0.0, "handle": "a", "followers": 10.0}
    assert rows[1] == {"_origin": 1.0, "handle": "b", "followers": None}
    assert rows[2] == {"_origin": 2.0, "handle": None, "followers": None}
    with pytest.raises(UnknownAttribute):
        network.expand(tweets.id, "nope")


def test_faceted_table():
    network, _ = small_network()
    movies = network.add_static_table(
        "movies", ["genre"], [{"genre": "Comedy"}, {"genre": None}, {"genre": "Comedy"}]
    )
    facet = network.facet_table(movies.id, "genre", "Comedy", "comedy")
    assert network.row_count(facet.id) == 2


def test_link_matching_rules():
    network, _ = small_network()
    left = network.add_static_table("l", ["k"], [{"k": ["c1", "c2"]}, {"k": None}, {"k": "c2"}])
    right = network.add_static_table("r", ["k"], [{"k": "c1"}, {"k": "c2"}, {"k": None}])
    link = network.add_link(TableLink(left.id, "k", right.id, "k"))
    mapping = network.match_map(link)
    assert mapping == {0: (0, 1), 2: (1,)}  # null keys never match, list cells match per element

    # index-to-index over equal length tables pairs every ordinal
    ident = network.add_link(TableLink(left.id, INDEX, right.id, INDEX))
    assert network.match_map(ident) == {0: (0,), 1: (1,), 2: (2,)}


def test_cycle_detection():
    network, _ = small_network()
    base = network.add_static_table("b", ["a"], [{"a": 1}])
    derived = network.add_derived_table(
        "d", ComputedSpec((base.id,), lambda net: (["a"], list(net.evaluate(base.id))))
    )
    # adversarial: rewire the derivation to depend on itself
    network.tables[derived.id].derivation = ComputedSpec(
        (derived.id,), lambda net: (["a"], list(net.evaluate(derived.id)))
    )
    with pytest.raises(CyclicDerivation):
        network.evaluate(derived.id)


def test_invalidation_hits_exactly_the_downstream_closure():
    network, _ = small_network()
    base = network.add_static_table("base", ["a"], [{"a": 1}])
    other = network.add_static_table("other", ["a"], [{"a": 9}])
    mid = network.add_derived_table(
        "mid", ComputedSpec((base.id,), lambda net: (["a"], [dict(r) for r in net.evaluate(base.id)]))
    )
    top = network.add_derived_table(
        "top", ComputedSpec((mid.id,), lambda net: (["a"], [dict(r) for r in net.evaluate(mid.id)]))
    )
    top_rows = network.evaluate(top.id)
    other_rows = network.evaluate(other.id)
    mid_rows = network.evaluate(mid.id)

    network.replace_static_rows(base.id, [{"a": 2}])
    assert network.evaluate(other.id) is other_rows  # untouched table keeps cache identity
    assert network.evaluate(mid.id) is not mid_rows
    assert network.evaluate(top.id) is not top_rows
    assert network.evaluate(top.id)[0]["a"] == 2.0


def test_rename_attribute():
    network, _ = small_network()
    table = network.add_static_table("t", ["old", "b"], [{"old": 1, "b": 2}])
    target = network.add_static_table("u", ["k"], [{"k": 1}])
    link = network.add_link(TableLink(table.id, "old", target.id, "k"))
    network.rename_attribute(table.id, "old", "new")
    assert network.attribute_names(table.id) == ("new", "b")
    assert link.source_key == "new"
    assert network.match_map(link) == {0: (0,)}
    with pytest.raises(NameCollision):
        network.rename_attribute(table.id, "new", "b")

    derived = network.promote_table(table.id, "new")
    network.rename_attribute(derived.id, "new", "value")
    assert network.attribute_names(derived.id) == ("value",)
    assert network.evaluate(derived.id)[0] == {"value": 1.0}
