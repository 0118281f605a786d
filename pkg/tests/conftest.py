from __future__ import annotations

import pytest

from graphloom.ops import Engine

# gender encoding used by the movie fixtures: 1 = man, 2 = woman
MAN, WOMAN = 1.0, 2.0


def build_movie_engine() -> tuple[Engine, dict]:
    """Small movies/people/cast network used across the suite.

    film f1 has cast genders [1,1,1,2] (3 men of 4), f2 has [2,2],
    f3 has no cast at all.
    """
    engine = Engine()
    movies = engine.add_static_class(
        "movies",
        ["mid", "title", "genre", "revenue"],
        [
            {"mid": "f1", "title": "Notting Hill", "genre": "Comedy", "revenue": 363_000_000},
            {"mid": "f2", "title": "Pretty Woman", "genre": "Comedy", "revenue": 463_000_000},
            {"mid": "f3", "title": "Quiet Drama", "genre": "Drama", "revenue": 8_000_000},
        ],
    )
    people = engine.add_static_class(
        "people",
        ["pid", "name", "gender"],
        [
            {"pid": "p1", "name": "Ada", "gender": WOMAN},
            {"pid": "p2", "name": "Ben", "gender": MAN},
            {"pid": "p3", "name": "Carl", "gender": MAN},
            {"pid": "p4", "name": "Dan", "gender": MAN},
            {"pid": "p5", "name": "Eve", "gender": WOMAN},
        ],
    )
    cast = engine.add_static_class(
        "cast",
        ["pid", "mid", "role"],
        [
            {"pid": "p2", "mid": "f1", "role": "lead"},
            {"pid": "p3", "mid": "f1", "role": "support"},
            {"pid": "p4", "mid": "f1", "role": "support"},
            {"pid": "p1", "mid": "f1", "role": "lead"},
            {"pid": "p1", "mid": "f2", "role": "lead"},
            {"pid": "p5", "mid": "f2", "role": "support"},
        ],
    )
    engine.interpret_as_node(movies.id)
    engine.interpret_as_node(people.id)
    engine.interpret_as_edge(cast.id)
    engine.connect(cast.id, people.id, "pid", "pid")
    engine.connect(cast.id, movies.id, "mid", "mid")
    return engine, {"movies": movies.id, "people": people.id, "cast": cast.id}


@pytest.fixture
def movie_engine():
    return build_movie_engine()
