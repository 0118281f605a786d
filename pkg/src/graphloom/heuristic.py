"""Connection support: attribute-pair scoring with degree distributions.

For a candidate key pair (n on the source class, m on the target class)
every item contributes 1/deg when it matches deg > 0 rows on the other
side and -1 when it matches none; each class's contributions are averaged
over the class size and the two averages are summed. The score lands in
[-2, 2]: exactly 2 for a perfect one-to-one matching with no mismatches,
exactly -2 when nothing matches at all. Matching is deep equality, with
list-valued cells matching per element and null never matching anything.

``score_pair`` and ``score_all_pairs`` are the straightforward reference
scorers, self-contained per key pair. ``score_all_pairs_sampled`` is the
batch estimator for large classes: it averages the same per-item terms
over a seeded row sample of each class (degrees of sampled items are
still computed against the full opposite column), cutting the per-pair
cost from the full row count down to the sample size.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from graphloom.errors import EmptyClass
from graphloom.model import NetworkModel
from graphloom.rng import Xorshift64Star
from graphloom.tables import INDEX, Key, _cell_keys
from graphloom.values import Kind, kind_of, value_key

INDEX_LABEL = "(index)"


def key_label(key: Key) -> str:
    return INDEX_LABEL if key is INDEX else key


@dataclass
class ConnectionScore:
    src_key: Key
    trg_key: Key
    total: float
    src_contribution: float
    trg_contribution: float
    src_histogram: dict[int, int]
    trg_histogram: dict[int, int]
    is_index_pair: bool
    approximate: bool = False

    def as_map(self) -> dict:
        return {
            "srcKey": key_label(self.src_key),
            "trgKey": key_label(self.trg_key),
            "total": self.total,
            "srcContribution": self.src_contribution,
            "trgContribution": self.trg_contribution,
            "srcDegrees": {str(d): float(n) for d, n in sorted(self.src_histogram.items())},
            "trgDegrees": {str(d): float(n) for d, n in sorted(self.trg_histogram.items())},
            "isIndexPair": self.is_index_pair,
            "approximate": self.approximate,
        }


def _row_keysets(rows, key: Key) -> list[list[tuple]]:
    return [_cell_keys(row, key, i) for i, row in enumerate(rows)]


def _degrees(own: list[list[tuple]], other: list[list[tuple]]) -> list[int]:
    """Per-item count of matching rows on the other side."""
    row_ids: dict[tuple, list[int]] = {}
    counts: dict[tuple, int] = {}
    for ordinal, keys in enumerate(other):
        for k in keys:
            row_ids.setdefault(k, []).append(ordinal)
            counts[k] = counts.get(k, 0) + 1
    out = []
    for keys in own:
        if not keys:
            out.append(0)
        elif len(keys) == 1:
            out.append(counts.get(keys[0], 0))
        else:
            hits: set[int] = set()
            for k in keys:
                hits.update(row_ids.get(k, ()))
            out.append(len(hits))
    return out


def _contribution(degrees) -> float:
    total = 0.0
    for deg in degrees:
        total += 1.0 / deg if deg > 0 else -1.0
    return total / len(degrees)


def score_pair(model: NetworkModel, src_class_id: str, trg_class_id: str, src_key: Key, trg_key: Key) -> ConnectionScore:
    """Score one key combination between two classes. Pure and read-only."""
    src = model.require(src_class_id)
    trg = model.require(trg_class_id)
    src_rows = model.network.evaluate(src.table_id)
    trg_rows = model.network.evaluate(trg.table_id)
    if not src_rows or not trg_rows:
        raise EmptyClass("connection scores are undefined for empty classes")
    model.network._check_key(src.table_id, src_key)
    model.network._check_key(trg.table_id, trg_key)
    src_keys = _row_keysets(src_rows, src_key)
    trg_keys = _row_keysets(trg_rows, trg_key)
    src_deg = _degrees(src_keys, trg_keys)
    trg_deg = _degrees(trg_keys, src_keys)
    src_contribution = _contribution(src_deg)
    trg_contribution = _contribution(trg_deg)
    return ConnectionScore(
        src_key=src_key,
        trg_key=trg_key,
        total=src_contribution + trg_contribution,
        src_contribution=src_contribution,
        trg_contribution=trg_contribution,
        src_histogram=dict(Counter(src_deg)),
        trg_histogram=dict(Counter(trg_deg)),
        is_index_pair=src_key is INDEX or trg_key is INDEX,
    )


def _ranked(scores: list[ConnectionScore]) -> list[ConnectionScore]:
    # descending total; attribute pairs outrank index pairs on ties
    def rank(score: ConnectionScore):
        index_count = (score.src_key is INDEX) + (score.trg_key is INDEX)
        return (-score.total, index_count, key_label(score.src_key), key_label(score.trg_key))

    return sorted(scores, key=rank)


def _candidate_keys(model: NetworkModel, class_id: str) -> list[Key]:
    spec = model.require(class_id)
    return list(model.network.attribute_names(spec.table_id)) + [INDEX]


def score_all_pairs(model: NetworkModel, src_class_id: str, trg_class_id: str) -> list[ConnectionScore]:
    """Score every attribute combination plus the index, ranked."""
    scores = [
        score_pair(model, src_class_id, trg_class_id, sk, tk)
        for sk in _candidate_keys(model, src_class_id)
        for tk in _candidate_keys(model, trg_class_id)
    ]
    return _ranked(scores)


# -- sampled estimation -------------------------------------------------------


def _factorize_column(rows, key: Key, codebook: dict) -> tuple[np.ndarray, bool]:
    """Column cells -> shared integer codes; -1 for null. Scalar columns only.

    Floats and text index under themselves; booleans get a tag so that
    true never unifies with 1.0. The codebook is shared across all
    columns of both classes, so codes are comparable across columns.
    """
    codes = np.empty(len(rows), dtype=np.int64)
    lookup = codebook.get
    for i, row in enumerate(rows):
        cell = float(i) if key is INDEX else row.get(key)
        if cell is None:
            codes[i] = -1
            continue
        t = type(cell)
        if t is float or t is str:
            k = cell
        elif t is bool:
            k = ("bool", cell)
        elif t is int:
            k = float(cell)
        else:
            return codes, False  # list/map cells use the row-level fallback
        code = lookup(k)
        if code is None:
            code = len(codebook)
            codebook[k] = code
        codes[i] = code
    return codes, True


def score_all_pairs_sampled(
    model: NetworkModel,
    src_class_id: str,
    trg_class_id: str,
    sample_size: int,
    seed: int,
) -> list[ConnectionScore]:
    """Approximate ranked scores from seeded row samples of both classes.

    Each sampled item's degree is exact (measured against the full
    opposite column); the per-class averages are estimated from the
    sample, so results are flagged approximate. With the sample covering
    a whole class, that side's figures equal the exact scorer's.
    """
    if sample_size < 1:
        raise ValueError("sample size must be at least 1")
    src = model.require(src_class_id)
    trg = model.require(trg_class_id)
    src_rows = model.network.evaluate(src.table_id)
    trg_rows = model.network.evaluate(trg.table_id)
    if not src_rows or not trg_rows:
        raise EmptyClass("connection scores are undefined for empty classes")

    rng = Xorshift64Star(seed)
    # ascending order keeps float summation identical to the exact scorer
    # in the degenerate whole-class sample
    src_sample = sorted(rng.sample_indices(len(src_rows), sample_size))
    trg_sample = sorted(rng.sample_indices(len(trg_rows), sample_size))

    codebook: dict = {}
    src_cols = {k: _factorize_column(src_rows, k, codebook) for k in _candidate_keys(model, src_class_id)}
    trg_cols = {k: _factorize_column(trg_rows, k, codebook) for k in _candidate_keys(model, trg_class_id)}
    size = len(codebook) or 1

    def counts_of(codes: np.ndarray) -> np.ndarray:
        valid = codes[codes >= 0]
        return np.bincount(valid, minlength=size)

    src_counts = {k: counts_of(codes) for k, (codes, scalar) in src_cols.items() if scalar}
    trg_counts = {k: counts_of(codes) for k, (codes, scalar) in trg_cols.items() if scalar}

    def sampled_degrees(cols, counts, key, opposite_rows, opposite_key, sample, rows):
        codes, scalar = cols[key]
        if scalar and opposite_key in counts:
            picked = codes[sample]
            deg = np.where(picked >= 0, counts[opposite_key][np.maximum(picked, 0)], 0)
            return deg.tolist()
        # list-valued or mixed columns: exact row-level matching on the sample
        own_keys = [_cell_keys(rows[i], key, i) for i in sample]
        other_keys = _row_keysets(opposite_rows, opposite_key)
        return _degrees(own_keys, other_keys)

    scores = []
    for sk in _candidate_keys(model, src_class_id):
        for tk in _candidate_keys(model, trg_class_id):
            src_deg = sampled_degrees(src_cols, trg_counts, sk, trg_rows, tk, src_sample, src_rows)
            trg_deg = sampled_degrees(trg_cols, src_counts, tk, src_rows, sk, trg_sample, trg_rows)
            src_contribution = _contribution(src_deg)
            trg_contribution = _contribution(trg_deg)
            scores.append(
                ConnectionScore(
                    src_key=sk,
                    trg_key=tk,
                    total=src_contribution + trg_contribution,
                    src_contribution=src_contribution,
                    trg_contribution=trg_contribution,
                    src_histogram=dict(Counter(int(d) for d in src_deg)),
                    trg_histogram=dict(Counter(int(d) for d in trg_deg)),
                    is_index_pair=sk is INDEX or tk is INDEX,
                    approximate=True,
                )
            )
    return _ranked(scores)
