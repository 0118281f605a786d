"""Class-balanced depth-first network sampling.

The sample view needs a connected, class-balanced subgraph. We keep one
depth-first frontier per class and repeatedly serve the under-quota class
with the fewest sampled items (ties broken by class order): pop its
frontier, admit the item, and push its unvisited neighborhood onto the
owning classes' frontiers. An exhausted frontier restarts from a
seeded-random unvisited row, which lets disconnected components into the
sample while keeping each admitted chain connected.

Edges are admitted only once both resolved endpoints are in the sample;
until then they are parked and retried after the next node admission.
All randomness comes from the pinned xorshift64* generator, so a fixed
seed reproduces the sample byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from graphloom.errors import GraphLoomError, UnknownClass
from graphloom.model import Interpretation, ItemRef, NetworkModel
from graphloom.rng import Xorshift64Star


@dataclass(frozen=True)
class SampleSpec:
    target_per_class: int = 5
    seeds: tuple[ItemRef, ...] = ()
    random_seed: int = 0

    def __post_init__(self):
        if self.target_per_class < 1:
            raise GraphLoomError("target per class must be at least 1")


@dataclass
class NetworkSample:
    nodes: list[ItemRef] = field(default_factory=list)
    edges: list[tuple[ItemRef, ItemRef, ItemRef]] = field(default_factory=list)
    per_class_counts: dict[str, int] = field(default_factory=dict)

    def node_set(self) -> set[ItemRef]:
        return set(self.nodes)

    def copy(self) -> "NetworkSample":
        return NetworkSample(list(self.nodes), list(self.edges), dict(self.per_class_counts))


class _Builder:
    def __init__(self, model: NetworkModel, rng: Xorshift64Star):
        self.model = model
        self.rng = rng
        self.quota: int | None = None
        self.nodes: list[ItemRef] = []
        self.node_set: set[ItemRef] = set()
        self.edges: list[tuple[ItemRef, ItemRef, ItemRef]] = []
        self.edge_triples: set[tuple] = set()
        self.edge_items: set[ItemRef] = set()
        self.counts: dict[str, int] = {c.id: 0 for c in model.classes.values() if c.interpretation is not Interpretation.GENERIC}
        self.frontiers: dict[str, list[ItemRef]] = {cid: [] for cid in self.counts}
        self.deferred: dict[str, set[int]] = {cid: set() for cid in self.counts}
        self.exhausted_now: set[str] = set()

    def interpretation(self, class_id: str) -> Interpretation:
        return self.model.classes[class_id].interpretation

    def admit_node(self, ref: ItemRef) -> None:
        if ref in self.node_set:
            return
        self.node_set.add(ref)
        self.nodes.append(ref)
        self.counts[ref.class_id] += 1
        # a new node gives parked edges fresh chances everywhere
        for parked in self.deferred.values():
            parked.clear()
        self.exhausted_now = {cid for cid in self.exhausted_now if self.interpretation(cid) is Interpretation.NODE}
        for edge_ref, other, _role in self.model.neighbors(ref):
            if edge_ref not in self.edge_items and edge_ref.class_id in self.frontiers:
                self.frontiers[edge_ref.class_id].append(edge_ref)
            if other not in self.node_set and other.class_id in self.frontiers:
                self.frontiers[other.class_id].append(other)

    def admissible_pairs(self, ref: ItemRef) -> list[tuple[ItemRef, ItemRef]]:
        sources, targets = self.model.resolve_endpoints(ref)
        return [(s, t) for s in sources for t in targets if s in self.node_set and t in self.node_set]

    def admit_edge(self, ref: ItemRef, pairs) -> None:
        if ref in self.edge_items:
            return
        self.edge_items.add(ref)
        self.counts[ref.class_id] += 1
        for s, t in pairs:
            triple = (ref, s, t)
            if triple not in self.edge_triples:
                self.edge_triples.add(triple)
                self.edges.append(triple)

    def try_edge(self, ref: ItemRef) -> bool:
        """Admit an edge, following it depth-first to its endpoints.

        Traversing an edge admits the nodes it leads to while their class
        is under quota; if no endpoint pair can be completed the edge is
        parked until the next node admission frees it up.
        """
        pairs = self.admissible_pairs(ref)
        if not pairs:
            sources, targets = self.model.resolve_endpoints(ref)
            for s in sources:
                for t in targets:
                    missing = [x for x in dict.fromkeys((s, t)) if x not in self.node_set]
                    demand: dict[str, int] = {}
                    for x in missing:
                        demand[x.class_id] = demand.get(x.class_id, 0) + 1
                    if all(
                        self.quota is None or self.counts.get(cid, 0) + n <= self.quota
                        for cid, n in demand.items()
                    ):
                        for x in missing:
                            self.admit_node(x)
                        pairs = self.admissible_pairs(ref)
                        break
                if pairs:
                    break
        if pairs:
            self.admit_edge(ref, pairs)
            return True
        self.deferred[ref.class_id].add(ref.ordinal)
        sources, targets = self.model.resolve_endpoints(ref)
        for endpoint in sources + targets:
            if endpoint not in self.node_set and endpoint.class_id in self.frontiers:
                self.frontiers[endpoint.class_id].append(endpoint)
        return False

    def visited(self, ref: ItemRef) -> bool:
        if self.interpretation(ref.class_id) is Interpretation.NODE:
            return ref in self.node_set
        return ref in self.edge_items

    def restart_candidate(self, class_id: str) -> ItemRef | None:
        count = self.model.count_instances(class_id)
        parked = self.deferred[class_id]
        options = [
            i
            for i in range(count)
            if i not in parked and not self.visited(ItemRef(class_id, i))
        ]
        if not options:
            return None
        return ItemRef(class_id, options[self.rng.below(len(options))])

    def run(self, quota: int) -> None:
        self.quota = quota
        while True:
            candidates = [
                cid
                for cid, count in self.counts.items()
                if count < quota and cid not in self.exhausted_now
            ]
            if not candidates:
                break
            order = {cid: i for i, cid in enumerate(self.counts)}
            picked = min(candidates, key=lambda cid: (self.counts[cid], order[cid]))
            ref = None
            frontier = self.frontiers[picked]
            while frontier:
                top = frontier.pop()
                if not self.visited(top) and not (
                    self.interpretation(picked) is Interpretation.EDGE and top.ordinal in self.deferred[picked]
                ):
                    ref = top
                    break
            if ref is None:
                ref = self.restart_candidate(picked)
            if ref is None:
                self.exhausted_now.add(picked)
                continue
            if self.interpretation(ref.class_id) is Interpretation.NODE:
                self.admit_node(ref)
            else:
                self.try_edge(ref)

    def result(self) -> NetworkSample:
        return NetworkSample(list(self.nodes), list(self.edges), dict(self.counts))


def sample(model: NetworkModel, spec: SampleSpec) -> NetworkSample:
    """Draw a class-balanced connected sample; deterministic per seed."""
    builder = _Builder(model, Xorshift64Star(spec.random_seed))
    for ref in spec.seeds:
        _admit_seed(builder, ref)
    builder.run(spec.target_per_class)
    return builder.result()


def _admit_seed(builder: _Builder, ref: ItemRef) -> None:
    spec = builder.model.require(ref.class_id)
    if ref.ordinal < 0 or ref.ordinal >= builder.model.count_instances(ref.class_id):
        raise GraphLoomError(f"item {ref} is out of range")
    if spec.interpretation is Interpretation.NODE:
        builder.admit_node(ref)
    elif spec.interpretation is Interpretation.EDGE:
        sources, targets = builder.model.resolve_endpoints(ref)
        for endpoint in sources + targets:
            builder.admit_node(endpoint)
        builder.admit_edge(ref, builder.admissible_pairs(ref))
    else:
        raise UnknownClass(f"class {spec.label!r} is not interpreted as nodes or edges")


def expand_neighbors(model: NetworkModel, current: NetworkSample, node_item: ItemRef) -> NetworkSample:
    """Add every neighbor edge and opposite node of one sampled node."""
    if node_item not in current.node_set():
        raise GraphLoomError(f"item {node_item} is not in the sample")
    out = current.copy()
    present = out.node_set()
    triples = set(out.edges)
    neighborhood = model.neighbors(node_item)
    for _edge, other, _role in neighborhood:
        if other not in present:
            present.add(other)
            out.nodes.append(other)
            out.per_class_counts[other.class_id] = out.per_class_counts.get(other.class_id, 0) + 1
    counted_edges = {e for e, _s, _t in out.edges}
    for edge_ref in dict.fromkeys(e for e, _o, _r in neighborhood):
        sources, targets = model.resolve_endpoints(edge_ref)
        added = False
        for s in sources:
            for t in targets:
                if s in present and t in present:
                    triple = (edge_ref, s, t)
                    if triple not in triples:
                        triples.add(triple)
                        out.edges.append(triple)
                        added = True
        if added and edge_ref not in counted_edges:
            counted_edges.add(edge_ref)
            out.per_class_counts[edge_ref.class_id] = out.per_class_counts.get(edge_ref.class_id, 0) + 1
    return out


def seed_from_table(model: NetworkModel, current: NetworkSample, items: list[ItemRef]) -> NetworkSample:
    """Force specific items into the sample, with induced edges."""
    out = current.copy()
    present = out.node_set()
    triples = set(out.edges)
    counted_edges = {e for e, _s, _t in out.edges}

    def add_node(ref: ItemRef) -> None:
        if ref not in present:
            present.add(ref)
            out.nodes.append(ref)
            out.per_class_counts[ref.class_id] = out.per_class_counts.get(ref.class_id, 0) + 1

    forced_edges: list[ItemRef] = []
    for ref in items:
        spec = model.require(ref.class_id)
        if ref.ordinal < 0 or ref.ordinal >= model.count_instances(ref.class_id):
            raise GraphLoomError(f"item {ref} is out of range")
        if spec.interpretation is Interpretation.NODE:
            add_node(ref)
        elif spec.interpretation is Interpretation.EDGE:
            sources, targets = model.resolve_endpoints(ref)
            for endpoint in sources + targets:
                add_node(endpoint)
            forced_edges.append(ref)
        else:
            raise UnknownClass(f"class {spec.label!r} is not interpreted as nodes or edges")

    # induced edges: every edge whose endpoints are now both present
    for edge_class in model.edge_classes():
        for ordinal, (sources, targets) in enumerate(model.endpoints_table(edge_class.id)):
            edge_ref = ItemRef(edge_class.id, ordinal)
            added = False
            for s in sources:
                for t in targets:
                    if s in present and t in present:
                        triple = (edge_ref, s, t)
                        if triple not in triples:
                            triples.add(triple)
                            out.edges.append(triple)
                            added = True
            if added and edge_ref not in counted_edges:
                counted_edges.add(edge_ref)
                out.per_class_counts[edge_ref.class_id] = out.per_class_counts.get(edge_ref.class_id, 0) + 1
    return out
