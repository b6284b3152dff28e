"""Directed multihypergraphs and their structure-preserving maps.

A hypergraph is a finite set of vertices plus a finite map from edge
identifiers to nonempty tuples of vertices (so parallel edges with equal
tuples are allowed).  Identifiers are opaque but totally ordered via
:func:`id_sort_key`, which is what makes quotient representatives,
isomorphism search and canonical forms deterministic.

Everything here is immutable after construction and every function is
pure, so values can be shared freely between concurrent callers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Optional, Sequence


class HypergraphError(Exception):
    """Base class for errors raised by this module."""


class PartialMap(HypergraphError):
    """A vertex or edge map omits an element of its source graph."""


class NotAMorphism(HypergraphError):
    """An operation required a (mono)morphism but commutation fails."""


class MismatchedTarget(HypergraphError):
    """Pullback legs must share their target graph."""


class MismatchedSource(HypergraphError):
    """Pushout legs must share their source graph."""


class NotMono(HypergraphError):
    """Pushouts are only computed along a monomorphism."""


class UnknownVertex(HypergraphError):
    """A vertex set argument mentions vertices outside the graph."""


class UnknownEdge(HypergraphError):
    """An edge set argument mentions edges outside the graph."""


class InvalidJson(HypergraphError):
    """A JSON document does not match the expected schema."""


def id_sort_key(value):
    """Total order key over the mixed identifier types we produce.

    Integers sort before strings, strings before tuples; tuples compare
    componentwise by the same rule.  Constructions (pullbacks, pushouts)
    emit tuple identifiers, so the key recurses.
    """
    if isinstance(value, bool):
        return (0, int(value))
    if isinstance(value, int):
        return (0, value)
    if isinstance(value, str):
        return (1, value)
    if isinstance(value, tuple):
        return (2, tuple(id_sort_key(v) for v in value))
    return (3, type(value).__name__, repr(value))


class Hypergraph:
    """A finite directed multihypergraph.

    ``vertices`` is a frozenset of identifiers; ``edges`` maps edge
    identifiers to nonempty tuples of vertex identifiers.  The empty
    graph is a valid value.  The constructor normalises but does not
    validate; use :func:`validate` to check the invariants.
    """

    __slots__ = ("_vertices", "_edges", "_view", "_hash")

    def __init__(self, vertices: Iterable = (), edges: Mapping | Iterable = ()):
        self._vertices = frozenset(vertices)
        items = edges.items() if isinstance(edges, Mapping) else edges
        self._edges = {eid: tuple(tup) for eid, tup in items}
        self._view = MappingProxyType(self._edges)
        self._hash = None

    @property
    def vertices(self) -> frozenset:
        return self._vertices

    @property
    def edges(self) -> Mapping:
        """Read-only view of the edge map."""
        return self._view

    def sorted_vertices(self) -> list:
        return sorted(self._vertices, key=id_sort_key)

    def sorted_edges(self) -> list:
        return sorted(self._edges, key=id_sort_key)

    def is_empty(self) -> bool:
        return not self._vertices and not self._edges

    def __eq__(self, other):
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return self._vertices == other._vertices and self._edges == other._edges

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._vertices, frozenset(self._edges.items())))
        return self._hash

    def __repr__(self):
        vs = ", ".join(repr(v) for v in self.sorted_vertices())
        es = ", ".join(f"{e!r}: {self._edges[e]!r}" for e in self.sorted_edges())
        return f"Hypergraph([{vs}], {{{es}}})"


def validate(graph: Hypergraph) -> list[str]:
    """Return a list of invariant violations (empty iff the graph is valid)."""
    violations = []
    for eid in graph.sorted_edges():
        tup = graph.edges[eid]
        if len(tup) == 0:
            violations.append(f"edge {eid!r} has an empty tuple")
        for v in tup:
            if v not in graph.vertices:
                violations.append(f"edge {eid!r} mentions unknown vertex {v!r}")
    return violations


class Morphism:
    """A pair of maps (vertices, edges) between two hypergraphs.

    The maps are plain dicts; :func:`is_morphism` checks totality and the
    componentwise commutation requirement.  Treat instances as frozen.
    """

    __slots__ = ("source", "target", "vmap", "emap")

    def __init__(self, source: Hypergraph, target: Hypergraph, vmap: Mapping, emap: Mapping):
        self.source = source
        self.target = target
        self.vmap = dict(vmap)
        self.emap = dict(emap)

    def __eq__(self, other):
        if not isinstance(other, Morphism):
            return NotImplemented
        return (self.source == other.source and self.target == other.target
                and self.vmap == other.vmap and self.emap == other.emap)

    def __repr__(self):
        return f"Morphism(vmap={self.vmap!r}, emap={self.emap!r})"


@dataclass(frozen=True, eq=False)
class Span:
    """Two morphisms out of a shared apex."""

    apex: Hypergraph
    left: Morphism
    right: Morphism

    def __post_init__(self):
        if self.left.source is not self.apex and self.left.source != self.apex:
            raise MismatchedSource("span legs must start at the apex")
        if self.right.source is not self.apex and self.right.source != self.apex:
            raise MismatchedSource("span legs must start at the apex")

    def __iter__(self):
        return iter((self.apex, self.left, self.right))


@dataclass(frozen=True, eq=False)
class Cospan:
    """Two morphisms into a shared target."""

    target: Hypergraph
    left: Morphism
    right: Morphism

    def __post_init__(self):
        if self.left.target is not self.target and self.left.target != self.target:
            raise MismatchedTarget("cospan legs must end at the target")
        if self.right.target is not self.target and self.right.target != self.target:
            raise MismatchedTarget("cospan legs must end at the target")

    def __iter__(self):
        return iter((self.target, self.left, self.right))


def identity(graph: Hypergraph) -> Morphism:
    """The identity morphism on ``graph``."""
    return Morphism(graph, graph,
                    {v: v for v in graph.vertices},
                    {e: e for e in graph.edges})


def compose(second: Morphism, first: Morphism) -> Morphism:
    """``second after first``; the targets/sources must line up."""
    if first.target != second.source:
        raise MismatchedTarget("compose: middle graphs differ")
    return Morphism(first.source, second.target,
                    {v: second.vmap[w] for v, w in first.vmap.items()},
                    {e: second.emap[f] for e, f in first.emap.items()})


def is_morphism(m: Morphism) -> bool:
    """True iff the maps are total, land in the target, and commute.

    Raises :class:`PartialMap` when ``vmap`` or ``emap`` omits a source
    element; other defects return ``False``.
    """
    for v in m.source.vertices:
        if v not in m.vmap:
            raise PartialMap(f"vmap omits vertex {v!r}")
    for e in m.source.edges:
        if e not in m.emap:
            raise PartialMap(f"emap omits edge {e!r}")
    for v in m.source.vertices:
        if m.vmap[v] not in m.target.vertices:
            return False
    for e, tup in m.source.edges.items():
        image = m.emap[e]
        if image not in m.target.edges:
            return False
        if m.target.edges[image] != tuple(m.vmap[v] for v in tup):
            return False
    return True


def _require_morphism(m: Morphism, role: str) -> None:
    if not is_morphism(m):
        raise NotAMorphism(f"{role} is not a morphism")


def is_monomorphism(m: Morphism) -> bool:
    """True iff the morphism's vertex and edge maps are both injective."""
    if not is_morphism(m):
        raise NotAMorphism("not a morphism")
    return (len(set(m.vmap.values())) == len(m.vmap)
            and len(set(m.emap.values())) == len(m.emap))


def pullback(f: Morphism, g: Morphism) -> Span:
    """Pullback of ``f: A -> C`` against ``g: B -> C``.

    The apex has pair vertices ``(a, b)`` with equal images and pair
    edges with equal images; the edge tuples zip componentwise.  The legs
    are the projections.
    """
    _require_morphism(f, "f")
    _require_morphism(g, "g")
    if f.target != g.target:
        raise MismatchedTarget("pullback legs must share their target")
    a, b = f.source, g.source
    verts = [(x, y) for x in a.sorted_vertices() for y in b.sorted_vertices()
             if f.vmap[x] == g.vmap[y]]
    edges = {}
    for e1 in a.sorted_edges():
        for e2 in b.sorted_edges():
            if f.emap[e1] == g.emap[e2]:
                edges[(e1, e2)] = tuple(zip(a.edges[e1], b.edges[e2]))
    apex = Hypergraph(verts, edges)
    p = Morphism(apex, a, {v: v[0] for v in verts}, {e: e[0] for e in edges})
    q = Morphism(apex, b, {v: v[1] for v in verts}, {e: e[1] for e in edges})
    return Span(apex, p, q)


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[rx] = ry

    def classes(self) -> dict:
        out: dict = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return out


def _quotient(a_items, b_items, glue_pairs):
    """Quotient of a tagged disjoint union by the relation ``glue_pairs``.

    Members are tagged ``(0, x)`` for the left graph and ``(1, y)`` for
    the right one.  Each class is represented by its minimal member under
    the identifier order, left component winning ties.
    """
    uf = _UnionFind()
    for x in a_items:
        uf.add((0, x))
    for y in b_items:
        uf.add((1, y))
    for x, y in glue_pairs:
        uf.union((0, x), (1, y))
    rep = {}
    for members in uf.classes().values():
        chosen = min(members, key=lambda t: (id_sort_key(t[1]), t[0]))
        for member in members:
            rep[member] = chosen
    return rep


def pushout(f: Morphism, g: Morphism) -> Cospan:
    """Pushout of ``f: C -> A`` (a monomorphism) against ``g: C -> B``.

    The result is the disjoint union of A and B, quotiented by gluing
    ``f(x)`` to ``g(x)``; identifiers in the result are the tagged class
    representatives, so the output is a concrete canonical choice of the
    colimit.
    """
    _require_morphism(f, "f")
    _require_morphism(g, "g")
    if f.source != g.source:
        raise MismatchedSource("pushout legs must share their source")
    if not is_monomorphism(f):
        raise NotMono("pushout requires the first leg to be injective")
    a, b, c = f.target, g.target, f.source
    vrep = _quotient(a.vertices, b.vertices,
                     [(f.vmap[x], g.vmap[x]) for x in c.vertices])
    erep = _quotient(a.edges, b.edges,
                     [(f.emap[x], g.emap[x]) for x in c.edges])
    edges = {}
    for e in a.edges:
        edges[erep[(0, e)]] = tuple(vrep[(0, v)] for v in a.edges[e])
    for e in b.edges:
        edges[erep[(1, e)]] = tuple(vrep[(1, v)] for v in b.edges[e])
    result = Hypergraph(set(vrep.values()), edges)
    p = Morphism(a, result, {v: vrep[(0, v)] for v in a.vertices},
                 {e: erep[(0, e)] for e in a.edges})
    q = Morphism(b, result, {v: vrep[(1, v)] for v in b.vertices},
                 {e: erep[(1, e)] for e in b.edges})
    return Cospan(result, p, q)


def delete_vertices(graph: Hypergraph, doomed: Iterable) -> Hypergraph:
    """Remove the given vertices and every edge whose tuple touches them."""
    doomed = set(doomed)
    stray = doomed - graph.vertices
    if stray:
        names = ", ".join(repr(v) for v in sorted(stray, key=id_sort_key))
        raise UnknownVertex(f"not in the graph: {names}")
    kept = {e: t for e, t in graph.edges.items() if not doomed.intersection(t)}
    return Hypergraph(graph.vertices - doomed, kept)


def delete_edges(graph: Hypergraph, doomed: Iterable) -> Hypergraph:
    """Remove the given edges; the vertex set is unchanged."""
    doomed = set(doomed)
    stray = doomed - set(graph.edges)
    if stray:
        names = ", ".join(repr(e) for e in sorted(stray, key=id_sort_key))
        raise UnknownEdge(f"not in the graph: {names}")
    kept = {e: t for e, t in graph.edges.items() if e not in doomed}
    return Hypergraph(graph.vertices, kept)


def _vertex_profiles(graph: Hypergraph) -> dict:
    """Invariant per vertex: sorted multiset of (arity, position) incidences."""
    prof = {v: [] for v in graph.vertices}
    for tup in graph.edges.values():
        for pos, v in enumerate(tup):
            prof[v].append((len(tup), pos))
    return {v: tuple(sorted(inc)) for v, inc in prof.items()}


def isomorphisms(a: Hypergraph, b: Hypergraph) -> Iterator[Morphism]:
    """Yield all isomorphisms from ``a`` to ``b`` in lexicographic order.

    Lexicographic means: source vertices are processed in identifier
    order and candidate images tried in identifier order, then edge
    images likewise.  Intended for desk-scale graphs.
    """
    if len(a.vertices) != len(b.vertices) or len(a.edges) != len(b.edges):
        return
    if sorted(len(t) for t in a.edges.values()) != sorted(len(t) for t in b.edges.values()):
        return
    prof_a = _vertex_profiles(a)
    prof_b = _vertex_profiles(b)
    if sorted(prof_a.values()) != sorted(prof_b.values()):
        return
    averts = a.sorted_vertices()
    bverts = b.sorted_vertices()

    def extend_vertices(i, vmap, used):
        if i == len(averts):
            yield from _edge_bijections(a, b, dict(vmap))
            return
        v = averts[i]
        for w in bverts:
            if w in used or prof_a[v] != prof_b[w]:
                continue
            vmap[v] = w
            used.add(w)
            yield from extend_vertices(i + 1, vmap, used)
            used.discard(w)
            del vmap[v]

    yield from extend_vertices(0, {}, set())


def _edge_bijections(a: Hypergraph, b: Hypergraph, vmap: dict) -> Iterator[Morphism]:
    """All edge bijections compatible with a fixed vertex bijection."""
    groups_a: dict = {}
    for e in a.sorted_edges():
        mapped = tuple(vmap[v] for v in a.edges[e])
        groups_a.setdefault(mapped, []).append(e)
    groups_b: dict = {}
    for e in b.sorted_edges():
        groups_b.setdefault(b.edges[e], []).append(e)
    if set(groups_a) != set(groups_b):
        return
    keys = sorted(groups_a, key=id_sort_key)
    if any(len(groups_a[k]) != len(groups_b[k]) for k in keys):
        return
    per_group = [itertools.permutations(groups_b[k]) for k in keys]
    for choice in itertools.product(*per_group):
        emap = {}
        for k, perm in zip(keys, choice):
            emap.update(zip(groups_a[k], perm))
        yield Morphism(a, b, dict(vmap), emap)


def find_isomorphism(a: Hypergraph, b: Hypergraph) -> Optional[Morphism]:
    """First isomorphism in lexicographic order, or ``None``."""
    return next(isomorphisms(a, b), None)


def canonical_form(graph: Hypergraph) -> Hypergraph:
    """A canonical representative of the isomorphism class of ``graph``.

    Vertices are renumbered ``0..n-1`` and edges ``0..m-1`` so that
    isomorphic inputs produce identical (``==``) outputs.  The search
    tries identifier assignments compatible with the vertex-profile
    partition and keeps the least edge-list signature.
    """
    n = len(graph.vertices)
    if not graph.edges:
        return Hypergraph(range(n), {})
    profiles = _vertex_profiles(graph)
    classes: dict = {}
    for v in graph.sorted_vertices():
        classes.setdefault(profiles[v], []).append(v)
    keyed = sorted(classes.items())
    slots = []
    start = 0
    for profile, members in keyed:
        indices = list(range(start, start + len(members)))
        start += len(members)
        if not profile:  # isolated vertices never appear in tuples; fix one order
            slots.append([list(zip(members, indices))])
        else:
            slots.append([list(zip(members, perm))
                          for perm in itertools.permutations(indices)])
    best = None
    tuples = list(graph.edges.values())
    for assignment in itertools.product(*slots):
        mapping = {v: i for pairs in assignment for v, i in pairs}
        sig = tuple(sorted(tuple(mapping[v] for v in t) for t in tuples))
        if best is None or sig < best:
            best = sig
    return Hypergraph(range(n), dict(enumerate(best)))


# ---------------------------------------------------------------------------
# JSON wire format


def render_id(value) -> str:
    """Deterministic string rendering of an identifier."""
    if isinstance(value, tuple):
        return "(" + ",".join(render_id(v) for v in value) + ")"
    return str(value)


def hypergraph_to_json(graph: Hypergraph) -> dict:
    """``{"vertices": [...], "edges": {id: [ids...]}}`` with stringified ids."""
    return {
        "vertices": [render_id(v) for v in graph.sorted_vertices()],
        "edges": {render_id(e): [render_id(v) for v in graph.edges[e]]
                  for e in graph.sorted_edges()},
    }


def _expect_keys(obj, keys: set, what: str) -> None:
    if not isinstance(obj, dict):
        raise InvalidJson(f"{what}: expected an object")
    unknown = set(obj) - keys
    if unknown:
        raise InvalidJson(f"{what}: unknown keys {sorted(unknown)}")
    missing = keys - set(obj)
    if missing:
        raise InvalidJson(f"{what}: missing keys {sorted(missing)}")


def _check_id(value, what: str):
    if not isinstance(value, (str, int)) or isinstance(value, bool):
        raise InvalidJson(f"{what}: identifiers must be strings or integers")
    return value


def hypergraph_from_json(obj) -> Hypergraph:
    """Parse the hypergraph wire format; unknown keys are rejected."""
    _expect_keys(obj, {"vertices", "edges"}, "hypergraph")
    if not isinstance(obj["vertices"], list):
        raise InvalidJson("hypergraph: vertices must be a list")
    if not isinstance(obj["edges"], dict):
        raise InvalidJson("hypergraph: edges must be an object")
    vertices = [_check_id(v, "hypergraph") for v in obj["vertices"]]
    edges = {}
    for eid, tup in obj["edges"].items():
        if not isinstance(tup, list) or not tup:
            raise InvalidJson(f"hypergraph: edge {eid!r} must be a nonempty list")
        edges[eid] = tuple(_check_id(v, "hypergraph") for v in tup)
    return Hypergraph(vertices, edges)


def morphism_to_json(m: Morphism) -> dict:
    return {
        "vmap": {render_id(k): render_id(v)
                 for k, v in sorted(m.vmap.items(), key=lambda kv: id_sort_key(kv[0]))},
        "emap": {render_id(k): render_id(v)
                 for k, v in sorted(m.emap.items(), key=lambda kv: id_sort_key(kv[0]))},
    }


def morphism_from_json(obj, source: Hypergraph, target: Hypergraph) -> Morphism:
    """Parse the morphism wire format against explicit endpoint graphs."""
    _expect_keys(obj, {"vmap", "emap"}, "morphism")
    if not isinstance(obj["vmap"], dict) or not isinstance(obj["emap"], dict):
        raise InvalidJson("morphism: vmap and emap must be objects")
    return Morphism(source, target, dict(obj["vmap"]), dict(obj["emap"]))
