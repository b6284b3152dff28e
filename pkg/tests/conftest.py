"""Shared generators and independent oracles for the test suite."""

from __future__ import annotations

import random

from multiway import dpo, lam
from multiway.hypergraph import Hypergraph, Morphism


# ---------------------------------------------------------------------------
# Random hypergraphs, rules and matches

def make_hypergraph(rng: random.Random, max_vertices: int = 4, max_edges: int = 4,
                    max_arity: int = 3) -> Hypergraph:
    n = rng.randint(0, max_vertices)
    vertices = list(range(n))
    edges = {}
    if n:
        for i in range(rng.randint(0, max_edges)):
            arity = rng.randint(1, max_arity)
            edges[f"e{i}"] = tuple(rng.choice(vertices) for _ in range(arity))
    return Hypergraph(vertices, edges)


def make_rule(rng: random.Random, max_vertices: int = 3, max_edges: int = 2,
              max_arity: int = 2) -> dpo.RewriteRule:
    """Random span built from inclusions: I is a subgraph of L, R extends I."""
    left = make_hypergraph(rng, max_vertices, max_edges, max_arity)
    kept_vs = {v for v in left.vertices if rng.random() < 0.6}
    kept_es = {e for e, t in left.edges.items()
               if set(t) <= kept_vs and rng.random() < 0.6}
    interface = Hypergraph(kept_vs, {e: left.edges[e] for e in kept_es})
    right_vs = set(kept_vs)
    right_es = {e: left.edges[e] for e in kept_es}
    for i in range(rng.randint(0, 2)):
        right_vs.add(f"n{i}")
    pool = sorted(right_vs, key=str)
    if pool:
        for i in range(rng.randint(0, 2)):
            arity = rng.randint(1, max_arity)
            right_es[f"f{i}"] = tuple(rng.choice(pool) for _ in range(arity))
    right = Hypergraph(right_vs, right_es)
    l = Morphism(interface, left, {v: v for v in kept_vs}, {e: e for e in kept_es})
    r = Morphism(interface, right, {v: v for v in kept_vs}, {e: e for e in kept_es})
    return dpo.RewriteRule(left, interface, right, l, r)


def make_triples(rng: random.Random, count: int, require_match: bool = True):
    """Random (rule, host, match) triples; the match may have dangling edges."""
    out = []
    while len(out) < count:
        rule = make_rule(rng)
        host = make_hypergraph(rng)
        matches = dpo.find_matches(rule, host)
        if not matches:
            if not require_match:
                out.append((rule, host, None))
            continue
        out.append((rule, host, rng.choice(matches)))
    return out


def make_morphism(rng: random.Random, source: Hypergraph,
                  target: Hypergraph) -> Morphism | None:
    """A random morphism source -> target, or ``None`` if the draw fails."""
    if source.vertices and not target.vertices:
        return None
    tverts = target.sorted_vertices()
    vmap = {v: rng.choice(tverts) for v in source.vertices}
    emap = {}
    by_tuple: dict = {}
    for e, t in target.edges.items():
        by_tuple.setdefault(t, []).append(e)
    for e, t in source.edges.items():
        wanted = tuple(vmap[v] for v in t)
        candidates = by_tuple.get(wanted)
        if not candidates:
            return None
        emap[e] = rng.choice(sorted(candidates))
    return Morphism(source, target, vmap, emap)


# ---------------------------------------------------------------------------
# Random good lambda terms

_FREE_NAMES = ("a", "b", "c")


def _grow(rng: random.Random, budget: int, avail: tuple[str, ...], depth: int):
    """A random affine term and the available names it consumed."""
    roll = rng.random()
    if depth <= 0 or budget <= 0 or (roll < 0.3 and avail):
        if avail and rng.random() < 0.8:
            name = rng.choice(avail)
            return lam.Var(name), {name}
        return lam.Var(rng.choice(_FREE_NAMES)), set()
    if roll < 0.55:
        binder = f"v{depth}_{rng.randint(0, 99)}"
        body, used = _grow(rng, budget, avail + (binder,), depth - 1)
        return lam.Abs(binder, body), used - {binder}
    fun, used = _grow(rng, budget // 2, avail, depth - 1)
    remaining = tuple(v for v in avail if v not in used)
    arg, used2 = _grow(rng, budget - budget // 2 - 1, remaining, depth - 1)
    return lam.App(fun, arg, None), used | used2


def _relabel(term: lam.Term, counter: list[int]) -> lam.Term:
    if isinstance(term, lam.Var):
        return term
    if isinstance(term, lam.Abs):
        return lam.Abs(term.binder, _relabel(term.body, counter))
    fun = _relabel(term.fun, counter)
    counter[0] += 1
    label = counter[0]
    return lam.App(fun, _relabel(term.arg, counter), label)


def _lossy_discard_reachable(term: lam.Term) -> bool:
    """Is a redex discarding a label-carrying argument reachable?"""
    seen = set()
    stack = [term]
    while stack:
        state = stack.pop()
        key = lam.alpha_key(state)
        if key in seen:
            continue
        seen.add(key)
        if _has_lossy_redex(state):
            return True
        stack.extend(e.target for e in lam.reduce_step(state))
    return False


def _has_lossy_redex(term: lam.Term) -> bool:
    if isinstance(term, lam.Var):
        return False
    if isinstance(term, lam.Abs):
        return _has_lossy_redex(term.body)
    if (isinstance(term.fun, lam.Abs)
            and lam.count_free(term.fun.body, term.fun.binder) == 0
            and lam.label_set(term.arg)):
        return True
    return _has_lossy_redex(term.fun) or _has_lossy_redex(term.arg)


def make_good_term(rng: random.Random, max_length: int = 6,
                   min_length: int = 1) -> lam.Term:
    """A random good term whose multiway satisfies the exchange theory.

    Rejection-samples affine terms until one has the requested number of
    applications and never reaches a redex that would discard an
    argument containing labels (such discards break the equal-length,
    equal-event-set structure of maximal paths).
    """
    while True:
        draft, _ = _grow(rng, max_length, (), 7)
        term = _relabel(draft, [0])
        size = lam.length(term)
        if not min_length <= size <= max_length:
            continue
        if not lam.is_good(term):
            continue
        if _lossy_discard_reachable(term):
            continue
        return term


# ---------------------------------------------------------------------------
# Independent oracles

def oracle_label_paths(msys: lam.MultiwaySystem) -> list[tuple[int, ...]]:
    """All maximal label sequences via networkx, independent of the engine."""
    import networkx as nx

    graph = nx.DiGraph()
    keyed = {lam.alpha_key(s): i for i, s in enumerate(msys.states)}
    graph.add_nodes_from(range(len(msys.states)))
    labels = {}
    for event in msys.transitions:
        a = keyed[lam.alpha_key(event.source)]
        b = keyed[lam.alpha_key(event.target)]
        graph.add_edge(a, b)
        labels[(a, b)] = event.label
    sinks = [n for n in graph.nodes if graph.out_degree(n) == 0]
    root = keyed[lam.alpha_key(msys.root)]
    out = []
    for sink in sinks:
        if sink == root and not graph.out_degree(root):
            out.append(())
            continue
        for path in nx.all_simple_paths(graph, root, sink):
            out.append(tuple(labels[(u, v)] for u, v in zip(path, path[1:])))
    return out


def oracle_causal_relation(msys: lam.MultiwaySystem) -> set[tuple[int, int]]:
    """Per-pair all-paths causality recomputed naively from the oracle paths."""
    paths = oracle_label_paths(msys)
    labels = sorted({l for p in paths for l in p})
    relation = set()
    for n in labels:
        for m in labels:
            if n == m:
                continue
            shared = [p for p in paths if n in p and m in p]
            if shared and all(p.index(n) < p.index(m) for p in shared):
                relation.add((n, m))
    return relation
