"""Double-pushout rewriting: rules, matches, events and their interplay.

A rule is a span ``L <-l- I -r-> R`` of monomorphisms; a match embeds L
into a host graph.  Applying a match cuts out the non-interface part of
the image (the pushout complement) and glues R back in along I.  On top
of rule application the module provides the concurrency predicates
(events happening together, parallel independence) and causality between
successive events.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass

from .hypergraph import (
    Cospan,
    Hypergraph,
    InvalidJson,
    Morphism,
    NotAMorphism,
    NotMono,
    _expect_keys,
    canonical_form,
    compose,
    find_isomorphism,
    hypergraph_from_json,
    hypergraph_to_json,
    id_sort_key,
    is_monomorphism,
    is_morphism,
    morphism_from_json,
    morphism_to_json,
    pullback,
    pushout,
)


class DpoError(Exception):
    """Base class for rewriting errors."""


class DanglingEdges(DpoError):
    """A host edge outside the match touches a vertex the rule deletes."""


class DifferentHost(DpoError):
    """A pairwise event predicate needs both matches on the same host."""


class NotCompatible(DpoError):
    """Combined events require matches that can happen together."""


class NotSuccessive(DpoError):
    """The second event's host is not the first event's production."""


@dataclass(frozen=True, eq=False)
class RewriteRule:
    """A span ``L <- I -> R`` with both legs injective."""

    left: Hypergraph
    interface: Hypergraph
    right: Hypergraph
    l: Morphism
    r: Morphism

    def __post_init__(self):
        if self.l.source != self.interface or self.l.target != self.left:
            raise NotAMorphism("rule leg l must map the interface into L")
        if self.r.source != self.interface or self.r.target != self.right:
            raise NotAMorphism("rule leg r must map the interface into R")
        if not is_monomorphism(self.l):
            raise NotMono("rule leg l must be a monomorphism")
        if not is_monomorphism(self.r):
            raise NotMono("rule leg r must be a monomorphism")


@dataclass(frozen=True, eq=False)
class Match:
    """A monomorphism from a rule's left-hand side into a host graph."""

    rule: RewriteRule
    host: Hypergraph
    m: Morphism

    def __post_init__(self):
        if self.m.source != self.rule.left or self.m.target != self.host:
            raise NotAMorphism("match must map the rule's L into the host")
        if not is_monomorphism(self.m):
            raise NotMono("matches must be monomorphisms")


@dataclass(frozen=True, eq=False)
class DpoEvent:
    """The result of one rule application: both pushout squares filled in."""

    match: Match
    complement: Hypergraph
    production: Hypergraph
    co_match: Morphism          # R -> production
    interface_embed: Morphism   # I -> complement
    complement_embed: Morphism  # complement -> production


@dataclass(frozen=True, eq=False)
class DpoTransition:
    """One edge of the rewrite relation between isomorphism-class keys."""

    source_class: Hypergraph
    target_class: Hypergraph
    event: DpoEvent


def _incidence_counts(graph: Hypergraph) -> dict:
    counts = {v: Counter() for v in graph.vertices}
    for tup in graph.edges.values():
        for pos, v in enumerate(tup):
            counts[v][(len(tup), pos)] += 1
    return counts


def find_matches(rule: RewriteRule, host: Hypergraph) -> list[Match]:
    """All monomorphisms from the rule's L into the host, in lexicographic order.

    Vertices of L are processed in identifier order and candidate host
    vertices tried in identifier order; edge images are decided the same
    way afterwards, so the result order is reproducible.
    """
    left = rule.left
    lverts = left.sorted_vertices()
    hverts = host.sorted_vertices()
    ledges = left.sorted_edges()
    need = _incidence_counts(left)
    have = _incidence_counts(host)
    matches: list[Match] = []

    def assign_edges(i, vmap, emap, used):
        if i == len(ledges):
            matches.append(Match(rule, host, Morphism(left, host, dict(vmap), dict(emap))))
            return
        e = ledges[i]
        wanted = tuple(vmap[v] for v in left.edges[e])
        for he in host.sorted_edges():
            if he in used or host.edges[he] != wanted:
                continue
            emap[e] = he
            used.add(he)
            assign_edges(i + 1, vmap, emap, used)
            used.discard(he)
            del emap[e]

    def assign_vertices(i, vmap, used):
        if i == len(lverts):
            assign_edges(0, vmap, {}, set())
            return
        v = lverts[i]
        for w in hverts:
            if w in used or (need[v] - have[w]):
                continue
            vmap[v] = w
            used.add(w)
            assign_vertices(i + 1, vmap, used)
            used.discard(w)
            del vmap[v]

    assign_vertices(0, {}, set())
    return matches


def _deleted_images(match: Match) -> tuple[set, set]:
    """Host vertices/edges the match earmarks for deletion."""
    rule = match.rule
    kept_verts = set(rule.l.vmap.values())
    kept_edges = set(rule.l.emap.values())
    del_verts = {match.m.vmap[v] for v in rule.left.vertices - kept_verts}
    del_edges = {match.m.emap[e] for e in set(rule.left.edges) - kept_edges}
    return del_verts, del_edges


def no_dangling_edges(match: Match) -> bool:
    """True iff every host edge touching a deleted vertex is itself matched."""
    del_verts, _ = _deleted_images(match)
    if not del_verts:
        return True
    matched = set(match.m.emap.values())
    for e, tup in match.host.edges.items():
        if e not in matched and del_verts.intersection(tup):
            return False
    return True


def _first_dangling(match: Match):
    """A (vertex, edge) witness for a dangling-edge failure, or ``None``."""
    del_verts, _ = _deleted_images(match)
    matched = set(match.m.emap.values())
    for e in match.host.sorted_edges():
        if e in matched:
            continue
        hit = sorted(del_verts.intersection(match.host.edges[e]), key=id_sort_key)
        if hit:
            return hit[0], e
    return None


def _cut_graph(match: Match) -> tuple[Hypergraph, Morphism]:
    """Delete the matched non-interface part; also return the I embedding."""
    rule = match.rule
    del_verts, del_edges = _deleted_images(match)
    kept = {e: t for e, t in match.host.edges.items()
            if e not in del_edges and not del_verts.intersection(t)}
    cut = Hypergraph(match.host.vertices - del_verts, kept)
    embed = Morphism(rule.interface, cut,
                     {i: match.m.vmap[rule.l.vmap[i]] for i in rule.interface.vertices},
                     {i: match.m.emap[rule.l.emap[i]] for i in rule.interface.edges})
    return cut, embed


def pushout_complement(match: Match) -> tuple[Hypergraph, Morphism]:
    """The cut graph of the match together with the interface embedding.

    Raises :class:`DanglingEdges` when the no-dangling-edges condition
    fails, which is exactly when no pushout complement exists.
    """
    if not no_dangling_edges(match):
        witness = _first_dangling(match)
        raise DanglingEdges(
            f"deleting vertex {witness[0]!r} would dangle edge {witness[1]!r}")
    return _cut_graph(match)


def apply(match: Match) -> DpoEvent:
    """Apply the match: compute the complement, then glue R along I."""
    complement, embed = pushout_complement(match)
    production, co_match, complement_embed = pushout(match.rule.r, embed)
    return DpoEvent(match, complement, production, co_match, embed, complement_embed)


def step_all(rules: list[RewriteRule], host: Hypergraph) -> list[DpoTransition]:
    """All transitions out of the host's isomorphism class.

    The host is canonicalised first; transitions are ordered by rule
    index and then by match order, and each target is canonicalised.
    """
    source = canonical_form(host)
    out: list[DpoTransition] = []
    for rule in rules:
        for match in find_matches(rule, source):
            if not no_dangling_edges(match):
                continue
            event = apply(match)
            out.append(DpoTransition(source, canonical_form(event.production), event))
    return out


def edge_free_interface(rule: RewriteRule) -> RewriteRule:
    """The same rule with every edge dropped from its interface."""
    stripped = Hypergraph(rule.interface.vertices, {})
    l = Morphism(stripped, rule.left, dict(rule.l.vmap), {})
    r = Morphism(stripped, rule.right, dict(rule.r.vmap), {})
    return RewriteRule(rule.left, stripped, rule.right, l, r)


def _interface_images(match: Match) -> tuple[set, set]:
    rule = match.rule
    verts = {match.m.vmap[rule.l.vmap[i]] for i in rule.interface.vertices}
    edges = {match.m.emap[rule.l.emap[i]] for i in rule.interface.edges}
    return verts, edges


def can_happen_together(e1: Match, e2: Match) -> bool:
    """True iff the matches agree about the overlap of their images.

    Every host vertex/edge lying in both images must be preserved by
    both rules or deleted by both: being in the first interface image is
    equivalent to being in the second.
    """
    if e1.host != e2.host:
        raise DifferentHost("matches are on different hosts")
    img1_v = set(e1.m.vmap.values())
    img2_v = set(e2.m.vmap.values())
    img1_e = set(e1.m.emap.values())
    img2_e = set(e2.m.emap.values())
    if1_v, if1_e = _interface_images(e1)
    if2_v, if2_e = _interface_images(e2)
    for v in img1_v & img2_v:
        if (v in if1_v) != (v in if2_v):
            return False
    for e in img1_e & img2_e:
        if (e in if1_e) != (e in if2_e):
            return False
    return True


def _preimage(mapping: dict, value):
    for k, v in mapping.items():
        if v == value:
            return k
    raise KeyError(value)


def combined_event(e1: Match, e2: Match) -> tuple[RewriteRule, Match]:
    """Glue two compatible events into a single rule and match.

    L, I and R are the pushouts of the two rules' components over their
    overlap in the host; the match into the host is the mediating
    morphism.
    """
    if not can_happen_together(e1, e2):
        raise NotCompatible("events cannot happen together")
    r1, r2 = e1.rule, e2.rule
    overlap, p1, p2 = pullback(e1.m, e2.m)
    combined_l, in_l1, in_l2 = pushout(p1, p2)

    shared, _, to_i1 = pullback(p1, r1.l)
    to_i2 = Morphism(shared, r2.interface,
                     {v: _preimage(r2.l.vmap, v[0][1]) for v in shared.vertices},
                     {e: _preimage(r2.l.emap, e[0][1]) for e in shared.edges})
    combined_i, in_i1, in_i2 = pushout(to_i1, to_i2)
    combined_r, in_r1, in_r2 = pushout(compose(r1.r, to_i1), compose(r2.r, to_i2))

    def glue_leg(target_graph, leg1, leg2, in1, in2):
        vmap, emap = {}, {}
        for v in combined_i.vertices:
            side, orig = v
            vmap[v] = in1.vmap[leg1.vmap[orig]] if side == 0 else in2.vmap[leg2.vmap[orig]]
        for e in combined_i.edges:
            side, orig = e
            emap[e] = in1.emap[leg1.emap[orig]] if side == 0 else in2.emap[leg2.emap[orig]]
        return Morphism(combined_i, target_graph, vmap, emap)

    leg_l = glue_leg(combined_l, r1.l, r2.l, in_l1, in_l2)
    leg_r = glue_leg(combined_r, r1.r, r2.r, in_r1, in_r2)
    rule = RewriteRule(combined_l, combined_i, combined_r, leg_l, leg_r)

    vmap = {v: (e1.m.vmap[v[1]] if v[0] == 0 else e2.m.vmap[v[1]])
            for v in combined_l.vertices}
    emap = {e: (e1.m.emap[e[1]] if e[0] == 0 else e2.m.emap[e[1]])
            for e in combined_l.edges}
    match = Match(rule, e1.host, Morphism(combined_l, e1.host, vmap, emap))
    return rule, match


def parallel_independent(e1: Match, e2: Match) -> bool:
    """True iff each match survives inside the other event's complement."""
    if e1.host != e2.host:
        raise DifferentHost("matches are on different hosts")
    comp1, _ = pushout_complement(e1)
    comp2, _ = pushout_complement(e2)

    def factors(match: Match, complement: Hypergraph) -> bool:
        return (set(match.m.vmap.values()) <= complement.vertices
                and set(match.m.emap.values()) <= set(complement.edges))

    return factors(e1, comp2) and factors(e2, comp1)


def causally_related_successive(e1: DpoEvent, e2: Match) -> bool:
    """Does the follow-up match use material the first event created?

    ``e2.host`` must be isomorphic to ``e1.production`` (the events are
    successive); the match is transported along the isomorphism and the
    events are causally related iff its image is not contained in the
    embedded pushout complement.
    """
    iso = find_isomorphism(e2.host, e1.production)
    if iso is None:
        raise NotSuccessive("the second event does not start at the first's production")
    image_v = {iso.vmap[v] for v in e2.m.vmap.values()}
    image_e = {iso.emap[e] for e in e2.m.emap.values()}
    kept_v = set(e1.complement_embed.vmap.values())
    kept_e = set(e1.complement_embed.emap.values())
    return not (image_v <= kept_v and image_e <= kept_e)


# ---------------------------------------------------------------------------
# JSON wire format


def rule_to_json(rule: RewriteRule) -> dict:
    return {
        "L": hypergraph_to_json(rule.left),
        "I": hypergraph_to_json(rule.interface),
        "R": hypergraph_to_json(rule.right),
        "l": morphism_to_json(rule.l),
        "r": morphism_to_json(rule.r),
    }


def rule_from_json(obj) -> RewriteRule:
    _expect_keys(obj, {"L", "I", "R", "l", "r"}, "rule")
    left = hypergraph_from_json(obj["L"])
    interface = hypergraph_from_json(obj["I"])
    right = hypergraph_from_json(obj["R"])
    l = morphism_from_json(obj["l"], interface, left)
    r = morphism_from_json(obj["r"], interface, right)
    return RewriteRule(left, interface, right, l, r)


def event_to_json(event: DpoEvent) -> dict:
    return {
        "match": morphism_to_json(event.match.m),
        "complement": hypergraph_to_json(event.complement),
        "production": hypergraph_to_json(event.production),
        "co_match": morphism_to_json(event.co_match),
        "interface_embed": morphism_to_json(event.interface_embed),
    }
