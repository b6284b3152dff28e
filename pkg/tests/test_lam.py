"""Parsing, goodness, reduction, multiway systems, causality, homotopy."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_good_term, oracle_causal_relation, oracle_label_paths
from multiway import lam
from multiway.lam import Abs, App, Var

GOOD_42 = r"(\x. x@1 a) @2 (\y. y)"
FIG4 = r"(((\x.\y.(x@1 y))@2 \z.z)@3 \v.v)@4 b"
FIG5 = r"(((\x.\y.(x) y)\z.z)(\u.\v.v) a) b"


def seeded_terms(seed, count, **kwargs):
    rng = random.Random(seed)
    return [make_good_term(rng, **kwargs) for _ in range(count)]


class TestParse:
    def test_worked_example(self):
        term = lam.parse(GOOD_42)
        assert term == App(Abs("x", App(Var("x"), Var("a"), 1)),
                           Abs("y", Var("y")), 2)

    def test_bare_variable(self):
        assert lam.parse("x") == Var("x")

    def test_auto_labels_textual_order(self):
        term = lam.parse(r"(\x.\y.(x y)) p q")
        inner = term.fun.fun.body.body
        assert inner.label == 1
        assert term.fun.label == 2
        assert term.label == 3

    def test_auto_labels_skip_explicit(self):
        term = lam.parse(r"(\x.(x@1 x)) ((\y.y)@2 \z.z)")
        assert term.label == 3

    def test_unicode_lambda(self):
        assert lam.parse("λx. x") == Abs("x", Var("x"))

    def test_application_left_associative(self):
        term = lam.parse("a b c")
        assert term == App(App(Var("a"), Var("b"), 1), Var("c"), 2)

    def test_trailing_abstraction_extends_right(self):
        term = lam.parse(r"a \x. x b")
        assert term == App(Var("a"), Abs("x", App(Var("x"), Var("b"), 1)), 2)

    def test_syntax_error_has_position(self):
        with pytest.raises(lam.ParseError) as err:
            lam.parse("(a b")
        assert err.value.position == 4

    def test_bad_character(self):
        with pytest.raises(lam.ParseError):
            lam.parse("a ? b")

    def test_duplicate_label(self):
        with pytest.raises(lam.DuplicateLabel):
            lam.parse("a @1 b @1 c")

    def test_round_trip(self):
        for text in (GOOD_42, FIG4, FIG5, "x", r"\x. x y z"):
            term = lam.parse(text)
            assert lam.parse(lam.to_text(term)) == term

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10**6))
    def test_round_trip_random(self, seed):
        term = make_good_term(random.Random(seed), max_length=5)
        assert lam.parse(lam.to_text(term)) == term


class TestGoodness:
    def test_identity_is_good(self):
        assert lam.is_good(lam.parse(r"\x. x"))

    def test_duplicating_binder_is_not(self):
        assert not lam.is_good(Abs("x", App(Var("x"), Var("x"), 1)))

    def test_figure_four_expression(self):
        assert lam.is_good(lam.parse(FIG4))

    def test_repeated_label_not_good(self):
        bad = App(App(Var("a"), Var("b"), 1), App(Var("c"), Var("d"), 1), 2)
        assert not lam.is_good(bad)

    def test_closure_under_reduction(self):
        for term in seeded_terms(3, 30):
            for event in lam.reduce_step(term):
                assert lam.is_good(event.target)


class TestLabelSet:
    def test_variable(self):
        assert lam.label_set(Var("x")) == frozenset()
        assert lam.length(Var("x")) == 0

    def test_worked_example(self):
        term = lam.parse(GOOD_42)
        assert lam.label_set(term) == frozenset({1, 2})
        assert lam.length(term) == 2

    def test_figure_four(self):
        term = lam.parse(FIG4)
        assert lam.label_set(term) == frozenset({1, 2, 3, 4})
        assert lam.length(term) == 4


class TestReduceStep:
    def test_worked_example_single_event(self):
        term = lam.parse(GOOD_42)
        events = lam.reduce_step(term)
        assert [e.label for e in events] == [2]
        assert events[0].target == lam.parse(r"(\y. y) @1 a")

    def test_normal_form(self):
        assert lam.reduce_step(Var("a")) == []

    def test_figure_four_branching(self):
        t0 = lam.parse(FIG4)
        events = lam.reduce_step(t0)
        assert [e.label for e in events] == [2]
        t1 = events[0].target
        assert sorted(e.label for e in lam.reduce_step(t1)) == [1, 3]

    def test_not_good_rejected(self):
        with pytest.raises(lam.NotGood):
            lam.reduce_step(Abs("x", App(Var("x"), Var("x"), 1)))

    def test_capture_avoided(self):
        # (\x.\y. x@1 y) y -> \y'. y @1 y'
        term = lam.parse(r"(\x.\y. x@1 y) @2 y")
        target = lam.reduce_step(term)[0].target
        assert isinstance(target, Abs)
        assert target.binder != "y"
        assert target.body.fun == Var("y")
        assert target.body.arg == Var(target.binder)
        assert lam.parse(lam.to_text(target)) == target


class TestMultiway:
    def test_normal_form_input(self):
        ms = lam.multiway(Var("a"))
        assert len(ms.states) == 1
        assert not ms.transitions

    def test_worked_example_chain(self):
        ms = lam.multiway(lam.parse(GOOD_42))
        assert len(ms.states) == 3
        assert ms.maximal_label_sequences() == ((2, 1),)

    def test_figure_four_structure(self):
        ms = lam.multiway(lam.parse(FIG4))
        paths = ms.maximal_label_sequences()
        assert len(paths) == 2
        assert all(len(p) == 4 for p in paths)
        assert sorted(paths) == [(2, 1, 3, 4), (2, 3, 1, 4)]

    def test_state_cap(self):
        with pytest.raises(lam.StateCapExceeded):
            lam.multiway(lam.parse(FIG4), max_states=2)

    def test_depth_cap(self):
        with pytest.raises(lam.StateCapExceeded):
            lam.multiway(lam.parse(FIG4), max_depth=2)

    def test_unique_normal_form(self):
        for term in seeded_terms(5, 40):
            ms = lam.multiway(term)
            nf = ms.normal_form()
            assert not lam.reduce_step(nf)

    def test_paths_share_length_and_events(self):
        for term in seeded_terms(7, 40):
            ms = lam.multiway(term)
            nf = ms.normal_form()
            expected_len = lam.length(term) - lam.length(nf)
            expected_events = lam.label_set(term) - lam.label_set(nf)
            for path in ms.maximal_label_sequences():
                assert len(path) == expected_len
                assert set(path) == expected_events


class TestDiamond:
    def test_every_state_of_sampled_systems(self):
        for term in seeded_terms(9, 40):
            ms = lam.multiway(term)
            for state in ms.states:
                events = ms.outgoing(state)
                for i, e1 in enumerate(events):
                    for e2 in events[i + 1:]:
                        joins = ({lam.alpha_key(x.target)
                                  for x in lam.reduce_step(e1.target)}
                                 & {lam.alpha_key(x.target)
                                    for x in lam.reduce_step(e2.target)})
                        assert joins, "one-step reducts must rejoin in one step"


class TestCausal2:
    def test_worked_example(self):
        ms = lam.multiway(lam.parse(GOOD_42))
        (path,) = ms.maximal_paths()
        assert lam.causal_2(path[0], path[1])

    def test_disjoint_redexes_not_causal(self):
        term = lam.parse(r"((\x.x)@1 a) @3 ((\y.y)@2 b)")
        ms = lam.multiway(term)
        for path in ms.maximal_paths():
            for e1, e2 in zip(path, path[1:]):
                if {e1.label, e2.label} == {1, 2}:
                    assert not lam.causal_2(e1, e2)

    def test_figure_four_one_then_four(self):
        ms = lam.multiway(lam.parse(FIG4))
        seen = False
        for path in ms.maximal_paths():
            for e1, e2 in zip(path, path[1:]):
                if (e1.label, e2.label) == (1, 4):
                    assert lam.causal_2(e1, e2)
                    seen = True
        assert seen

    def test_not_successive_raises(self):
        ms = lam.multiway(lam.parse(FIG4))
        (p1, p2) = sorted(ms.maximal_paths(),
                          key=lambda p: tuple(e.label for e in p))
        with pytest.raises(lam.NotSuccessive):
            lam.causal_2(p1[0], p2[3])

    def test_swap_property(self):
        # causally disconnected successive events can be interchanged
        for term in seeded_terms(11, 30):
            ms = lam.multiway(term)
            for path in ms.maximal_paths():
                for e1, e2 in zip(path, path[1:]):
                    if lam.causal_2(e1, e2):
                        continue
                    swapped = [x for x in lam.reduce_step(e1.source)
                               if x.label == e2.label]
                    assert len(swapped) == 1
                    closing = [y for y in lam.reduce_step(swapped[0].target)
                               if y.label == e1.label
                               and lam.alpha_key(y.target) == lam.alpha_key(e2.target)]
                    assert closing


class TestCausal:
    def test_irreflexive(self):
        ms = lam.multiway(lam.parse(FIG4))
        assert not lam.causal(ms, 1, 1)

    def test_figure_four_one_precedes_four(self):
        ms = lam.multiway(lam.parse(FIG4))
        assert lam.causal(ms, 1, 4)
        assert not lam.causal(ms, 4, 1)

    def test_figure_four_one_and_three_unordered(self):
        ms = lam.multiway(lam.parse(FIG4))
        assert not lam.causal(ms, 1, 3)
        assert not lam.causal(ms, 3, 1)

    def test_unknown_label(self):
        ms = lam.multiway(lam.parse(GOOD_42))
        with pytest.raises(lam.UnknownLabel):
            lam.causal(ms, 1, 99)

    def test_lemma_successive_pairs_agree_with_all_paths(self):
        for term in seeded_terms(13, 40):
            ms = lam.multiway(term)
            for path in ms.maximal_paths():
                for e1, e2 in zip(path, path[1:]):
                    assert lam.causal_2(e1, e2) == lam.causal(ms, e1.label, e2.label)

    def test_engine_matches_oracle(self):
        for term in seeded_terms(15, 30):
            ms = lam.multiway(term)
            assert set(lam.causal_relation(ms).relation) == oracle_causal_relation(ms)
            assert sorted(ms.maximal_label_sequences()) == \
                sorted(oracle_label_paths(ms))


class TestCausalGraph:
    def test_worked_example(self):
        graph = lam.causal_graph(lam.parse(GOOD_42))
        assert graph.relation == frozenset({(2, 1)})

    def test_normal_form_empty(self):
        graph = lam.causal_graph(Var("a"))
        assert graph.relation == frozenset()
        assert graph.events == frozenset()

    def test_axioms_on_samples(self):
        for term in seeded_terms(17, 40):
            graph = lam.causal_graph(term)
            assert graph.axiom_violations() == []

    def test_figure_five_matches_oracle(self):
        term = lam.parse(FIG5)
        ms = lam.multiway(term)
        assert set(lam.causal_relation(ms).relation) == oracle_causal_relation(ms)


class TestProperTime:
    def test_successive_is_one(self):
        ms = lam.multiway(lam.parse(GOOD_42))
        assert lam.proper_time(ms, 2, 1) == 1

    def test_figure_four_shortcut(self):
        ms = lam.multiway(lam.parse(FIG4))
        assert lam.proper_time(ms, 1, 4) == 1  # adjacent on one path

    def test_unrelated_raises(self):
        ms = lam.multiway(lam.parse(FIG4))
        with pytest.raises(lam.NotCausallyOrdered):
            lam.proper_time(ms, 4, 1)

    def test_minimal_path_is_causal_chain(self):
        # on every proper-time path, the first event causes all later ones
        # on the segment and all earlier ones cause the last
        for term in seeded_terms(19, 25):
            ms = lam.multiway(term)
            graph = lam.causal_relation(ms)
            for n, m in graph.relation:
                tau = lam.proper_time(ms, n, m)
                for labels in ms.maximal_label_sequences():
                    if n not in labels or m not in labels:
                        continue
                    i, j = labels.index(n), labels.index(m)
                    if j - i != tau:
                        continue
                    segment = labels[i:j + 1]
                    assert all((segment[0], l) in graph.relation
                               for l in segment[1:])
                    assert all((l, segment[-1]) in graph.relation
                               for l in segment[:-1])


class TestHomotopy:
    def test_path_homotopic_to_itself(self):
        ms = lam.multiway(lam.parse(GOOD_42))
        (path,) = ms.maximal_paths()
        assert lam.homotopic(path, path)

    def test_two_sides_of_a_diamond(self):
        term = lam.parse(r"((\x.x)@1 a) @3 ((\y.y)@2 b)")
        ms = lam.multiway(term)
        paths = [p for p in ms.maximal_paths() if len(p) == 3]
        assert len(paths) >= 2
        assert lam.homotopic(paths[0], paths[1])

    def test_figure_four_paths_homotopic(self):
        ms = lam.multiway(lam.parse(FIG4))
        p1, p2 = ms.maximal_paths()
        assert lam.homotopic(p1, p2)

    def test_all_maximal_paths_homotopic(self):
        for term in seeded_terms(21, 20, max_length=5):
            ms = lam.multiway(term)
            paths = ms.maximal_paths()
            for other in paths[1:]:
                assert lam.homotopic(paths[0], other)

    def test_endpoint_mismatch(self):
        ms = lam.multiway(lam.parse(FIG4))
        p1, _ = ms.maximal_paths()
        with pytest.raises(lam.EndpointMismatch):
            lam.homotopic(p1, p1[:-1])
        with pytest.raises(lam.EndpointMismatch):
            lam.homotopic(p1[1:], p1[:-1])

    def test_interchange_exists_iff_causally_disconnected(self):
        for term in seeded_terms(23, 30):
            ms = lam.multiway(term)
            for path in ms.maximal_paths():
                for i, (e1, e2) in enumerate(zip(path, path[1:])):
                    alternatives = [
                        x for x in lam.reduce_step(e1.source)
                        if lam.alpha_key(x.target) != lam.alpha_key(e1.target)
                        and any(lam.alpha_key(y.target) == lam.alpha_key(e2.target)
                                for y in lam.reduce_step(x.target))]
                    assert bool(alternatives) == (not lam.causal_2(e1, e2))

    def test_causal_restriction_invariant_under_interchange(self):
        # the per-path causal order transported along an interchange move
        # is the same relation on labels
        for term in seeded_terms(25, 20):
            ms = lam.multiway(term)
            relation = lam.causal_relation(ms).relation
            for path in ms.maximal_paths():
                labels = [e.label for e in path]
                for variant in lam._interchanges(path):
                    vlabels = [e.label for e in variant]
                    assert sorted(labels) == sorted(vlabels)
                    restrict = {(a, b) for a in labels for b in labels
                                if (a, b) in relation}
                    vrestrict = {(a, b) for a in vlabels for b in vlabels
                                 if (a, b) in relation}
                    assert restrict == vrestrict


class TestCausalStructureMonotone:
    def test_prefixes_and_suffixes(self):
        # relations on a subpath are a subset of those on the whole path
        for term in seeded_terms(27, 15):
            ms = lam.multiway(term)
            relation = lam.causal_relation(ms).relation

            def on(labels):
                return {(a, b) for a in labels for b in labels
                        if (a, b) in relation}

            for labels in ms.maximal_label_sequences():
                full = on(labels)
                for cut in range(len(labels)):
                    assert on(labels[:cut]) <= full
                    assert on(labels[cut:]) <= full
