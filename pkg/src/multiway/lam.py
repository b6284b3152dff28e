"""Labelled lambda-calculus with the multiway/causal machinery.

Terms carry a distinct natural-number label on every application.  A
term is *good* when each binder occurs free at most once in its body;
reduction of good terms never invents labels, so the label of a redex
identifies the reduction event across every evaluation order.  On top of
one-step reduction the module builds the multiway system (all reduction
orders), the causal relation between event labels (an event precedes
another when it does so on every maximal path), proper time, and
homotopy of paths via interchange of adjacent events.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional, Union


class LamError(Exception):
    """Base class for errors raised by this module."""


class ParseError(LamError):
    """Input text does not match the term grammar."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class DuplicateLabel(LamError):
    """An explicit application label occurs twice."""


class NotGood(LamError):
    """The operation is only defined for good terms."""


class NotSuccessive(LamError):
    """The two events are not consecutive."""


class StateCapExceeded(LamError):
    """Multiway enumeration hit the state cap."""


class UnknownLabel(LamError):
    """A label does not occur among the multiway system's events."""


class NotCausallyOrdered(LamError):
    """Proper time is only defined for causally ordered labels."""


class EndpointMismatch(LamError):
    """Homotopy compares paths with equal endpoints and equal length."""


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Abs:
    binder: str
    body: "Term"


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"
    label: int


Term = Union[Var, Abs, App]


@dataclass(frozen=True)
class Event:
    """One reduction step: the redex's label plus both endpoint terms."""

    source: Term
    target: Term
    label: int


Path = tuple[Event, ...]


# ---------------------------------------------------------------------------
# Text format

_TOKEN = re.compile(r"\s*(?:(\\|λ)|(\.)|(\()|(\))|@(\d+)|([a-z][a-zA-Z0-9_]*'*))")


def _tokenize(text: str) -> list[tuple[str, object, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise ParseError(f"unexpected character {stripped[0]!r}", at)
        if m.group(1):
            tokens.append(("lambda", None, m.start(1)))
        elif m.group(2):
            tokens.append((".", None, m.start(2)))
        elif m.group(3):
            tokens.append(("(", None, m.start(3)))
        elif m.group(4):
            tokens.append((")", None, m.start(4)))
        elif m.group(5):
            tokens.append(("label", int(m.group(5)), m.start(5) - 1))
        else:
            tokens.append(("ident", m.group(6), m.start(6)))
        pos = m.end()
    tokens.append(("eof", None, len(text)))
    return tokens


def parse(text: str) -> Term:
    """Parse a term; applications without ``@n`` get fresh labels.

    Unlabelled applications are numbered 1, 2, 3, ... in the order their
    operator positions appear in the text (function subtree, node,
    argument subtree), skipping labels taken explicitly.
    """
    tokens = _tokenize(text)
    index = 0

    def peek():
        return tokens[index]

    def advance():
        nonlocal index
        tok = tokens[index]
        index += 1
        return tok

    def parse_abs() -> Term:
        advance()  # lambda
        kind, value, pos = advance()
        if kind != "ident":
            raise ParseError("expected a variable after the binder", pos)
        binder = value
        kind, _, pos = advance()
        if kind != ".":
            raise ParseError("expected '.' after the binder", pos)
        return Abs(binder, parse_term())

    def parse_atom() -> Term:
        kind, value, pos = peek()
        if kind == "ident":
            advance()
            return Var(value)
        if kind == "(":
            advance()
            inner = parse_term()
            kind, _, pos = advance()
            if kind != ")":
                raise ParseError("expected ')'", pos)
            return inner
        raise ParseError("expected a term", pos)

    def parse_term() -> Term:
        kind, _, _ = peek()
        if kind == "lambda":
            return parse_abs()
        node = parse_atom()
        while True:
            kind, value, pos = peek()
            if kind == "label":
                advance()
                nxt, _, npos = peek()
                if nxt == "lambda":
                    return App(node, parse_abs(), value)
                if nxt not in ("ident", "("):
                    raise ParseError("expected a term after the label", npos)
                node = App(node, parse_atom(), value)
            elif kind in ("ident", "("):
                node = App(node, parse_atom(), None)
            elif kind == "lambda":
                return App(node, parse_abs(), None)
            else:
                return node

    term = parse_term()
    kind, _, pos = peek()
    if kind != "eof":
        raise ParseError("trailing input", pos)
    return _assign_labels(term)


def _assign_labels(term: Term) -> Term:
    explicit: set[int] = set()

    def collect(t: Term) -> None:
        if isinstance(t, Abs):
            collect(t.body)
        elif isinstance(t, App):
            if t.label is not None:
                if t.label in explicit:
                    raise DuplicateLabel(f"label {t.label} used twice")
                explicit.add(t.label)
            collect(t.fun)
            collect(t.arg)

    collect(term)
    counter = itertools_count_from(1, explicit)

    def assign(t: Term) -> Term:
        if isinstance(t, Var):
            return t
        if isinstance(t, Abs):
            return Abs(t.binder, assign(t.body))
        fun = assign(t.fun)
        label = t.label if t.label is not None else next(counter)
        return App(fun, assign(t.arg), label)

    return assign(term)


def itertools_count_from(start: int, taken: set[int]) -> Iterator[int]:
    n = start
    while True:
        while n in taken:
            n += 1
        yield n
        n += 1


def to_text(term: Term) -> str:
    """Render a term so that parsing the result reproduces it exactly."""
    if isinstance(term, Var):
        return term.name
    if isinstance(term, Abs):
        return f"\\{term.binder}. {to_text(term.body)}"
    fun = to_text(term.fun)
    if isinstance(term.fun, Abs):
        fun = f"({fun})"
    arg = to_text(term.arg)
    if isinstance(term.arg, (Abs, App)):
        arg = f"({arg})"
    return f"{fun} @{term.label} {arg}"


# ---------------------------------------------------------------------------
# Structure

def free_vars(term: Term) -> frozenset[str]:
    if isinstance(term, Var):
        return frozenset((term.name,))
    if isinstance(term, Abs):
        return free_vars(term.body) - {term.binder}
    return free_vars(term.fun) | free_vars(term.arg)


def count_free(term: Term, name: str) -> int:
    if isinstance(term, Var):
        return 1 if term.name == name else 0
    if isinstance(term, Abs):
        return 0 if term.binder == name else count_free(term.body, name)
    return count_free(term.fun, name) + count_free(term.arg, name)


def label_set(term: Term) -> frozenset[int]:
    """All application labels occurring in the term."""
    if isinstance(term, Var):
        return frozenset()
    if isinstance(term, Abs):
        return label_set(term.body)
    return label_set(term.fun) | label_set(term.arg) | {term.label}


def length(term: Term) -> int:
    """Number of applications (= labels) in the term."""
    return len(label_set(term))


def is_good(term: Term) -> bool:
    """Labels pairwise distinct and every binder free at most once in its body."""
    seen: set[int] = set()

    def walk(t: Term) -> bool:
        if isinstance(t, Var):
            return True
        if isinstance(t, Abs):
            return count_free(t.body, t.binder) <= 1 and walk(t.body)
        if t.label in seen:
            return False
        seen.add(t.label)
        return walk(t.fun) and walk(t.arg)

    return walk(term)


def find_app(term: Term, label: int) -> Optional[App]:
    """The application subterm carrying ``label``, if any."""
    if isinstance(term, Var):
        return None
    if isinstance(term, Abs):
        return find_app(term.body, label)
    if term.label == label:
        return term
    return find_app(term.fun, label) or find_app(term.arg, label)


def _fresh(base: str, avoid: frozenset[str]) -> str:
    candidate = base + "'"
    while candidate in avoid:
        candidate += "'"
    return candidate


def substitute(term: Term, name: str, replacement: Term) -> Term:
    """Capture-avoiding substitution of ``replacement`` for free ``name``."""
    rep_fv = free_vars(replacement)

    def go(t: Term) -> Term:
        if isinstance(t, Var):
            return replacement if t.name == name else t
        if isinstance(t, App):
            return App(go(t.fun), go(t.arg), t.label)
        if t.binder == name:
            return t
        if t.binder in rep_fv and count_free(t.body, name) > 0:
            fresh = _fresh(t.binder, free_vars(t.body) | rep_fv)
            renamed = substitute(t.body, t.binder, Var(fresh))
            return Abs(fresh, go(renamed))
        return Abs(t.binder, go(t.body))

    return go(term)


def alpha_key(term: Term, _env: tuple = ()):
    """Canonical key identifying terms up to renaming of bound variables."""
    if isinstance(term, Var):
        for depth, binder in enumerate(reversed(_env)):
            if binder == term.name:
                return ("b", depth)
        return ("f", term.name)
    if isinstance(term, Abs):
        return ("l", alpha_key(term.body, _env + (term.binder,)))
    return ("a", term.label, alpha_key(term.fun, _env), alpha_key(term.arg, _env))


# ---------------------------------------------------------------------------
# Reduction and the multiway system

def _reducts(term: Term) -> list[tuple[int, Term]]:
    """One-step reducts with their event labels, leftmost-outermost first."""
    out: list[tuple[int, Term]] = []
    if isinstance(term, Var):
        return out
    if isinstance(term, Abs):
        return [(n, Abs(term.binder, body)) for n, body in _reducts(term.body)]
    if isinstance(term.fun, Abs):
        out.append((term.label, substitute(term.fun.body, term.fun.binder, term.arg)))
    out.extend((n, App(fun, term.arg, term.label)) for n, fun in _reducts(term.fun))
    out.extend((n, App(term.fun, arg, term.label)) for n, arg in _reducts(term.arg))
    return out


def reduce_step(term: Term) -> list[Event]:
    """All one-step reduction events out of a good term."""
    if not is_good(term):
        raise NotGood("reduction is only defined on good terms")
    return [Event(term, target, label) for label, target in _reducts(term)]


@dataclass(eq=False)
class MultiwaySystem:
    """Every state reachable from the root, with all one-step events.

    States are terms up to renaming of bound variables (labels stay
    significant); ``states`` lists the first-seen representative of each
    class in BFS discovery order.
    """

    root: Term
    states: tuple[Term, ...]
    transitions: tuple[Event, ...]

    def __post_init__(self):
        self._index = {alpha_key(s): s for s in self.states}
        self._out: dict = {alpha_key(s): [] for s in self.states}
        for event in self.transitions:
            self._out[alpha_key(event.source)].append(event)
        self._paths_cache: Optional[tuple[tuple[Event, ...], ...]] = None

    def outgoing(self, state: Term) -> list[Event]:
        return list(self._out[alpha_key(state)])

    def event_labels(self) -> frozenset[int]:
        return frozenset(e.label for e in self.transitions)

    def normal_form(self) -> Term:
        finals = [s for s in self.states if not self._out[alpha_key(s)]]
        if len(finals) != 1:
            raise LamError(f"expected a unique normal form, found {len(finals)}")
        return finals[0]

    def maximal_paths(self) -> tuple[Path, ...]:
        """All maximal event paths starting at the root (cached)."""
        if self._paths_cache is None:
            paths: list[Path] = []

            def walk(state: Term, prefix: list[Event]) -> None:
                events = self._out[alpha_key(state)]
                if not events:
                    paths.append(tuple(prefix))
                    return
                for event in events:
                    prefix.append(event)
                    walk(event.target, prefix)
                    prefix.pop()

            walk(self.root, [])
            self._paths_cache = tuple(paths)
        return self._paths_cache

    def maximal_label_sequences(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(e.label for e in path) for path in self.maximal_paths())


def multiway(term: Term, max_states: int = 100000, max_depth: Optional[int] = None) -> MultiwaySystem:
    """Exhaustive BFS closure of one-step reduction from ``term``."""
    if not is_good(term):
        raise NotGood("multiway systems are built from good terms")
    root_key = alpha_key(term)
    reps = {root_key: term}
    order = [term]
    depth = {root_key: 0}
    transitions: list[Event] = []
    queue = [term]
    while queue:
        state = queue.pop(0)
        state_key = alpha_key(state)
        if max_depth is not None and depth[state_key] >= max_depth:
            if _reducts(state):
                raise StateCapExceeded(f"depth cap {max_depth} exceeded")
            continue
        for event in reduce_step(state):
            key = alpha_key(event.target)
            if key not in reps:
                if len(reps) >= max_states:
                    raise StateCapExceeded(f"state cap {max_states} exceeded")
                reps[key] = event.target
                depth[key] = depth[state_key] + 1
                order.append(event.target)
                queue.append(event.target)
            transitions.append(Event(state, reps[key], event.label))
    return MultiwaySystem(term, tuple(order), tuple(transitions))


# ---------------------------------------------------------------------------
# Causality

def causal_2(e1: Event, e2: Event) -> bool:
    """Successive-event causality: was the second redex enabled by the first?

    True iff in ``e1.source`` the application carrying ``e2.label`` does
    not yet have an abstraction in function position.
    """
    if alpha_key(e1.target) != alpha_key(e2.source):
        raise NotSuccessive("e1.target and e2.source differ")
    app = find_app(e1.source, e2.label)
    if app is None:
        raise UnknownLabel(f"label {e2.label} does not occur in e1.source")
    return not isinstance(app.fun, Abs)


def causal(msys: MultiwaySystem, n: int, m: int) -> bool:
    """True iff ``n`` occurs before ``m`` on every maximal path containing both.

    Pairs that never occur together on any path are causally unrelated
    (False in both directions), as are equal labels.
    """
    known = msys.event_labels()
    if n not in known:
        raise UnknownLabel(f"label {n} never occurs as an event")
    if m not in known:
        raise UnknownLabel(f"label {m} never occurs as an event")
    if n == m:
        return False
    seen_both = False
    for labels in msys.maximal_label_sequences():
        try:
            pos_n = labels.index(n)
            pos_m = labels.index(m)
        except ValueError:
            continue
        if pos_n > pos_m:
            return False
        seen_both = True
    return seen_both


@dataclass(frozen=True)
class CausalGraph:
    """Event labels with an order relation between them."""

    events: frozenset[int]
    relation: frozenset[tuple[int, int]]

    def axiom_violations(self) -> list[str]:
        """Transitivity, irreflexivity, asymmetry; empty iff all hold."""
        out = []
        rel = self.relation
        for a, b in rel:
            if a == b:
                out.append(f"reflexive pair ({a}, {b})")
            if (b, a) in rel:
                out.append(f"symmetric pair ({a}, {b})")
            for c, d in rel:
                if b == c and (a, d) not in rel:
                    out.append(f"missing transitive pair ({a}, {d})")
        return out


def causal_relation(msys: MultiwaySystem) -> CausalGraph:
    """The causal graph of an already-built multiway system."""
    labels = sorted(msys.event_labels())
    status: dict[tuple[int, int], list] = {}
    for labels_seq in msys.maximal_label_sequences():
        position = {lbl: i for i, lbl in enumerate(labels_seq)}
        for i, n in enumerate(labels):
            if n not in position:
                continue
            for m in labels[i + 1:]:
                if m not in position:
                    continue
                first, second = (n, m) if position[n] < position[m] else (m, n)
                entry = status.setdefault((min(n, m), max(n, m)), [True, True])
                if first == n:
                    entry[1] = False  # m never uniformly first
                else:
                    entry[0] = False
    relation = set()
    for (n, m), (n_first, m_first) in status.items():
        if n_first:
            relation.add((n, m))
        if m_first:
            relation.add((m, n))
    return CausalGraph(frozenset(labels), frozenset(relation))


def causal_graph(term: Term, max_states: int = 100000) -> CausalGraph:
    """The causal graph over all reduction events of a good term."""
    return causal_relation(multiway(term, max_states))


def proper_time(msys: MultiwaySystem, n: int, m: int) -> int:
    """Minimum over paths of one plus the number of events between n and m."""
    if not causal(msys, n, m):
        raise NotCausallyOrdered(f"{n} does not causally precede {m}")
    best = None
    for labels in msys.maximal_label_sequences():
        if n in labels and m in labels:
            distance = labels.index(m) - labels.index(n)
            best = distance if best is None else min(best, distance)
    return best


# ---------------------------------------------------------------------------
# Homotopy of paths

def _check_path(path: Path) -> None:
    for prev, nxt in zip(path, path[1:]):
        if alpha_key(prev.target) != alpha_key(nxt.source):
            raise EndpointMismatch("events do not chain")


def _interchanges(path: Path) -> Iterator[Path]:
    """All paths differing from ``path`` in exactly one intermediate state."""
    for i in range(len(path) - 1):
        first, second = path[i], path[i + 1]
        mid_key = alpha_key(first.target)
        end_key = alpha_key(second.target)
        for candidate in reduce_step(first.source):
            if alpha_key(candidate.target) == mid_key:
                continue
            for closing in reduce_step(candidate.target):
                if alpha_key(closing.target) == end_key:
                    yield path[:i] + (candidate, closing) + path[i + 2:]


def homotopic(p1: Path, p2: Path) -> bool:
    """Are the paths related by interchanging adjacent independent events?

    Both paths must share endpoints and length; reachability is decided
    by breadth-first search over single interchange moves.
    """
    _check_path(p1)
    _check_path(p2)
    if len(p1) != len(p2):
        raise EndpointMismatch("paths have different lengths")
    if not p1:
        return True
    if (alpha_key(p1[0].source) != alpha_key(p2[0].source)
            or alpha_key(p1[-1].target) != alpha_key(p2[-1].target)):
        raise EndpointMismatch("paths have different endpoints")

    def signature(path: Path) -> tuple[int, ...]:
        return tuple(e.label for e in path)

    goal = signature(p2)
    seen = {signature(p1)}
    frontier = [p1]
    while frontier:
        nxt = []
        for path in frontier:
            if signature(path) == goal:
                return True
            for variant in _interchanges(path):
                sig = signature(variant)
                if sig not in seen:
                    seen.add(sig)
                    nxt.append(variant)
        frontier = nxt
    return False
