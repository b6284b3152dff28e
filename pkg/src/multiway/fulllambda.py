"""Fully labelled lambda-calculus with event and occurrence histories.

Beyond the good fragment, duplicated subterms must stay distinguishable:
every application carries an event label and every variable occurrence a
variable label, and both accumulate a history of ``(event, occurrence)``
pairs each time a substitution copies them.  Reduction is refined to one
substitution at a time; the classic relation performs all substitutions
of a redex at once but records the fine steps it bundles.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from . import lam
from .hypergraph import InvalidJson, _expect_keys
from .lam import StateCapExceeded


class FullLamError(Exception):
    """Base class for errors raised by this module."""


class LabelNotFound(FullLamError):
    """A label cannot be projected back into the event's source term."""


class NotSuccessive(FullLamError):
    """The two events are not consecutive."""


class BadIndices(FullLamError):
    """Event indices do not address a classic path segment."""


@dataclass(frozen=True)
class EventLabel:
    """An application label: a base symbol plus its copy history."""

    base: int
    history: tuple = ()


@dataclass(frozen=True)
class VarLabel:
    """An occurrence label: a base symbol plus its copy history."""

    base: int
    history: tuple = ()


@dataclass(frozen=True)
class FullVar:
    name: str
    label: VarLabel


@dataclass(frozen=True)
class FullAbs:
    binder: str
    body: "FullTerm"
    count: int  # free occurrences of the binder in the body


@dataclass(frozen=True)
class FullApp:
    fun: "FullTerm"
    arg: "FullTerm"
    label: EventLabel


FullTerm = Union[FullVar, FullAbs, FullApp]


@dataclass(frozen=True)
class FullEvent:
    """A one-substitution reduction step.

    ``var_label`` is the substituted occurrence; it is ``None`` for the
    discard rule (a redex whose binder has no free occurrence).
    """

    source: FullTerm
    target: FullTerm
    event_label: EventLabel
    var_label: Optional[VarLabel]


@dataclass(frozen=True)
class ClassicStep:
    """A classic reduction step plus the fine substitutions it bundles."""

    source: FullTerm
    target: FullTerm
    event_label: EventLabel
    substitutions: tuple[VarLabel, ...]


# ---------------------------------------------------------------------------
# Structure helpers

def event_labels(term: FullTerm) -> frozenset[EventLabel]:
    if isinstance(term, FullVar):
        return frozenset()
    if isinstance(term, FullAbs):
        return event_labels(term.body)
    return event_labels(term.fun) | event_labels(term.arg) | {term.label}


def free_var_labels(term: FullTerm, name: str) -> list[VarLabel]:
    """Labels of the free occurrences of ``name``, left to right."""
    if isinstance(term, FullVar):
        return [term.label] if term.name == name else []
    if isinstance(term, FullAbs):
        return [] if term.binder == name else free_var_labels(term.body, name)
    return free_var_labels(term.fun, name) + free_var_labels(term.arg, name)


def free_count(term: FullTerm, name: str) -> int:
    return len(free_var_labels(term, name))


def free_names(term: FullTerm) -> frozenset[str]:
    if isinstance(term, FullVar):
        return frozenset((term.name,))
    if isinstance(term, FullAbs):
        return free_names(term.body) - {term.binder}
    return free_names(term.fun) | free_names(term.arg)


def make_abs(binder: str, body: FullTerm) -> FullAbs:
    """Abstraction with its occurrence count recomputed from the body."""
    return FullAbs(binder, body, free_count(body, binder))


def alpha_key(term: FullTerm, _env: tuple = ()):
    """Canonical key up to bound-variable renaming; labels stay significant."""
    if isinstance(term, FullVar):
        for depth, binder in enumerate(reversed(_env)):
            if binder == term.name:
                return ("b", depth, term.label)
        return ("f", term.name, term.label)
    if isinstance(term, FullAbs):
        return ("l", term.count, alpha_key(term.body, _env + (term.binder,)))
    return ("a", term.label, alpha_key(term.fun, _env), alpha_key(term.arg, _env))


def append_history(term: FullTerm, l: EventLabel, m: VarLabel) -> FullTerm:
    """Append ``(l, m)`` to the history of every label in the term."""
    entry = (l, m)

    def go(t: FullTerm) -> FullTerm:
        if isinstance(t, FullVar):
            return FullVar(t.name, VarLabel(t.label.base, t.label.history + (entry,)))
        if isinstance(t, FullAbs):
            return FullAbs(t.binder, go(t.body), t.count)
        return FullApp(go(t.fun), go(t.arg),
                       EventLabel(t.label.base, t.label.history + (entry,)))

    return go(term)


def annotate(term) -> FullTerm:
    """Attach fresh labels to a plain term (or to source text).

    Application labels reuse the plain term's labels as bases with empty
    histories; each variable name's occurrences are numbered 1, 2, ...
    left to right.
    """
    if isinstance(term, str):
        term = lam.parse(term)
    counters: dict[str, int] = {}

    def go(t: lam.Term) -> FullTerm:
        if isinstance(t, lam.Var):
            counters[t.name] = counters.get(t.name, 0) + 1
            return FullVar(t.name, VarLabel(counters[t.name]))
        if isinstance(t, lam.Abs):
            return make_abs(t.binder, go(t.body))
        fun = go(t.fun)
        arg = go(t.arg)
        return FullApp(fun, arg, EventLabel(t.label))

    return go(term)


# ---------------------------------------------------------------------------
# Substitution machinery

def _fresh(base: str, avoid: frozenset[str]) -> str:
    candidate = base + "'"
    while candidate in avoid:
        candidate += "'"
    return candidate


def rename_free(term: FullTerm, old: str, new: str) -> FullTerm:
    """Rename free occurrences of ``old`` to ``new``, keeping their labels."""
    if isinstance(term, FullVar):
        return FullVar(new, term.label) if term.name == old else term
    if isinstance(term, FullApp):
        return FullApp(rename_free(term.fun, old, new),
                       rename_free(term.arg, old, new), term.label)
    if term.binder == old:
        return term
    if term.binder == new and free_count(term.body, old) > 0:
        fresh = _fresh(new, free_names(term.body) | {old, new})
        body = rename_free(term.body, new, fresh)
        return make_abs(fresh, rename_free(body, old, new))
    return make_abs(term.binder, rename_free(term.body, old, new))


def substitute_at(term: FullTerm, name: str, replacement: FullTerm,
                  occurrence: VarLabel) -> FullTerm:
    """Replace the free occurrence of ``name`` labelled ``occurrence``."""
    rep_fv = free_names(replacement)

    def go(t: FullTerm) -> FullTerm:
        if isinstance(t, FullVar):
            if t.name == name and t.label == occurrence:
                return replacement
            return t
        if isinstance(t, FullApp):
            return FullApp(go(t.fun), go(t.arg), t.label)
        if t.binder == name:
            return t
        if occurrence not in free_var_labels(t.body, name):
            return t
        if t.binder in rep_fv:
            fresh = _fresh(t.binder, free_names(t.body) | rep_fv | {name})
            body = rename_free(t.body, t.binder, fresh)
            return make_abs(fresh, go(body))
        return make_abs(t.binder, go(t.body))

    return go(term)


def _prepare_redex(abstraction: FullAbs, argument: FullTerm) -> FullAbs:
    """Rename the binder when the argument would be captured by it."""
    if abstraction.binder in free_names(argument):
        fresh = _fresh(abstraction.binder,
                       free_names(abstraction.body) | free_names(argument))
        return make_abs(fresh, rename_free(abstraction.body, abstraction.binder, fresh))
    return abstraction


# ---------------------------------------------------------------------------
# Reduction

def _fine_reducts(term: FullTerm) -> list[tuple[EventLabel, Optional[VarLabel], FullTerm]]:
    out: list[tuple[EventLabel, Optional[VarLabel], FullTerm]] = []
    if isinstance(term, FullVar):
        return out
    if isinstance(term, FullAbs):
        return [(l, m, make_abs(term.binder, body))
                for l, m, body in _fine_reducts(term.body)]
    if isinstance(term.fun, FullAbs):
        redex = _prepare_redex(term.fun, term.arg)
        label = term.label
        if redex.count == 0:
            out.append((label, None, redex.body))
        else:
            for m in free_var_labels(redex.body, redex.binder):
                copy = append_history(term.arg, label, m)
                body = substitute_at(redex.body, redex.binder, copy, m)
                if redex.count == 1:
                    out.append((label, m, body))
                else:
                    out.append((label, m, FullApp(make_abs(redex.binder, body),
                                                  term.arg, label)))
    out.extend((l, m, FullApp(fun, term.arg, term.label))
               for l, m, fun in _fine_reducts(term.fun))
    out.extend((l, m, FullApp(term.fun, arg, term.label))
               for l, m, arg in _fine_reducts(term.arg))
    return out


def reduce_step_full(term: FullTerm) -> list[FullEvent]:
    """All one-substitution reduction events, leftmost-outermost first."""
    return [FullEvent(term, target, l, m) for l, m, target in _fine_reducts(term)]


def _classic_reducts(term: FullTerm) -> list[tuple[EventLabel, tuple[VarLabel, ...], FullTerm]]:
    out: list[tuple[EventLabel, tuple[VarLabel, ...], FullTerm]] = []
    if isinstance(term, FullVar):
        return out
    if isinstance(term, FullAbs):
        return [(l, ms, make_abs(term.binder, body))
                for l, ms, body in _classic_reducts(term.body)]
    if isinstance(term.fun, FullAbs):
        redex = _prepare_redex(term.fun, term.arg)
        label = term.label
        occurrences = tuple(free_var_labels(redex.body, redex.binder))
        body = redex.body
        for m in occurrences:
            body = substitute_at(body, redex.binder, append_history(term.arg, label, m), m)
        out.append((label, occurrences, body))
    out.extend((l, ms, FullApp(fun, term.arg, term.label))
               for l, ms, fun in _classic_reducts(term.fun))
    out.extend((l, ms, FullApp(term.fun, arg, term.label))
               for l, ms, arg in _classic_reducts(term.arg))
    return out


def reduce_step_classic(term: FullTerm) -> list[ClassicStep]:
    """All classic (simultaneous-substitution) steps out of the term."""
    return [ClassicStep(term, target, l, ms) for l, ms, target in _classic_reducts(term)]


# ---------------------------------------------------------------------------
# Multiway systems

@dataclass(eq=False)
class FullMultiway:
    """Reachable states and transitions under a chosen reduction relation."""

    root: FullTerm
    states: tuple[FullTerm, ...]
    transitions: tuple

    def __post_init__(self):
        self._out: dict = {alpha_key(s): [] for s in self.states}
        for event in self.transitions:
            self._out[alpha_key(event.source)].append(event)
        self._paths_cache = None

    def outgoing(self, state: FullTerm) -> list:
        return list(self._out[alpha_key(state)])

    def maximal_paths(self) -> tuple:
        if self._paths_cache is None:
            paths = []

            def walk(state, prefix):
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


def _explore(term: FullTerm, step, max_states: int) -> FullMultiway:
    reps = {alpha_key(term): term}
    order = [term]
    transitions = []
    queue = deque([term])
    while queue:
        state = queue.popleft()
        for event in step(state):
            key = alpha_key(event.target)
            if key not in reps:
                if len(reps) >= max_states:
                    raise StateCapExceeded(f"state cap {max_states} exceeded")
                reps[key] = event.target
                order.append(event.target)
                queue.append(event.target)
            if isinstance(event, ClassicStep):
                transitions.append(ClassicStep(state, reps[key], event.event_label,
                                               event.substitutions))
            else:
                transitions.append(FullEvent(state, reps[key], event.event_label,
                                             event.var_label))
    return FullMultiway(term, tuple(order), tuple(transitions))


def multiway_full(term: FullTerm, max_states: int = 100000) -> FullMultiway:
    """All states reachable by one-substitution reduction."""
    return _explore(term, reduce_step_full, max_states)


def multiway_classic(term: FullTerm, max_states: int = 100000) -> FullMultiway:
    """All states reachable by classic reduction."""
    return _explore(term, reduce_step_classic, max_states)


# ---------------------------------------------------------------------------
# Causality

def project_label(e1: FullEvent, label: EventLabel) -> EventLabel:
    """Trace an application label of ``e1.target`` back into ``e1.source``.

    Labels already present in the source are fixed; labels created by the
    event's copy lose their final history entry.
    """
    source_labels = event_labels(e1.source)
    if label in source_labels:
        return label
    if label not in event_labels(e1.target):
        raise LabelNotFound(f"{label!r} does not label an application of e1.target")
    if label.history and e1.var_label is not None \
            and label.history[-1] == (e1.event_label, e1.var_label):
        stripped = EventLabel(label.base, label.history[:-1])
        if stripped in source_labels:
            return stripped
    raise LabelNotFound(f"{label!r} cannot be projected into e1.source")


def _find_app(term: FullTerm, label: EventLabel) -> Optional[FullApp]:
    if isinstance(term, FullVar):
        return None
    if isinstance(term, FullAbs):
        return _find_app(term.body, label)
    if term.label == label:
        return term
    return _find_app(term.fun, label) or _find_app(term.arg, label)


def causal_2_full(e1: FullEvent, e2: FullEvent) -> bool:
    """Successive-event causality in the full calculus via label projection."""
    if alpha_key(e1.target) != alpha_key(e2.source):
        raise NotSuccessive("e1.target and e2.source differ")
    projected = project_label(e1, e2.event_label)
    app = _find_app(e1.source, projected)
    if app is None:
        raise LabelNotFound(f"{projected!r} does not label an application of e1.source")
    return not isinstance(app.fun, FullAbs)


def _label_descends(seen: EventLabel, query: EventLabel) -> bool:
    return (seen.base == query.base
            and seen.history[:len(query.history)] == query.history)


def _var_descends(seen: Optional[VarLabel], query: Optional[VarLabel]) -> bool:
    if query is None or seen is None:
        return query is None and seen is None
    return (seen.base == query.base
            and seen.history[:len(query.history)] == query.history)


def _precedes_on_all_paths(ms: FullMultiway, match1, match2) -> bool:
    """Every event matching ``match1`` precedes every event matching ``match2``
    on every maximal path where both kinds occur, and they co-occur somewhere."""
    seen_both = False
    for path in ms.maximal_paths():
        pos1 = [i for i, e in enumerate(path) if match1(e)]
        pos2 = [i for i, e in enumerate(path) if match2(e)]
        if not pos1 or not pos2:
            continue
        if max(pos1) >= min(pos2):
            return False
        seen_both = True
    return seen_both


def causal_all_paths_full(term: FullTerm, l1: EventLabel, l2: EventLabel,
                          max_states: int = 100000) -> Optional[bool]:
    """Bounded all-paths causality between event labels, up to copy ancestry.

    Builds the full multiway system and asks whether descendants of
    ``l1`` always fire before descendants of ``l2``.  Returns ``None``
    when the state cap is exceeded.
    """
    try:
        ms = multiway_full(term, max_states)
    except StateCapExceeded:
        return None
    if l1 == l2:
        return False
    return _precedes_on_all_paths(
        ms,
        lambda e: _label_descends(e.event_label, l1),
        lambda e: _label_descends(e.event_label, l2),
    )


def _fine_event_for(term: FullTerm, label: EventLabel,
                    occurrence: Optional[VarLabel]) -> FullEvent:
    for event in reduce_step_full(term):
        if event.event_label == label and event.var_label == occurrence:
            return event
    raise BadIndices(f"no fine step ({label!r}, {occurrence!r}) from the given state")


def induced_causal(path: Sequence[ClassicStep], i: int, j: int,
                   budget: int, max_states: int = 100000) -> Optional[bool]:
    """Does classic event ``i`` cause classic event ``j`` on this path?

    Every refinement of the segment (each classic step expanded into its
    one-substitution steps, in every order) is enumerated and validated;
    the answer is True iff each refinement contains a fine event of the
    first bundle preceding, on all fine paths, every fine event of the
    last bundle.  Exceeding ``budget`` refinements (or the state cap)
    yields ``None``.
    """
    if not (0 <= i < j < len(path)):
        raise BadIndices(f"need 0 <= i < j < {len(path)}")
    for prev, nxt in zip(path, path[1:]):
        if alpha_key(prev.target) != alpha_key(nxt.source):
            raise BadIndices("classic steps do not chain")
    segment = list(path[i:j + 1])

    try:
        ms = multiway_full(segment[0].source, max_states)
    except StateCapExceeded:
        return None

    def bundle(step: ClassicStep) -> list[tuple[EventLabel, Optional[VarLabel]]]:
        if step.substitutions:
            return [(step.event_label, m) for m in step.substitutions]
        return [(step.event_label, None)]

    first_bundle = bundle(segment[0])
    last_bundle = bundle(segment[-1])

    memo: dict = {}

    def precedes(key1, key2) -> bool:
        if (key1, key2) not in memo:
            l1, m1 = key1
            l2, m2 = key2
            memo[(key1, key2)] = _precedes_on_all_paths(
                ms,
                lambda e: (_label_descends(e.event_label, l1)
                           and _var_descends(e.var_label, m1)),
                lambda e: (_label_descends(e.event_label, l2)
                           and _var_descends(e.var_label, m2)),
            )
        return memo[(key1, key2)]

    orderings = [list(itertools.permutations(bundle(step))) for step in segment]
    enumerated = 0
    verdict = True
    for refinement in itertools.product(*orderings):
        enumerated += 1
        if enumerated > budget:
            return None
        state = segment[0].source
        for step, order in zip(segment, refinement):
            for label, occurrence in order:
                state = _fine_event_for(state, label, occurrence).target
            if alpha_key(state) != alpha_key(step.target):
                raise BadIndices("refinement does not reproduce the classic step")
        if not any(all(precedes(k1, k2) for k2 in last_bundle) for k1 in first_bundle):
            verdict = False
    return verdict


# ---------------------------------------------------------------------------
# JSON wire format

def _event_label_to_json(label: EventLabel) -> dict:
    return {"base": label.base,
            "history": [[_event_label_to_json(l), _var_label_to_json(m)]
                        for l, m in label.history]}


def _var_label_to_json(label: VarLabel) -> dict:
    return {"base": label.base,
            "history": [[_event_label_to_json(l), _var_label_to_json(m)]
                        for l, m in label.history]}


def _label_history_from_json(obj, what: str) -> tuple:
    if not isinstance(obj, list):
        raise InvalidJson(f"{what}: history must be a list")
    out = []
    for entry in obj:
        if not isinstance(entry, list) or len(entry) != 2:
            raise InvalidJson(f"{what}: history entries must be pairs")
        out.append((_event_label_from_json(entry[0]), _var_label_from_json(entry[1])))
    return tuple(out)


def _event_label_from_json(obj) -> EventLabel:
    _expect_keys(obj, {"base", "history"}, "event label")
    if not isinstance(obj["base"], int):
        raise InvalidJson("event label: base must be an integer")
    return EventLabel(obj["base"], _label_history_from_json(obj["history"], "event label"))


def _var_label_from_json(obj) -> VarLabel:
    _expect_keys(obj, {"base", "history"}, "variable label")
    if not isinstance(obj["base"], int):
        raise InvalidJson("variable label: base must be an integer")
    return VarLabel(obj["base"], _label_history_from_json(obj["history"], "variable label"))


def fullterm_to_json(term: FullTerm) -> dict:
    if isinstance(term, FullVar):
        return {"var": {"name": term.name, "label": _var_label_to_json(term.label)}}
    if isinstance(term, FullAbs):
        return {"abs": {"binder": term.binder, "count": term.count,
                        "body": fullterm_to_json(term.body)}}
    return {"app": {"label": _event_label_to_json(term.label),
                    "fun": fullterm_to_json(term.fun),
                    "arg": fullterm_to_json(term.arg)}}


def fullterm_from_json(obj) -> FullTerm:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise InvalidJson("term: expected exactly one of var/abs/app")
    kind, payload = next(iter(obj.items()))
    if kind == "var":
        _expect_keys(payload, {"name", "label"}, "var")
        return FullVar(payload["name"], _var_label_from_json(payload["label"]))
    if kind == "abs":
        _expect_keys(payload, {"binder", "count", "body"}, "abs")
        body = fullterm_from_json(payload["body"])
        if payload["count"] != free_count(body, payload["binder"]):
            raise InvalidJson("abs: count disagrees with the body")
        return FullAbs(payload["binder"], body, payload["count"])
    if kind == "app":
        _expect_keys(payload, {"label", "fun", "arg"}, "app")
        return FullApp(fullterm_from_json(payload["fun"]),
                       fullterm_from_json(payload["arg"]),
                       _event_label_from_json(payload["label"]))
    raise InvalidJson(f"term: unknown node kind {kind!r}")


def event_to_json(event: FullEvent) -> dict:
    return {
        "event_label": _event_label_to_json(event.event_label),
        "var_label": None if event.var_label is None else _var_label_to_json(event.var_label),
        "source": fullterm_to_json(event.source),
        "target": fullterm_to_json(event.target),
    }


# ---------------------------------------------------------------------------
# Display

def label_text(label: Union[EventLabel, VarLabel]) -> str:
    """Compact deterministic rendering of a label for graph output."""
    if not label.history:
        return str(label.base)
    entries = ",".join(f"({label_text(l)},{label_text(m)})" for l, m in label.history)
    return f"{label.base}|{entries}"


def fullterm_to_text(term: FullTerm) -> str:
    """Readable rendering with labels; for display only."""
    if isinstance(term, FullVar):
        return f"{term.name}[{label_text(term.label)}]"
    if isinstance(term, FullAbs):
        return f"\\{term.binder}. {fullterm_to_text(term.body)}"
    fun = fullterm_to_text(term.fun)
    if isinstance(term.fun, FullAbs):
        fun = f"({fun})"
    arg = fullterm_to_text(term.arg)
    if isinstance(term.arg, (FullAbs, FullApp)):
        arg = f"({arg})"
    return f"{fun} @{label_text(term.label)} {arg}"
