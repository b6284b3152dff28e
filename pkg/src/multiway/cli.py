"""Command-line surface over the rewriting and lambda engines.

Artifacts go to stdout (or ``--output``), diagnostics to stderr.  Exit
codes: 0 success, 2 unparseable input, 3 dangling edges, 4 bad match
index, 5 term not good without ``--full``, 6 state cap exceeded.
"""

from __future__ import annotations

import json
import os
import sys

import click

from . import dpo, fulllambda, lam
from .hypergraph import (
    HypergraphError,
    InvalidJson,
    canonical_form,
    hypergraph_from_json,
    hypergraph_to_json,
    morphism_to_json,
    render_id,
)

EXIT_PARSE = 2
EXIT_DANGLING = 3
EXIT_BAD_INDEX = 4
EXIT_NOT_GOOD = 5
EXIT_CAP = 6


def _fail(code: int, message: str) -> None:
    click.echo(message, err=True)
    sys.exit(code)


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w") as handle:
            handle.write(text)
    else:
        click.echo(text, nl=False)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _dot(name: str, nodes: list[tuple[str, str]],
         edges: list[tuple[str, str, str | None]]) -> str:
    lines = [f"digraph {name} {{"]
    for node_id, label in nodes:
        lines.append(f'  {node_id} [label="{_dot_escape(label)}"];')
    for src, dst, label in edges:
        if label is None:
            lines.append(f"  {src} -> {dst};")
        else:
            lines.append(f'  {src} -> {dst} [label="{_dot_escape(label)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _load_json_file(path: str):
    try:
        with open(path) as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(EXIT_PARSE, f"cannot read {path}: {exc}")


def _load_rule(path: str) -> dpo.RewriteRule:
    try:
        return dpo.rule_from_json(_load_json_file(path))
    except (InvalidJson, HypergraphError, dpo.DpoError) as exc:
        _fail(EXIT_PARSE, f"bad rule {path}: {exc}")


def _load_host(path: str):
    try:
        return hypergraph_from_json(_load_json_file(path))
    except InvalidJson as exc:
        _fail(EXIT_PARSE, f"bad hypergraph {path}: {exc}")


def _read_term_argument(value: str) -> str:
    if os.path.exists(value):
        try:
            with open(value) as handle:
                return handle.read()
        except OSError as exc:
            _fail(EXIT_PARSE, f"cannot read {value}: {exc}")
    return value


format_option = click.option("--format", "fmt", type=click.Choice(["json", "dot"]),
                             default="json", show_default=True, help="Output format.")
output_option = click.option("--output", type=click.Path(), default=None,
                             help="Write the artifact to a file instead of stdout.")
max_states_option = click.option("--max-states", type=int, default=100000,
                                 show_default=True, help="State cap for enumeration.")
max_steps_option = click.option("--max-steps", type=int, default=None,
                                help="Depth cap for enumeration (default: unlimited).")
full_option = click.option("--full", is_flag=True,
                           help="Use the fully labelled calculus engine.")


@click.group()
def main() -> None:
    """Hypergraph rewriting and lambda-calculus causal analysis."""


@main.group()
def hg() -> None:
    """Double-pushout rewriting over directed multihypergraphs."""


@hg.command("matches")
@click.argument("rule_file", type=click.Path(exists=True))
@click.argument("host_file", type=click.Path(exists=True))
@output_option
def hg_matches(rule_file: str, host_file: str, output: str | None) -> None:
    """List every match of the rule's left-hand side in the host."""
    rule = _load_rule(rule_file)
    host = _load_host(host_file)
    matches = dpo.find_matches(rule, host)
    payload = {"matches": [morphism_to_json(m.m) for m in matches],
               "dangling_free": [dpo.no_dangling_edges(m) for m in matches]}
    _emit(_dump_json(payload), output)


@hg.command("apply")
@click.argument("rule_file", type=click.Path(exists=True))
@click.argument("host_file", type=click.Path(exists=True))
@click.option("--match-index", type=int, default=0, show_default=True,
              help="Which match (in enumeration order) to apply.")
@format_option
@output_option
def hg_apply(rule_file: str, host_file: str, match_index: int, fmt: str,
             output: str | None) -> None:
    """Apply the rule at one match and print the resulting event."""
    rule = _load_rule(rule_file)
    host = _load_host(host_file)
    matches = dpo.find_matches(rule, host)
    if not 0 <= match_index < len(matches):
        _fail(EXIT_BAD_INDEX, f"match index {match_index} out of range "
                              f"(found {len(matches)} matches)")
    try:
        event = dpo.apply(matches[match_index])
    except dpo.DanglingEdges as exc:
        _fail(EXIT_DANGLING, f"dangling edges: {exc}")
    if fmt == "dot":
        graph = event.production
        order = {v: i for i, v in enumerate(graph.sorted_vertices())}
        nodes = [(f"s{i}", render_id(v)) for v, i in order.items()]
        edges = []
        for eid in graph.sorted_edges():
            tup = graph.edges[eid]
            for a, b in zip(tup, tup[1:]):
                edges.append((f"s{order[a]}", f"s{order[b]}", render_id(eid)))
        _emit(_dot("production", nodes, edges), output)
    else:
        _emit(_dump_json(dpo.event_to_json(event)), output)


@hg.command("step")
@click.argument("rule_files", nargs=-1, required=True,
                type=click.Path(exists=True))
@click.argument("host_file", type=click.Path(exists=True))
@output_option
def hg_step(rule_files: tuple[str, ...], host_file: str, output: str | None) -> None:
    """All transitions from the host's isomorphism class."""
    rules = [_load_rule(path) for path in rule_files]
    host = _load_host(host_file)
    transitions = dpo.step_all(rules, host)
    payload = {
        "source_class": hypergraph_to_json(canonical_form(host)),
        "transitions": [{
            "target_class": hypergraph_to_json(t.target_class),
            "match": morphism_to_json(t.event.match.m),
        } for t in transitions],
    }
    _emit(_dump_json(payload), output)


@hg.command("concurrency")
@click.argument("rule_files", nargs=-1, required=True,
                type=click.Path(exists=True))
@click.argument("host_file", type=click.Path(exists=True))
@output_option
def hg_concurrency(rule_files: tuple[str, ...], host_file: str,
                   output: str | None) -> None:
    """Pairwise happening-together and parallel-independence matrices."""
    rules = [_load_rule(path) for path in rule_files]
    host = _load_host(host_file)
    events = [(ri, mi, match)
              for ri, rule in enumerate(rules)
              for mi, match in enumerate(dpo.find_matches(rule, host))]
    together = [[dpo.can_happen_together(a[2], b[2]) for b in events] for a in events]
    independent = []
    for a in events:
        row = []
        for b in events:
            try:
                row.append(dpo.parallel_independent(a[2], b[2]))
            except dpo.DanglingEdges:
                row.append(None)
        independent.append(row)
    payload = {
        "events": [{"rule": ri, "match": mi} for ri, mi, _ in events],
        "together": together,
        "parallel_independent": independent,
    }
    _emit(_dump_json(payload), output)


@main.group(name="lam")
def lam_group() -> None:
    """Labelled lambda-calculus engines."""


def _parse_term(text: str) -> lam.Term:
    try:
        return lam.parse(text)
    except (lam.ParseError, lam.DuplicateLabel) as exc:
        _fail(EXIT_PARSE, f"cannot parse term: {exc}")


def _require_good(term: lam.Term) -> None:
    if not lam.is_good(term):
        _fail(EXIT_NOT_GOOD, "term is not good (a binder occurs twice); use --full")


@lam_group.command("multiway")
@click.argument("term_arg")
@full_option
@max_states_option
@max_steps_option
@format_option
@output_option
def lam_multiway(term_arg: str, full: bool, max_states: int,
                 max_steps: int | None, fmt: str, output: str | None) -> None:
    """Enumerate every reduction order of the term."""
    term = _parse_term(_read_term_argument(term_arg))
    if full:
        annotated = fulllambda.annotate(term)
        try:
            ms = fulllambda.multiway_full(annotated, max_states)
        except lam.StateCapExceeded as exc:
            _fail(EXIT_CAP, str(exc))
        states = ms.states
        ids = {fulllambda.alpha_key(s): f"s{i}" for i, s in enumerate(states)}
        node_rows = [(ids[fulllambda.alpha_key(s)], fulllambda.fullterm_to_text(s))
                     for s in states]
        edge_rows = [(ids[fulllambda.alpha_key(e.source)],
                      ids[fulllambda.alpha_key(e.target)],
                      fulllambda.label_text(e.event_label)
                      + ("" if e.var_label is None
                         else "," + fulllambda.label_text(e.var_label)))
                     for e in ms.transitions]
        if fmt == "dot":
            _emit(_dot("multiway", node_rows, edge_rows), output)
        else:
            payload = {
                "states": [{"id": nid, "term": text} for nid, text in node_rows],
                "transitions": [{"from": s, "to": t, "label": lbl}
                                for s, t, lbl in edge_rows],
            }
            _emit(_dump_json(payload), output)
        return
    _require_good(term)
    try:
        ms = lam.multiway(term, max_states, max_depth=max_steps)
    except lam.StateCapExceeded as exc:
        _fail(EXIT_CAP, str(exc))
    ids = {lam.alpha_key(s): f"s{i}" for i, s in enumerate(ms.states)}
    node_rows = [(ids[lam.alpha_key(s)], lam.to_text(s)) for s in ms.states]
    edge_rows = [(ids[lam.alpha_key(e.source)], ids[lam.alpha_key(e.target)],
                  str(e.label)) for e in ms.transitions]
    if fmt == "dot":
        _emit(_dot("multiway", node_rows, edge_rows), output)
    else:
        payload = {
            "states": [{"id": nid, "term": text} for nid, text in node_rows],
            "transitions": [{"from": s, "to": t, "label": int(lbl)}
                            for s, t, lbl in edge_rows],
            "normal_form": ids[lam.alpha_key(ms.normal_form())],
        }
        _emit(_dump_json(payload), output)


@lam_group.command("causal")
@click.argument("term_arg")
@full_option
@max_states_option
@format_option
@output_option
def lam_causal(term_arg: str, full: bool, max_states: int, fmt: str,
               output: str | None) -> None:
    """Causal DAG over event labels, plus the proper-time table."""
    term = _parse_term(_read_term_argument(term_arg))
    if full:
        annotated = fulllambda.annotate(term)
        try:
            ms = fulllambda.multiway_full(annotated, max_states)
        except lam.StateCapExceeded as exc:
            _fail(EXIT_CAP, str(exc))
        labels = sorted({e.event_label for e in ms.transitions},
                        key=fulllambda.label_text)
        relation = []
        for a in labels:
            for b in labels:
                if a != b and fulllambda._precedes_on_all_paths(
                        ms,
                        lambda e, a=a: fulllambda._label_descends(e.event_label, a),
                        lambda e, b=b: fulllambda._label_descends(e.event_label, b)):
                    relation.append((a, b))
        if fmt == "dot":
            ids = {fulllambda.label_text(l): f"s{i}" for i, l in enumerate(labels)}
            nodes = [(ids[fulllambda.label_text(l)], fulllambda.label_text(l))
                     for l in labels]
            edges = [(ids[fulllambda.label_text(a)], ids[fulllambda.label_text(b)], None)
                     for a, b in relation]
            _emit(_dot("causal", nodes, edges), output)
        else:
            payload = {
                "events": [fulllambda.label_text(l) for l in labels],
                "relation": [[fulllambda.label_text(a), fulllambda.label_text(b)]
                             for a, b in relation],
            }
            _emit(_dump_json(payload), output)
        return
    _require_good(term)
    try:
        ms = lam.multiway(term, max_states)
    except lam.StateCapExceeded as exc:
        _fail(EXIT_CAP, str(exc))
    graph = lam.causal_relation(ms)
    relation = sorted(graph.relation)
    taus = [{"from": n, "to": m, "tau": lam.proper_time(ms, n, m)}
            for n, m in relation]
    if fmt == "dot":
        labels = sorted(graph.events)
        ids = {l: f"s{i}" for i, l in enumerate(labels)}
        nodes = [(ids[l], str(l)) for l in labels]
        edges = [(ids[a], ids[b], None) for a, b in relation]
        _emit(_dot("causal", nodes, edges), output)
    else:
        payload = {
            "events": sorted(graph.events),
            "relation": [[a, b] for a, b in relation],
            "proper_time": taus,
        }
        _emit(_dump_json(payload), output)


@lam_group.command("proper-time")
@click.argument("term_arg")
@max_states_option
@output_option
def lam_proper_time(term_arg: str, max_states: int, output: str | None) -> None:
    """Proper-time table for every causally ordered pair of events."""
    term = _parse_term(_read_term_argument(term_arg))
    _require_good(term)
    try:
        ms = lam.multiway(term, max_states)
    except lam.StateCapExceeded as exc:
        _fail(EXIT_CAP, str(exc))
    graph = lam.causal_relation(ms)
    taus = [{"from": n, "to": m, "tau": lam.proper_time(ms, n, m)}
            for n, m in sorted(graph.relation)]
    _emit(_dump_json({"proper_time": taus}), output)


@lam_group.command("reduce")
@click.argument("term_arg")
@full_option
@output_option
def lam_reduce(term_arg: str, full: bool, output: str | None) -> None:
    """One-step reduction events out of the term."""
    term = _parse_term(_read_term_argument(term_arg))
    if full:
        annotated = fulllambda.annotate(term)
        events = fulllambda.reduce_step_full(annotated)
        payload = {"events": [fulllambda.event_to_json(e) for e in events]}
        _emit(_dump_json(payload), output)
        return
    _require_good(term)
    events = lam.reduce_step(term)
    payload = {"events": [{"label": e.label, "target": lam.to_text(e.target)}
                          for e in events]}
    _emit(_dump_json(payload), output)


if __name__ == "__main__":
    main()
