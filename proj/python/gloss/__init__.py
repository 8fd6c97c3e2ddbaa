"""Python front end for the GLOSS engine.

Graphs, sessions and reports are plain dicts shaped like their JSON
documents. Every call round-trips through the C++ core, so validation and
canonical ordering match the service and the CLI exactly.
"""

import json

from . import _gloss
from ._gloss import GlossError

__all__ = [
    "GlossError",
    "validate",
    "canonical",
    "new_graph",
    "parse_dsl",
    "render_dsl",
    "render_dot",
    "template_ids",
    "instantiate_template",
    "generate_graph",
    "expand_node",
    "word_set",
    "jaccard",
    "classify",
    "start_session",
    "submit_turn",
    "end_session",
    "path_of",
    "session_report",
    "cohort_summary",
    "overlay_dot",
]


def _dump(doc):
    return doc if isinstance(doc, str) else json.dumps(doc)


def _load(text):
    return json.loads(text)


def validate(graph):
    """List of diagnostics; an empty list means the graph is clean."""
    return _load(_gloss.validate(_dump(graph)))


def canonical(graph):
    return _load(_gloss.canonical_graph(_dump(graph)))


def new_graph(title, mode="flexible"):
    return _load(_gloss.new_graph(title, mode))


def parse_dsl(source):
    """Returns (graph or None, diagnostics)."""
    graph, diagnostics = _gloss.parse_dsl(source)
    return (_load(graph) if graph is not None else None), _load(diagnostics)


def render_dsl(graph):
    return _gloss.render_dsl(_dump(graph))


def render_dot(graph, path=None):
    return _gloss.render_dot(_dump(graph), None if path is None else json.dumps(list(path)))


def template_ids():
    return list(_gloss.template_ids())


def instantiate_template(template_id):
    return _load(_gloss.instantiate_template(template_id))


def generate_graph(prompt, provider="mock"):
    return _load(_gloss.generate_graph(prompt, provider))


def expand_node(graph, node_id, instruction, provider="mock"):
    return _load(_gloss.expand_node(_dump(graph), node_id, instruction, provider))


def word_set(text):
    return set(_gloss.word_set(text))


def jaccard(a, b):
    return _gloss.jaccard(a, b)


def classify(utterance, graph, node_id, provider="mock"):
    return _gloss.classify(utterance, _dump(graph), node_id, provider)


def start_session(graph, threshold=None, session_id=None):
    """Returns (session, opening_utterance)."""
    session, opening = _gloss.start_session(_dump(graph), threshold, session_id)
    return _load(session), opening


def submit_turn(session, graph, utterance, provider="mock"):
    """Returns (session, graph, turn). The graph grows after a generated branch."""
    s, g, t = _gloss.submit_turn(_dump(session), _dump(graph), utterance, provider)
    return _load(s), _load(g), _load(t)


def end_session(session):
    return _load(_gloss.end_session(_dump(session)))


def path_of(session, graph):
    return list(_gloss.path_of(_dump(session), _dump(graph)))


def session_report(session):
    return _load(_gloss.session_report(_dump(session)))


def cohort_summary(graph, sessions):
    return _load(_gloss.cohort_summary(_dump(graph), [_dump(s) for s in sessions]))


def overlay_dot(graph, session):
    return _gloss.overlay_dot(_dump(graph), _dump(session))
