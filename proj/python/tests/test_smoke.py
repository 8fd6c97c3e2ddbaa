import pytest

import gloss


@pytest.fixture
def graph():
    return gloss.instantiate_template("customer-service")


def test_templates_listed():
    assert "customer-service" in gloss.template_ids()
    with pytest.raises(gloss.GlossError) as info:
        gloss.instantiate_template("nope")
    assert info.value.code == "UnknownTemplate"


def test_template_is_valid(graph):
    assert [d for d in gloss.validate(graph) if d["severity"] == "error"] == []
    assert gloss.canonical(graph) == graph


def test_dangling_edge_reported(graph):
    graph["edges"][0]["to"] = "ghost"
    codes = [d["code"] for d in gloss.validate(graph)]
    assert "E002" in codes


def test_dsl_round_trip(graph):
    parsed, diagnostics = gloss.parse_dsl(gloss.render_dsl(graph))
    assert diagnostics == []
    assert gloss.render_dsl(parsed) == gloss.render_dsl(graph)


def test_dsl_syntax_error():
    parsed, diagnostics = gloss.parse_dsl("graph {")
    assert parsed is None
    assert diagnostics and diagnostics[0]["line"] == 1


def test_jaccard_worked_example():
    a, b = "I am so sorry about the wait", "I am sorry for the inconvenience"
    assert len(gloss.word_set(a)) == 7
    assert gloss.jaccard(a, b) == pytest.approx(4 / 9, abs=0)


def test_classify_ranks_best_first(graph):
    ranked = gloss.classify("I am so sorry about the wait", graph, "n0")
    assert ranked[0] == ("e1", 4 / 9)


def test_session_flow(graph):
    session, opening = gloss.start_session(graph, session_id="s-1")
    assert opening == next(n["avatar_utterance"] for n in graph["nodes"] if n["id"] == "n0")

    session, graph2, turn = gloss.submit_turn(session, graph, "I am sorry for the inconvenience")
    assert turn["decision"]["kind"] == "matched"
    assert session["current_node"] == "n1"
    assert graph2 == graph

    session, graph3, turn = gloss.submit_turn(session, graph2, "zxqv")
    assert turn["decision"]["kind"] == "generated"
    assert len(graph3["nodes"]) == len(graph["nodes"]) + 1

    report = gloss.session_report(session)
    assert report["turns_total"] == 2
    assert report["matched_count"] == 1
    assert report["generated_count"] == 1

    path = gloss.path_of(session, graph3)
    assert len(path) == 5 and path[0] == "n0"
    assert gloss.overlay_dot(graph3, session).count("penwidth=3") == 5

    cohort = gloss.cohort_summary(graph3, [session])
    assert cohort["session_count"] == 1

    ended = gloss.end_session(session)
    assert ended["status"] == "completed"
    with pytest.raises(gloss.GlossError) as info:
        gloss.submit_turn(ended, graph3, "hello")
    assert info.value.code == "SessionCompleted"


def test_generate_and_expand():
    g = gloss.generate_graph("refund dispute")
    assert all(n["provenance"] == "generated" for n in g["nodes"])
    grown = gloss.expand_node(g, g["start_node"], "add escalation")
    assert len(grown["nodes"]) > len(g["nodes"])


def test_render_dot_highlight(graph):
    dot = gloss.render_dot(graph, ["n0", "e1", "n1"])
    assert dot.startswith("digraph")
    assert dot.count("penwidth=3") == 3
