#include <gtest/gtest.h>

#include "gloss/analysis.hpp"
#include "gloss/error.hpp"
#include "gloss/session.hpp"
#include "support/fixtures.hpp"

using namespace gloss;

namespace {

template <class F>
Error caught(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected gloss::Error";
  return Error(Errc::IoFailure, "none");
}

NarrativeGraph strict(NarrativeGraph g) { return apply_mutation(g, mutation::SetMode{DialogueMode::Strict}); }

struct Run {
  Session session;
  NarrativeGraph graph;
};

Run play(NarrativeGraph graph, Provider& provider, const std::vector<std::string>& script, Clock clock,
         SessionOptions options = {}) {
  options.clock = clock;
  if (!options.id) options.id = SessionId("s-fixed");
  auto [session, opening] = start_session(graph, options);
  for (const auto& u : script) {
    if (session.status == SessionStatus::Completed) break;
    auto r = submit_turn(session, graph, provider, u, clock);
    session = std::move(r.session);
    graph = std::move(r.graph);
  }
  return {session, graph};
}

}  // namespace

TEST(StartSession, FixtureOpensAtStart) {
  auto g = fx::customer_service();
  auto [s, opening] = start_session(g);
  EXPECT_EQ(s.current_node, NodeId("n0"));
  EXPECT_EQ(opening, g.nodes.at(NodeId("n0")).avatar_utterance);
  EXPECT_EQ(s.status, SessionStatus::Active);
  EXPECT_EQ(s.match_threshold, 0.5);
  EXPECT_EQ(s.graph_version_at_start, g.version);
  EXPECT_TRUE(s.transcript.empty());
}

TEST(StartSession, Preconditions) {
  auto g = fx::customer_service();
  auto broken = g;
  broken.edges[0].to = NodeId("nowhere");
  EXPECT_EQ(caught([&] { start_session(broken); }).code(), Errc::InvalidGraph);
  EXPECT_EQ(caught([&] { start_session(new_graph("t", DialogueMode::Strict)); }).code(), Errc::EmptyGraph);
  EXPECT_EQ(caught([&] { start_session(g, {.threshold = 1.5}); }).code(), Errc::InvalidArgument);
  EXPECT_EQ(caught([&] { start_session(g, {.threshold = -0.1}); }).code(), Errc::InvalidArgument);
  EXPECT_EQ(start_session(g, {.threshold = 1.0}).session.match_threshold, 1.0);
}

TEST(ResolveMatch, Rules) {
  EXPECT_EQ(resolve_match({{EdgeId("e1"), 0.8}, {EdgeId("e2"), 0.3}}, 0.5), Resolution(IntentMatch{EdgeId("e1"), 0.8}));
  EXPECT_EQ(resolve_match({{EdgeId("e1"), 0.4}}, 0.5), Resolution(NoMatch{0.4}));
  EXPECT_EQ(resolve_match({{EdgeId("e1"), 0.6}, {EdgeId("e2"), 0.6}}, 0.5), Resolution(IntentMatch{EdgeId("e1"), 0.6}));
  EXPECT_EQ(resolve_match({}, 0.5), Resolution(NoMatch{0.0}));
  EXPECT_EQ(resolve_match({{EdgeId("e1"), 0.5}}, 0.5), Resolution(IntentMatch{EdgeId("e1"), 0.5}));
}

TEST(SubmitTurn, ExampleUtteranceMatches) {
  MockProvider mock;
  auto g = fx::customer_service();
  auto s = start_session(g).session;
  auto r = submit_turn(s, g, mock, "I am sorry for the inconvenience");
  EXPECT_EQ(r.turn.decision, MatchDecision(decision::Matched{EdgeId("e1"), 1.0, "patient"}));
  EXPECT_EQ(r.session.current_node, NodeId("n1"));
  EXPECT_EQ(r.turn.avatar_reply, g.nodes.at(NodeId("n1")).avatar_utterance);
  EXPECT_EQ(r.turn.feedback, "Mock feedback for intent patient");
  EXPECT_EQ(r.graph, g);
  EXPECT_EQ(r.session.status, SessionStatus::Active);
  // inputs untouched
  EXPECT_TRUE(s.transcript.empty());
}

TEST(SubmitTurn, FlexibleNoMatchGeneratesBranch) {
  MockProvider mock;
  auto g = fx::customer_service();
  auto s = start_session(g).session;
  auto r = submit_turn(s, g, mock, "zxqv");
  const auto* gen = std::get_if<decision::GeneratedBranch>(&r.turn.decision);
  ASSERT_NE(gen, nullptr);
  EXPECT_EQ(gen->intent_label, "gen-001");
  EXPECT_EQ(r.graph.nodes.size(), g.nodes.size() + 1);
  EXPECT_EQ(r.graph.edges.size(), g.edges.size() + 1);
  EXPECT_EQ(r.graph.version, g.version + 2);
  const auto* edge = r.graph.find_edge(gen->new_edge_id);
  ASSERT_NE(edge, nullptr);
  EXPECT_EQ(edge->provenance, Provenance::Generated);
  EXPECT_EQ(edge->from, NodeId("n0"));
  EXPECT_EQ(edge->to, gen->new_node_id);
  EXPECT_EQ(edge->intent.examples, std::vector<std::string>{"zxqv"});
  EXPECT_EQ(r.graph.nodes.at(gen->new_node_id).provenance, Provenance::Generated);
  EXPECT_EQ(r.turn.avatar_reply, "Mock reply to: zxqv");
  EXPECT_EQ(r.turn.feedback, "Mock feedback for intent gen-001");
  EXPECT_EQ(r.session.current_node, gen->new_node_id);
  EXPECT_FALSE(has_errors(validate(r.graph)));
}

TEST(SubmitTurn, StrictNoMatchRejects) {
  MockProvider mock;
  auto g = strict(fx::customer_service());
  auto s = start_session(g).session;
  auto r = submit_turn(s, g, mock, "zxqv");
  EXPECT_EQ(r.turn.decision, MatchDecision(decision::Rejected{0.0, "patient, rude, ignore"}));
  EXPECT_EQ(r.graph.version, g.version);
  EXPECT_EQ(r.session.current_node, NodeId("n0"));
  EXPECT_EQ(r.turn.from_node, r.turn.to_node);
  EXPECT_EQ(r.turn.feedback, "Mock feedback for intent <none>");
}

TEST(SubmitTurn, StrictDeadEndSaysNoOptions) {
  MockProvider mock;
  auto g = new_graph("t", DialogueMode::Strict);
  g = apply_mutation(g, mutation::AddNode{SceneNode{NodeId("a"), "hello", "", false, Provenance::Authored}});
  auto s = start_session(g).session;
  auto r = submit_turn(s, g, mock, "anything");
  EXPECT_EQ(std::get<decision::Rejected>(r.turn.decision).hint, "no options");
}

TEST(SubmitTurn, TerminalCompletesSession) {
  MockProvider mock;
  auto g = fx::customer_service();
  auto s = start_session(g).session;
  auto r = submit_turn(s, g, mock, "Stop yelling at me");
  EXPECT_EQ(r.session.current_node, NodeId("n2"));
  EXPECT_EQ(r.session.status, SessionStatus::Completed);
  EXPECT_EQ(caught([&] { submit_turn(r.session, r.graph, mock, "hello"); }).code(), Errc::SessionCompleted);
}

TEST(SubmitTurn, Preconditions) {
  MockProvider mock;
  auto g = fx::customer_service();
  auto s = start_session(g).session;
  EXPECT_EQ(caught([&] { submit_turn(s, g, mock, " \t\n"); }).code(), Errc::EmptyUtterance);
  auto other = fx::customer_service();
  EXPECT_EQ(caught([&] { submit_turn(s, other, mock, "hi"); }).code(), Errc::InvalidArgument);
}

TEST(SubmitTurn, UtteranceIsTrimmed) {
  MockProvider mock;
  auto g = fx::customer_service();
  auto r = submit_turn(start_session(g).session, g, mock, "  Stop yelling at me \n");
  EXPECT_EQ(r.turn.student_utterance, "Stop yelling at me");
  EXPECT_TRUE(std::holds_alternative<decision::Matched>(r.turn.decision));
}

TEST(SubmitTurn, ProviderFailureLeavesNothingBehind) {
  auto g = fx::customer_service();
  auto s = start_session(g).session;
  for (auto task : {PromptTask::Classify, PromptTask::Branch, PromptTask::Feedback}) {
    fx::FailingTaskProvider failing(std::make_shared<MockProvider>(), task);
    const auto session_before = s;
    const auto graph_before = g;
    auto err = caught([&] { submit_turn(s, g, failing, "zxqv"); });
    EXPECT_TRUE(err.is_provider_error());
    EXPECT_EQ(s, session_before);
    EXPECT_EQ(g, graph_before);
  }
}

TEST(SubmitTurn, ThresholdOverride) {
  MockProvider mock;
  auto g = strict(fx::customer_service());
  auto s = start_session(g, {.threshold = 0.4}).session;
  auto r = submit_turn(s, g, mock, "I am so sorry about the wait");
  EXPECT_TRUE(std::holds_alternative<decision::Matched>(r.turn.decision));
  auto s2 = start_session(g, {.threshold = 0.45}).session;
  auto r2 = submit_turn(s2, g, mock, "I am so sorry about the wait");
  EXPECT_EQ(std::get<decision::Rejected>(r2.turn.decision).best_confidence, 4.0 / 9.0);
}

TEST(EndSession, Lifecycle) {
  MockProvider mock;
  auto g = fx::customer_service();
  auto s = start_session(g).session;
  s = submit_turn(s, g, mock, "zxqv").session;
  auto ended = end_session(s);
  EXPECT_EQ(ended.status, SessionStatus::Completed);
  EXPECT_EQ(ended.transcript, s.transcript);
  EXPECT_EQ(caught([&] { end_session(ended); }).code(), Errc::SessionCompleted);
}

TEST(SessionProperties, DeterministicReplay) {
  const std::vector<std::string> script = {"zxqv",         "I am sorry for the inconvenience", "hmm",
                                           "what now",     "blue",   "okay then",   "hello there",
                                           "more please",  "sorry",  "fine"};
  MockProvider mock;
  const auto base = fx::customer_service();
  auto first = play(base, mock, script, fx::stepping_clock());
  auto second = play(base, mock, script, fx::stepping_clock());
  EXPECT_EQ(session_to_json(first.session), session_to_json(second.session));
  EXPECT_EQ(to_json(first.graph), to_json(second.graph));
  EXPECT_EQ(first.session.transcript.size(), 10u);
}

TEST(SessionProperties, ModeContractOverRandomScripts) {
  MockProvider mock;
  for (std::uint32_t seed = 0; seed < 60; ++seed) {
    std::mt19937 rng(seed);
    auto g = fx::customer_service();
    if (seed % 2) g = strict(g);
    auto script = fx::random_script(rng, g, 12);
    auto run = play(g, mock, script, fx::stepping_clock());
    int generated = 0;
    for (const auto& t : run.session.transcript) {
      generated += std::holds_alternative<decision::GeneratedBranch>(t.decision);
    }
    if (g.mode == DialogueMode::Strict) {
      EXPECT_EQ(run.graph.version, g.version);
      EXPECT_EQ(generated, 0);
    } else {
      EXPECT_EQ(run.graph.nodes.size() - g.nodes.size(), static_cast<std::size_t>(generated));
      EXPECT_EQ(run.graph.edges.size() - g.edges.size(), static_cast<std::size_t>(generated));
    }
    EXPECT_FALSE(has_errors(validate(run.graph)));
    for (std::size_t k = 0; k < run.session.transcript.size(); ++k) {
      EXPECT_EQ(run.session.transcript[k].index, static_cast<int>(k));
      if (k + 1 < run.session.transcript.size()) {
        EXPECT_EQ(run.session.transcript[k].to_node, run.session.transcript[k + 1].from_node);
      }
      if (auto* m = std::get_if<decision::Matched>(&run.session.transcript[k].decision)) {
        EXPECT_GE(m->confidence, run.session.match_threshold);
      }
      if (auto* r = std::get_if<decision::Rejected>(&run.session.transcript[k].decision)) {
        EXPECT_LT(r->best_confidence, run.session.match_threshold);
      }
    }
    const bool at_terminal = run.graph.nodes.at(run.session.current_node).terminal;
    EXPECT_EQ(run.session.status == SessionStatus::Completed, at_terminal);
  }
}

// --- JSON -------------------------------------------------------------------------

TEST(SessionJson, Timestamps) {
  Timestamp t(std::chrono::milliseconds(1'790'000'000'123));
  EXPECT_EQ(format_timestamp(t), "2026-09-21T14:13:20.123Z");
  EXPECT_EQ(parse_timestamp("2026-09-21T14:13:20.123Z"), t);
  EXPECT_EQ(parse_timestamp("2026-09-21T14:13:20Z"), Timestamp(std::chrono::milliseconds(1'790'000'000'000)));
  EXPECT_EQ(caught([] { parse_timestamp("2026-09-21 13:33"); }).code(), Errc::SchemaViolation);
  EXPECT_EQ(caught([] { parse_timestamp("2026-09-21T14:13:20+02:00"); }).code(), Errc::SchemaViolation);
}

TEST(SessionJson, RoundTrip) {
  MockProvider mock;
  auto run = play(fx::customer_service(), mock, {"zxqv", "hmm", "I am sorry for the inconvenience"},
                  fx::stepping_clock());
  auto strict_run = play(strict(fx::customer_service()), mock, {"zxqv", "Stop yelling at me"}, fx::stepping_clock());
  for (const auto* s : {&run.session, &strict_run.session}) {
    auto text = session_to_json(*s);
    EXPECT_EQ(session_from_json(text), *s);
    EXPECT_EQ(session_to_json(session_from_json(text)), text);
  }
  auto value = session_to_value(run.session);
  for (auto key : {"id", "graph_id", "graph_version_at_start", "current_node", "threshold", "status", "created_at",
                   "transcript"}) {
    EXPECT_TRUE(value.contains(key)) << key;
  }
  EXPECT_EQ(value["transcript"][0]["decision"]["kind"], "generated");
}

TEST(SessionJson, Rejections) {
  MockProvider mock;
  auto run = play(fx::customer_service(), mock, {"zxqv", "hmm"}, fx::stepping_clock());
  auto value = session_to_value(run.session);
  auto gap = value;
  gap["transcript"][1]["index"] = 5;
  EXPECT_EQ(caught([&] { session_from_value(gap); }).code(), Errc::SchemaViolation);
  auto bad_kind = value;
  bad_kind["transcript"][0]["decision"]["kind"] = "maybe";
  EXPECT_EQ(caught([&] { session_from_value(bad_kind); }).code(), Errc::SchemaViolation);
  auto missing = value;
  missing.erase("status");
  EXPECT_EQ(caught([&] { session_from_value(missing); }).code(), Errc::SchemaViolation);
}
