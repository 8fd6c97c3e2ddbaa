#include "gloss/session.hpp"

#include <cstdio>
#include <ctime>
#include <random>

#include "gloss/authoring.hpp"
#include "gloss/error.hpp"
#include "gloss/text.hpp"

namespace gloss {

Timestamp system_now() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

std::string format_timestamp(Timestamp t) {
  const auto ms = t.time_since_epoch().count();
  std::time_t secs = static_cast<std::time_t>(ms / 1000);
  long millis = static_cast<long>(ms % 1000);
  if (millis < 0) {
    millis += 1000;
    --secs;
  }
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03ldZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, millis);
  return buf;
}

Timestamp parse_timestamp(std::string_view text) {
  std::tm tm{};
  int millis = 0;
  const std::string s(text);
  int consumed = 0;
  int fields = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &tm.tm_year, &tm.tm_mon, &tm.tm_mday,
                           &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &consumed);
  if (fields != 6) throw Error(Errc::SchemaViolation, "bad timestamp '" + s + "'");
  std::string_view rest = std::string_view(s).substr(consumed);
  if (!rest.empty() && rest.front() == '.') {
    rest.remove_prefix(1);
    int digits = 0;
    while (!rest.empty() && std::isdigit(static_cast<unsigned char>(rest.front()))) {
      if (digits < 3) millis = millis * 10 + (rest.front() - '0');
      ++digits;
      rest.remove_prefix(1);
    }
    for (; digits < 3; ++digits) millis *= 10;
  }
  if (rest != "Z") throw Error(Errc::SchemaViolation, "timestamp must be UTC ('Z'): '" + s + "'");
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  const auto secs = timegm(&tm);
  return Timestamp(std::chrono::milliseconds(static_cast<std::int64_t>(secs) * 1000 + millis));
}

SessionId fresh_session_id() {
  thread_local std::mt19937_64 engine{[] {
    std::random_device rd;
    std::seed_seq seq{rd(), rd(), rd(), rd()};
    return std::mt19937_64(seq);
  }()};
  char buf[24];
  std::snprintf(buf, sizeof buf, "s-%016llx", static_cast<unsigned long long>(engine()));
  return SessionId(buf);
}

std::string_view to_string(SessionStatus status) noexcept {
  return status == SessionStatus::Active ? "active" : "completed";
}

SessionStart start_session(const NarrativeGraph& graph, const SessionOptions& options) {
  const double threshold = options.threshold.value_or(kDefaultMatchThreshold);
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(Errc::InvalidArgument, "match threshold must lie in [0, 1]");
  }
  if (graph.nodes.empty()) throw Error(Errc::EmptyGraph, "graph " + graph.id.str() + " has no scenes");
  if (has_errors(validate(graph))) {
    throw Error(Errc::InvalidGraph, "graph " + graph.id.str() + " has error diagnostics");
  }
  Session session;
  session.id = options.id.value_or(fresh_session_id());
  session.graph_id = graph.id;
  session.graph_version_at_start = graph.version;
  session.current_node = graph.start_node;
  session.match_threshold = threshold;
  session.created_at = options.clock ? options.clock() : system_now();
  return {std::move(session), graph.find_node(graph.start_node)->avatar_utterance};
}

Resolution resolve_match(const std::vector<IntentMatch>& matches, double threshold) {
  if (matches.empty()) return NoMatch{0.0};
  if (matches.front().confidence >= threshold) return matches.front();
  return NoMatch{matches.front().confidence};
}

TurnResult submit_turn(const Session& session, const NarrativeGraph& graph, Provider& provider,
                       std::string_view utterance, const Clock& clock) {
  if (session.status == SessionStatus::Completed) {
    throw Error(Errc::SessionCompleted, "session " + session.id.str() + " is already completed");
  }
  const std::string said(text::trim(utterance));
  if (said.empty()) throw Error(Errc::EmptyUtterance, "utterance must not be empty");
  if (graph.id != session.graph_id) {
    throw Error(Errc::InvalidArgument, "graph " + graph.id.str() + " does not belong to session " + session.id.str());
  }
  const SceneNode* scene = graph.find_node(session.current_node);
  if (!scene) {
    throw Error(Errc::InconsistentTranscript, "current node " + session.current_node.str() + " is not in the graph",
                session.current_node.str());
  }

  TurnResult result{session, graph, {}};
  Turn& turn = result.turn;
  turn.index = static_cast<int>(session.transcript.size());
  turn.student_utterance = said;
  turn.from_node = session.current_node;
  turn.to_node = session.current_node;

  const auto candidates = outgoing_edges(graph, session.current_node);
  std::vector<std::string> labels;
  for (const auto& edge : candidates) labels.push_back(edge.intent.label);

  Resolution resolution = NoMatch{0.0};
  if (!candidates.empty()) {
    std::vector<IntentCandidate> listing;
    for (const auto& edge : candidates) listing.push_back({edge.id, edge.intent});
    resolution = resolve_match(classify_intent(provider, said, listing), session.match_threshold);
  }

  if (const auto* match = std::get_if<IntentMatch>(&resolution)) {
    const TransitionEdge* edge = graph.find_edge(match->edge_id);
    turn.decision = decision::Matched{edge->id, match->confidence, edge->intent.label};
    turn.to_node = edge->to;
    turn.avatar_reply = graph.find_node(edge->to)->avatar_utterance;
  } else if (graph.mode == DialogueMode::Flexible) {
    const auto proposal = propose_branch(provider, *scene, said, labels);
    auto appended = append_generated_branch(graph, session.current_node, proposal, {said});
    result.graph = std::move(appended.graph);
    turn.decision = decision::GeneratedBranch{appended.edge_id, appended.node_id, proposal.intent_label};
    turn.to_node = appended.node_id;
    turn.avatar_reply = proposal.avatar_reply;
  } else {
    const double best = std::get<NoMatch>(resolution).best_confidence;
    turn.decision = decision::Rejected{best, labels.empty() ? "no options" : text::join(labels, ", ")};
    turn.avatar_reply = scene->avatar_utterance;
  }

  turn.feedback = compose_feedback(provider, *scene, said, turn.decision);
  turn.at = clock ? clock() : system_now();

  result.session.transcript.push_back(turn);
  result.session.current_node = turn.to_node;
  if (result.graph.find_node(turn.to_node)->terminal) result.session.status = SessionStatus::Completed;
  return result;
}

Session end_session(const Session& session) {
  if (session.status == SessionStatus::Completed) {
    throw Error(Errc::SessionCompleted, "session " + session.id.str() + " is already completed");
  }
  Session ended = session;
  ended.status = SessionStatus::Completed;
  return ended;
}

// ---------------------------------------------------------------------------
// JSON

Json decision_to_value(const MatchDecision& decision) {
  return std::visit(
      [](const auto& d) -> Json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, decision::Matched>) {
          return {{"kind", "matched"}, {"edge_id", d.edge_id.str()}, {"confidence", d.confidence},
                  {"intent_label", d.intent_label}};
        } else if constexpr (std::is_same_v<T, decision::GeneratedBranch>) {
          return {{"kind", "generated"}, {"edge_id", d.new_edge_id.str()}, {"node_id", d.new_node_id.str()},
                  {"intent_label", d.intent_label}};
        } else {
          return {{"kind", "rejected"}, {"best_confidence", d.best_confidence}, {"hint", d.hint}};
        }
      },
      decision);
}

MatchDecision decision_from_value(const Json& value) {
  const auto kind = value.at("kind").get<std::string>();
  if (kind == "matched") {
    return decision::Matched{EdgeId(value.at("edge_id").get<std::string>()), value.at("confidence").get<double>(),
                             value.value("intent_label", "")};
  }
  if (kind == "generated") {
    return decision::GeneratedBranch{EdgeId(value.at("edge_id").get<std::string>()),
                                     NodeId(value.at("node_id").get<std::string>()),
                                     value.value("intent_label", "")};
  }
  if (kind == "rejected") {
    return decision::Rejected{value.at("best_confidence").get<double>(), value.value("hint", "")};
  }
  throw Error(Errc::SchemaViolation, "unknown decision kind '" + kind + "'");
}

Json turn_to_value(const Turn& turn) {
  return {
      {"index", turn.index},
      {"student_utterance", turn.student_utterance},
      {"decision", decision_to_value(turn.decision)},
      {"avatar_reply", turn.avatar_reply},
      {"feedback", turn.feedback},
      {"from_node", turn.from_node.str()},
      {"to_node", turn.to_node.str()},
      {"at", format_timestamp(turn.at)},
  };
}

Json session_to_value(const Session& session) {
  Json transcript = Json::array();
  for (const auto& turn : session.transcript) transcript.push_back(turn_to_value(turn));
  return {
      {"id", session.id.str()},
      {"graph_id", session.graph_id.str()},
      {"graph_version_at_start", session.graph_version_at_start},
      {"current_node", session.current_node.str()},
      {"threshold", session.match_threshold},
      {"status", to_string(session.status)},
      {"created_at", format_timestamp(session.created_at)},
      {"transcript", std::move(transcript)},
  };
}

std::string session_to_json(const Session& session) { return canonical_dump(session_to_value(session)); }

Session session_from_value(const Json& value) {
  try {
    Session session;
    session.id = SessionId(value.at("id").get<std::string>());
    session.graph_id = GraphId(value.at("graph_id").get<std::string>());
    session.graph_version_at_start = value.at("graph_version_at_start").get<std::int64_t>();
    session.current_node = NodeId(value.at("current_node").get<std::string>());
    session.match_threshold = value.at("threshold").get<double>();
    const auto status = value.at("status").get<std::string>();
    if (status != "active" && status != "completed") {
      throw Error(Errc::SchemaViolation, "/status: expected active or completed", "/status");
    }
    session.status = status == "active" ? SessionStatus::Active : SessionStatus::Completed;
    session.created_at = parse_timestamp(value.at("created_at").get<std::string>());
    const auto& transcript = value.at("transcript");
    for (std::size_t i = 0; i < transcript.size(); ++i) {
      const auto& t = transcript[i];
      Turn turn;
      turn.index = t.at("index").get<int>();
      if (turn.index != static_cast<int>(i)) {
        throw Error(Errc::SchemaViolation, "turn indexes must be contiguous from 0",
                    "/transcript/" + std::to_string(i) + "/index");
      }
      turn.student_utterance = t.at("student_utterance").get<std::string>();
      turn.decision = decision_from_value(t.at("decision"));
      turn.avatar_reply = t.at("avatar_reply").get<std::string>();
      turn.feedback = t.at("feedback").get<std::string>();
      turn.from_node = NodeId(t.at("from_node").get<std::string>());
      turn.to_node = NodeId(t.at("to_node").get<std::string>());
      turn.at = parse_timestamp(t.at("at").get<std::string>());
      session.transcript.push_back(std::move(turn));
    }
    return session;
  } catch (const Json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("malformed session document: ") + e.what());
  }
}

Session session_from_json(std::string_view text) { return session_from_value(parse_json_text(text)); }

}  // namespace gloss
