#include "gloss/analysis.hpp"

#include "gloss/error.hpp"

namespace gloss {

namespace {

[[noreturn]] void inconsistent(const Session& session, const Turn& turn, const std::string& what) {
  throw Error(Errc::InconsistentTranscript,
              "session " + session.id.str() + " turn " + std::to_string(turn.index) + ": " + what);
}

}  // namespace

Path path_of(const Session& session, const NarrativeGraph& graph) {
  if (session.graph_id != graph.id) {
    throw Error(Errc::InconsistentTranscript,
                "session " + session.id.str() + " ran on graph " + session.graph_id.str() + ", not " + graph.id.str());
  }
  Path path;
  path.start = session.transcript.empty() ? session.current_node : session.transcript.front().from_node;
  if (!graph.find_node(path.start)) {
    throw Error(Errc::InconsistentTranscript, "session " + session.id.str() + " starts at unknown node " + path.start.str());
  }
  NodeId at = path.start;
  for (const auto& turn : session.transcript) {
    if (turn.from_node != at) inconsistent(session, turn, "starts at " + turn.from_node.str() + " but the path is at " + at.str());
    if (std::holds_alternative<decision::Rejected>(turn.decision)) {
      if (turn.to_node != turn.from_node) inconsistent(session, turn, "rejected turn moved");
      continue;
    }
    const EdgeId edge_id = std::holds_alternative<decision::Matched>(turn.decision)
                               ? std::get<decision::Matched>(turn.decision).edge_id
                               : std::get<decision::GeneratedBranch>(turn.decision).new_edge_id;
    const TransitionEdge* edge = graph.find_edge(edge_id);
    if (!edge) inconsistent(session, turn, "edge " + edge_id.str() + " is not in the graph");
    if (edge->from != turn.from_node || edge->to != turn.to_node || !graph.find_node(edge->to)) {
      inconsistent(session, turn, "edge " + edge_id.str() + " does not connect " + turn.from_node.str() + " to " +
                                      turn.to_node.str());
    }
    path.steps.emplace_back(edge->id, edge->to);
    at = edge->to;
  }
  return path;
}

SessionReport session_report(const Session& session) {
  SessionReport report;
  report.session_id = session.id;
  report.completed = session.status == SessionStatus::Completed;
  double confidence_sum = 0.0;
  for (const auto& turn : session.transcript) {
    ++report.turns_total;
    if (const auto* m = std::get_if<decision::Matched>(&turn.decision)) {
      ++report.matched_count;
      confidence_sum += m->confidence;
    } else if (std::holds_alternative<decision::GeneratedBranch>(turn.decision)) {
      ++report.generated_count;
    } else {
      ++report.rejected_count;
    }
    report.per_turn.push_back({turn.index, std::string(decision_kind(turn.decision)), turn.feedback});
  }
  if (report.matched_count > 0) report.mean_confidence_of_matched = confidence_sum / report.matched_count;
  return report;
}

Json report_to_value(const SessionReport& report) {
  Json per_turn = Json::array();
  for (const auto& t : report.per_turn) {
    per_turn.push_back({{"index", t.index}, {"kind", t.kind}, {"feedback", t.feedback}});
  }
  return {
      {"session_id", report.session_id.str()},
      {"turns_total", report.turns_total},
      {"matched_count", report.matched_count},
      {"generated_count", report.generated_count},
      {"rejected_count", report.rejected_count},
      {"completed", report.completed},
      {"mean_confidence_of_matched", report.mean_confidence_of_matched},
      {"per_turn", std::move(per_turn)},
  };
}

CohortSummary cohort_summary(const NarrativeGraph& graph, const std::vector<Session>& sessions) {
  CohortSummary summary;
  for (const auto& edge : graph.edges) summary.edge_traversals[edge.id] = 0;
  for (const auto& [id, node] : graph.nodes) summary.node_visits[id] = 0;
  for (const auto& session : sessions) {
    const Path path = path_of(session, graph);
    ++summary.node_visits[path.start];
    for (const auto& [edge, node] : path.steps) {
      ++summary.edge_traversals[edge];
      ++summary.node_visits[node];
    }
    ++summary.session_count;
  }
  return summary;
}

Json cohort_to_value(const CohortSummary& summary) {
  Json edges = Json::object();
  for (const auto& [id, count] : summary.edge_traversals) edges[id.str()] = count;
  Json nodes = Json::object();
  for (const auto& [id, count] : summary.node_visits) nodes[id.str()] = count;
  return {{"edge_traversals", edges}, {"node_visits", nodes}, {"session_count", summary.session_count}};
}

std::string overlay_dot(const NarrativeGraph& graph, const Session& session) {
  return render_dot(graph, path_of(session, graph));
}

Json path_to_value(const Path& path) { return path.flatten(); }

}  // namespace gloss
