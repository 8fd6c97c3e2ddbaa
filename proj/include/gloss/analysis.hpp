#pragma once

#include <map>
#include <string>
#include <vector>

#include "gloss/dot.hpp"
#include "gloss/graph.hpp"
#include "gloss/json_io.hpp"
#include "gloss/session.hpp"

namespace gloss {

/// The session's walk through the graph: the start node plus one (edge,
/// node) step per matched or generated turn. Rejected turns add nothing.
/// Throws InconsistentTranscript if a turn names ids the graph lacks or the
/// steps do not chain.
Path path_of(const Session& session, const NarrativeGraph& graph);

struct TurnSummary {
  int index = 0;
  std::string kind;  // matched | generated | rejected
  std::string feedback;

  friend bool operator==(const TurnSummary&, const TurnSummary&) = default;
};

struct SessionReport {
  SessionId session_id;
  int turns_total = 0;
  int matched_count = 0;
  int generated_count = 0;
  int rejected_count = 0;
  bool completed = false;
  double mean_confidence_of_matched = 0.0;
  std::vector<TurnSummary> per_turn;

  friend bool operator==(const SessionReport&, const SessionReport&) = default;
};

SessionReport session_report(const Session& session);
Json report_to_value(const SessionReport& report);

/// Per-element traversal counts across sessions on one graph. Every edge and
/// node of the graph is present, untraversed ones with 0. A node counts one
/// visit per path entry, so each session's start node counts once.
struct CohortSummary {
  std::map<EdgeId, int> edge_traversals;
  std::map<NodeId, int> node_visits;
  int session_count = 0;
};

CohortSummary cohort_summary(const NarrativeGraph& graph, const std::vector<Session>& sessions);
Json cohort_to_value(const CohortSummary& summary);

/// render_dot() with the session's path highlighted.
std::string overlay_dot(const NarrativeGraph& graph, const Session& session);

Json path_to_value(const Path& path);

}  // namespace gloss
