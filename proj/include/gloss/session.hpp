#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gloss/gateway.hpp"
#include "gloss/graph.hpp"
#include "gloss/json_io.hpp"
#include "gloss/provider.hpp"

namespace gloss {

using SessionId = Id<struct SessionIdTag>;
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;
using Clock = std::function<Timestamp()>;

Timestamp system_now();

/// RFC 3339 UTC with milliseconds, e.g. 2026-10-16T09:30:00.000Z.
std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(std::string_view text);

SessionId fresh_session_id();

enum class SessionStatus { Active, Completed };
std::string_view to_string(SessionStatus status) noexcept;

inline constexpr double kDefaultMatchThreshold = 0.5;

struct Turn {
  int index = 0;
  std::string student_utterance;
  MatchDecision decision;
  std::string avatar_reply;
  std::string feedback;
  NodeId from_node;
  NodeId to_node;  // equals from_node for rejected turns
  Timestamp at{};

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Session {
  SessionId id;
  GraphId graph_id;
  std::int64_t graph_version_at_start = 0;
  NodeId current_node;
  std::vector<Turn> transcript;
  SessionStatus status = SessionStatus::Active;
  double match_threshold = kDefaultMatchThreshold;
  Timestamp created_at{};

  friend bool operator==(const Session&, const Session&) = default;
};

struct SessionOptions {
  std::optional<double> threshold;
  std::optional<SessionId> id;  // minted when absent
  Clock clock;                  // system_now when empty
};

struct SessionStart {
  Session session;
  std::string opening_utterance;
};

/// Opens a session at the graph's start node. Throws EmptyGraph, InvalidGraph
/// (error diagnostics present) or InvalidArgument (threshold outside [0, 1]).
SessionStart start_session(const NarrativeGraph& graph, const SessionOptions& options = {});

struct NoMatch {
  double best_confidence = 0.0;
  friend bool operator==(const NoMatch&, const NoMatch&) = default;
};
using Resolution = std::variant<IntentMatch, NoMatch>;

/// Accepts the top-ranked match when it reaches the threshold.
Resolution resolve_match(const std::vector<IntentMatch>& matches, double threshold);

struct TurnResult {
  Session session;
  NarrativeGraph graph;  // grown by one node + edge after a generated branch
  Turn turn;
};

/// Runs one student turn:
///
///   1. gather the current scene's outgoing edges
///   2. classify the utterance against them
///   3. accept the best match if it clears the threshold and move along it
///   4. otherwise, in flexible mode, ask for a new branch, append it to the
///      graph and move there; in strict mode reject and list the options
///   5. ask for feedback with an independent prompt
///
/// The inputs are never modified. A provider failure propagates and leaves
/// nothing recorded. Throws SessionCompleted, EmptyUtterance, InvalidArgument
/// (graph does not belong to the session) or provider errors.
TurnResult submit_turn(const Session& session, const NarrativeGraph& graph, Provider& provider,
                       std::string_view utterance, const Clock& clock = {});

/// Marks an active session completed. Throws SessionCompleted.
Session end_session(const Session& session);

Json decision_to_value(const MatchDecision& decision);
MatchDecision decision_from_value(const Json& value);
Json turn_to_value(const Turn& turn);
Json session_to_value(const Session& session);
std::string session_to_json(const Session& session);
Session session_from_value(const Json& value);
Session session_from_json(std::string_view text);

}  // namespace gloss
