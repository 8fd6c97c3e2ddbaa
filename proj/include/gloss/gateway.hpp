#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gloss/error.hpp"
#include "gloss/graph.hpp"
#include "gloss/json_io.hpp"
#include "gloss/provider.hpp"

namespace gloss {

struct IntentMatch {
  EdgeId edge_id;
  double confidence = 0.0;  // in [0, 1]

  friend bool operator==(const IntentMatch&, const IntentMatch&) = default;
};

struct IntentCandidate {
  EdgeId edge_id;
  ResponseIntent intent;
};

struct BranchProposal {
  std::string intent_label;
  std::string intent_description;
  std::string avatar_reply;
  std::string scene_description;
  bool terminal = false;

  friend bool operator==(const BranchProposal&, const BranchProposal&) = default;
};

namespace decision {
struct Matched {
  EdgeId edge_id;
  double confidence = 0.0;
  std::string intent_label;
  friend bool operator==(const Matched&, const Matched&) = default;
};
struct GeneratedBranch {
  EdgeId new_edge_id;
  NodeId new_node_id;
  std::string intent_label;
  friend bool operator==(const GeneratedBranch&, const GeneratedBranch&) = default;
};
struct Rejected {
  double best_confidence = 0.0;
  std::string hint;
  friend bool operator==(const Rejected&, const Rejected&) = default;
};
}  // namespace decision

/// Outcome of one student turn.
using MatchDecision = std::variant<decision::Matched, decision::GeneratedBranch, decision::Rejected>;

/// "matched", "generated" or "rejected".
std::string_view decision_kind(const MatchDecision& decision) noexcept;

/// Intent label the decision settled on, or "<none>" for a rejection.
std::string decision_label(const MatchDecision& decision);

/// Scores `utterance` against every candidate. One match per candidate,
/// ordered by confidence descending with ties kept in candidate order.
/// Throws EmptyCandidates, MalformedClassification (after one repair retry),
/// or the provider's transport errors.
std::vector<IntentMatch> classify_intent(Provider& provider, std::string_view utterance,
                                         const std::vector<IntentCandidate>& candidates);

/// Asks for a new intent + avatar reaction for an utterance no edge covered.
/// The returned label never collides with `existing_labels`.
BranchProposal propose_branch(Provider& provider, const SceneNode& scene, std::string_view utterance,
                              const std::vector<std::string>& existing_labels);

/// Instructor-driven variant of propose_branch(): one or more branches
/// following a free-text instruction. Labels are unique among themselves and
/// against `existing_labels`.
std::vector<BranchProposal> propose_expansion(Provider& provider, const SceneNode& scene,
                                              std::string_view instruction,
                                              const std::vector<std::string>& existing_labels);

/// Immediate feedback on one turn. The prompt sees the scene, the utterance
/// and the decision, nothing from the classification step or earlier turns.
std::string compose_feedback(Provider& provider, const SceneNode& scene, std::string_view utterance,
                             const MatchDecision& decision);

/// Returns `label` unchanged if free, else "gen-<label>", then
/// "gen-<label>-2", "gen-<label>-3", ... (case-insensitive comparison).
std::string resolve_label_collision(const std::string& label, const std::vector<std::string>& existing_labels);

/// Pulls the JSON object out of model text, tolerating markdown fences and
/// chatter around it. Throws SchemaViolation.
Json extract_json_object(std::string_view model_output);

/// Sends a StructuredJson request, handing the text to `accept`. If `accept`
/// throws, the malformed text is echoed back with a repair instruction once;
/// a second failure raises `failure`.
template <class Accept>
auto structured_call(Provider& provider, PromptRequest request, Errc failure, Accept&& accept)
    -> decltype(accept(std::string()));

}  // namespace gloss

#include "gloss/detail/structured_call.hpp"
