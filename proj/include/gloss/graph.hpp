#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace gloss {

/// String identifier tagged by the kind of element it names, so a node id
/// cannot be passed where an edge id is expected.
template <class Tag>
class Id {
 public:
  Id() = default;
  explicit Id(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const Id&, const Id&) = default;
  friend bool operator==(const Id&, const Id&) = default;

 private:
  std::string value_;
};

using NodeId = Id<struct NodeIdTag>;
using EdgeId = Id<struct EdgeIdTag>;
using GraphId = Id<struct GraphIdTag>;

enum class DialogueMode { Strict, Flexible };
enum class Provenance { Authored, Generated, Template };

std::string_view to_string(DialogueMode mode) noexcept;
std::string_view to_string(Provenance provenance) noexcept;
std::optional<DialogueMode> parse_dialogue_mode(std::string_view text) noexcept;
std::optional<Provenance> parse_provenance(std::string_view text) noexcept;

struct ResponseIntent {
  std::string label;
  std::string description;
  std::vector<std::string> examples;

  friend bool operator==(const ResponseIntent&, const ResponseIntent&) = default;
};

struct SceneNode {
  NodeId id;
  std::string avatar_utterance;  // spoken by the avatar on entering the scene
  std::string description;       // instructor-facing context
  bool terminal = false;
  Provenance provenance = Provenance::Authored;

  friend bool operator==(const SceneNode&, const SceneNode&) = default;
};

struct TransitionEdge {
  EdgeId id;
  NodeId from;
  NodeId to;
  ResponseIntent intent;
  Provenance provenance = Provenance::Authored;

  friend bool operator==(const TransitionEdge&, const TransitionEdge&) = default;
};

/// A scenario: scenes connected by intent-labelled transitions.
///
/// Values are snapshots. Mutations go through apply_mutation(), which returns
/// a new graph with `version` bumped by one. The fields are public so that
/// loaders and tests can represent (and validate()) graphs that violate the
/// structural invariants.
struct NarrativeGraph {
  GraphId id;
  std::string title;
  DialogueMode mode = DialogueMode::Flexible;
  NodeId start_node;
  std::map<NodeId, SceneNode> nodes;
  std::vector<TransitionEdge> edges;  // insertion order is the tie-break order
  std::int64_t version = 1;
  std::map<std::string, std::string> metadata;

  const SceneNode* find_node(const NodeId& id) const;
  const TransitionEdge* find_edge(const EdgeId& id) const;

  friend bool operator==(const NarrativeGraph&, const NarrativeGraph&) = default;
};

namespace mutation {
struct AddNode { SceneNode node; };
struct UpdateNode { SceneNode node; };
struct RemoveNode { NodeId id; };
struct AddEdge { TransitionEdge edge; };
struct UpdateEdge { TransitionEdge edge; };
struct RemoveEdge { EdgeId id; };
struct SetStart { NodeId id; };
struct SetMode { DialogueMode mode; };
}  // namespace mutation

using Mutation = std::variant<mutation::AddNode, mutation::UpdateNode, mutation::RemoveNode,
                              mutation::AddEdge, mutation::UpdateEdge, mutation::RemoveEdge,
                              mutation::SetStart, mutation::SetMode>;

/// Fresh, empty graph at version 1 with a newly minted id. Throws EmptyTitle.
NarrativeGraph new_graph(std::string title, DialogueMode mode);

/// Random "g-" prefixed identifier, unique per call.
GraphId fresh_graph_id();

/// Applies one mutation and returns the resulting snapshot.
///
/// AddNode on an empty graph also makes the node the start node. RemoveNode
/// cascades to every incident edge; removing the start node while other nodes
/// remain is refused with WouldDangle. Throws UnknownId, DuplicateId,
/// DuplicateIntentLabel, InvalidElement.
NarrativeGraph apply_mutation(const NarrativeGraph& graph, const Mutation& mutation);

/// Outgoing edges of `node` in insertion order. Throws UnknownId.
std::vector<TransitionEdge> outgoing_edges(const NarrativeGraph& graph, const NodeId& node);

/// Next unused "gen-NNN" id for engine-generated elements. Node and edge ids
/// share one counter so the two never collide.
std::string next_generated_id(const NarrativeGraph& graph);

/// ASCII case folding used for intent-label comparison.
std::string fold_label(std::string_view label);

enum class Severity { Error, Warning };
std::string_view to_string(Severity severity) noexcept;

struct Diagnostic {
  std::string code;  // E001..E004, W001..W003
  Severity severity = Severity::Error;
  std::string message;
  std::string subject;  // node or edge id, or "graph"

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

/// Structural lint. Ordered by code, then subject.
///
///   E001  start node missing or not a node
///   E002  edge endpoint is not a node
///   E003  duplicate intent labels (case-insensitive) on one node
///   E004  duplicate element id (edge ids, or an edge id equal to a node id)
///   W001  node unreachable from the start node
///   W002  terminal node has outgoing edges
///   W003  non-terminal node has no outgoing edges
std::vector<Diagnostic> validate(const NarrativeGraph& graph);

bool has_errors(const std::vector<Diagnostic>& diagnostics);

}  // namespace gloss

template <class Tag>
struct std::hash<gloss::Id<Tag>> {
  std::size_t operator()(const gloss::Id<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
