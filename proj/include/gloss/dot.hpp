#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gloss/graph.hpp"

namespace gloss {

/// A walk through a graph: the start node followed by (edge, node) steps.
/// Serialized as the flat alternating list [n0, e1, n1, ...].
struct Path {
  NodeId start;
  std::vector<std::pair<EdgeId, NodeId>> steps;

  std::vector<std::string> flatten() const;
  std::size_t element_count() const { return start.empty() ? 0 : 1 + 2 * steps.size(); }

  friend bool operator==(const Path&, const Path&) = default;
};

/// Attribute stamped on highlighted node and edge statements.
inline constexpr const char* kHighlightAttribute = "penwidth=3";

/// Graphviz export. Node labels are the scene id followed by the first 40
/// code points of the avatar utterance; edges are labelled with their intent.
/// Statements come out in node-id order then edge insertion order. Throws
/// UnknownId when the highlight path names a missing node or edge.
std::string render_dot(const NarrativeGraph& graph, const std::optional<Path>& highlight = std::nullopt);

}  // namespace gloss
