#pragma once

#include <string>
#include <string_view>

#include "gloss/graph.hpp"
#include "json.hpp"

namespace gloss {

using Json = nlohmann::json;

/// Canonical text for a JSON value: sorted keys, two-space indent, UTF-8,
/// trailing LF.
std::string canonical_dump(const Json& value);

/// Graph persistence format. Nodes are written in id order, edges in
/// insertion order, so equal graphs always serialize to identical bytes.
std::string to_json(const NarrativeGraph& graph);
Json graph_to_value(const NarrativeGraph& graph);

/// Inverse of to_json(). Checks the document shape only; structural problems
/// such as dangling edges are left for validate(). Throws SchemaViolation with
/// a JSON pointer to the offending field in Error::detail().
NarrativeGraph from_json(std::string_view text);
NarrativeGraph graph_from_value(const Json& value);

/// Parses text that should hold a JSON document, mapping syntax errors to
/// SchemaViolation at the root.
Json parse_json_text(std::string_view text);

}  // namespace gloss
