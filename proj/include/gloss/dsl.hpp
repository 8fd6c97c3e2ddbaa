#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gloss/graph.hpp"

namespace gloss {

struct ParseDiagnostic {
  int line = 1;    // 1-based
  int column = 1;  // 1-based, in bytes
  std::string message;
  Severity severity = Severity::Error;

  friend bool operator==(const ParseDiagnostic&, const ParseDiagnostic&) = default;
};

struct ParseResult {
  std::optional<NarrativeGraph> graph;  // set iff no error diagnostics
  std::vector<ParseDiagnostic> diagnostics;
};

/// Parses the line-oriented scenario language (grammar in docs/dsl.md).
///
///   graph "Demo" mode=flexible start=n0
///   node n0 avatar="Hello" terminal=false
///   node n1 avatar="Bye" terminal=true
///   edge e1 n0 -> n1 intent=patient desc="stay calm" examples=["sorry for the wait"]
///
/// Never throws on bad input: each malformed line yields one diagnostic and
/// parsing resumes on the next line. The returned graph is built through
/// apply_mutation() and then reset to version 1.
ParseResult parse_dsl(std::string_view text);

/// Canonical rendering: header, `meta` lines by key, `node` lines by id,
/// `edge` lines in insertion order. Throws InvalidGraph if validate() reports
/// errors.
std::string render_dsl(const NarrativeGraph& graph);

}  // namespace gloss
