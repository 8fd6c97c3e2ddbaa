#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gloss/graph.hpp"
#include "gloss/provider.hpp"

namespace gloss {

struct BranchProposal;

struct Template {
  std::string id;
  std::string title;
  NarrativeGraph graph;
};

/// Bundled scripted scenarios, ordered by id. "customer-service" is the
/// angry-customer scenario with patient / rude / ignore branches.
const std::vector<Template>& template_registry();

/// Copy of a bundled scenario with a fresh graph id, version 1 and every
/// element marked Provenance::Template. Throws UnknownTemplate.
NarrativeGraph instantiate_template(std::string_view template_id);

/// Builds a whole scenario from an instructor prompt. The provider is asked
/// for the persistence JSON schema; ids are rewritten to "gen-NNN" and every
/// element is marked Generated. Output that does not parse or does not
/// validate is sent back for one repair round, then MalformedGeneration.
NarrativeGraph generate_graph(Provider& provider, std::string_view prompt);

/// Appends provider-proposed branches (one new edge + node each) under
/// `node`. Each pair costs two mutations, so version grows by 2 per branch.
/// Throws UnknownId, MalformedGeneration or provider errors.
NarrativeGraph expand_node(Provider& provider, const NarrativeGraph& graph, const NodeId& node,
                           std::string_view instruction);

/// Adds one Generated edge + node under `from` built from `proposal`.
/// Returns the new graph with the ids that were assigned.
struct AppendedBranch {
  NarrativeGraph graph;
  EdgeId edge_id;
  NodeId node_id;
};
AppendedBranch append_generated_branch(const NarrativeGraph& graph, const NodeId& from,
                                       const BranchProposal& proposal,
                                       std::vector<std::string> examples = {});

}  // namespace gloss
