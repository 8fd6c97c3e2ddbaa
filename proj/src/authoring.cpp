#include "gloss/authoring.hpp"

#include <algorithm>
#include <map>

#include "gloss/error.hpp"
#include "gloss/gateway.hpp"
#include "gloss/json_io.hpp"
#include "gloss/prompts.hpp"
#include "gloss/text.hpp"

namespace gloss {

const std::vector<Template>& template_registry() {
  static const std::vector<Template> registry = [] {
    std::vector<Template> out;
    for (const auto& asset : template_assets()) {
      auto graph = from_json(asset.content);
      out.push_back(Template{std::string(asset.name), graph.title, std::move(graph)});
    }
    std::sort(out.begin(), out.end(), [](const Template& a, const Template& b) { return a.id < b.id; });
    return out;
  }();
  return registry;
}

NarrativeGraph instantiate_template(std::string_view template_id) {
  const auto& registry = template_registry();
  auto it = std::find_if(registry.begin(), registry.end(),
                         [&](const Template& t) { return t.id == template_id; });
  if (it == registry.end()) {
    throw Error(Errc::UnknownTemplate, "no template named '" + std::string(template_id) + "'",
                std::string(template_id));
  }
  NarrativeGraph graph = it->graph;
  graph.id = fresh_graph_id();
  graph.version = 1;
  graph.metadata["template"] = it->id;
  for (auto& [id, node] : graph.nodes) node.provenance = Provenance::Template;
  for (auto& edge : graph.edges) edge.provenance = Provenance::Template;
  return graph;
}

namespace {

/// Accepts the provider's graph JSON, which may omit bookkeeping fields, and
/// re-keys it with engine-generated ids.
NarrativeGraph adopt_generated_graph(const std::string& output, std::string_view prompt) {
  Json doc = extract_json_object(output);
  if (!doc.contains("title") || (doc["title"].is_string() && doc["title"].get<std::string>().empty())) {
    doc["title"] = std::string(prompt);
  }
  doc["id"] = "generated";
  doc["version"] = 1;
  if (!doc.contains("mode")) doc["mode"] = "flexible";
  if (!doc.contains("metadata")) doc["metadata"] = Json::object();
  if (!doc.contains("start_node") && doc.contains("nodes") && doc["nodes"].is_array() && !doc["nodes"].empty()) {
    doc["start_node"] = doc["nodes"][0].value("id", "");
  }
  NarrativeGraph raw = graph_from_value(doc);
  if (raw.nodes.empty()) throw Error(Errc::SchemaViolation, "generated graph has no nodes");
  if (auto diagnostics = validate(raw); has_errors(diagnostics)) {
    const auto& first = *std::find_if(diagnostics.begin(), diagnostics.end(),
                                      [](const Diagnostic& d) { return d.severity == Severity::Error; });
    throw Error(Errc::InvalidGraph, first.code + " " + first.message);
  }

  NarrativeGraph graph;
  graph.id = fresh_graph_id();
  graph.title = raw.title;
  graph.mode = raw.mode;
  graph.version = 1;
  graph.metadata = raw.metadata;
  graph.metadata["prompt"] = std::string(prompt);

  std::map<NodeId, NodeId> renamed;
  auto mint = [&] { return next_generated_id(graph); };
  for (const auto& [old_id, node] : raw.nodes) {
    SceneNode copy = node;
    copy.id = NodeId(mint());
    copy.provenance = Provenance::Generated;
    renamed[old_id] = copy.id;
    graph.nodes.emplace(copy.id, std::move(copy));
  }
  graph.start_node = renamed.at(raw.start_node);
  for (const auto& edge : raw.edges) {
    TransitionEdge copy = edge;
    copy.id = EdgeId(mint());
    copy.from = renamed.at(edge.from);
    copy.to = renamed.at(edge.to);
    copy.provenance = Provenance::Generated;
    graph.edges.push_back(std::move(copy));
  }
  return graph;
}

std::vector<std::string> labels_leaving(const NarrativeGraph& graph, const NodeId& node) {
  std::vector<std::string> labels;
  for (const auto& edge : outgoing_edges(graph, node)) labels.push_back(edge.intent.label);
  return labels;
}

}  // namespace

NarrativeGraph generate_graph(Provider& provider, std::string_view prompt) {
  if (text::trim(prompt).empty()) throw Error(Errc::InvalidArgument, "generation prompt must not be empty");
  const auto& tpl = prompt_template("generate");
  PromptVariables vars{{"prompt", std::string(prompt)}};
  PromptRequest request;
  request.task = PromptTask::Generate;
  request.system_text = tpl.render_system(vars);
  request.user_text = tpl.render_user(vars);
  request.variables = std::move(vars);
  return structured_call(provider, std::move(request), Errc::MalformedGeneration,
                         [&](const std::string& out) { return adopt_generated_graph(out, prompt); });
}

AppendedBranch append_generated_branch(const NarrativeGraph& graph, const NodeId& from,
                                       const BranchProposal& proposal, std::vector<std::string> examples) {
  AppendedBranch out;
  SceneNode node;
  node.id = NodeId(next_generated_id(graph));
  node.avatar_utterance = proposal.avatar_reply;
  node.description = proposal.scene_description;
  node.terminal = proposal.terminal;
  node.provenance = Provenance::Generated;
  out.node_id = node.id;
  out.graph = apply_mutation(graph, mutation::AddNode{std::move(node)});

  TransitionEdge edge;
  edge.id = EdgeId(next_generated_id(out.graph));
  edge.from = from;
  edge.to = out.node_id;
  edge.intent = ResponseIntent{proposal.intent_label, proposal.intent_description, std::move(examples)};
  edge.provenance = Provenance::Generated;
  out.edge_id = edge.id;
  out.graph = apply_mutation(out.graph, mutation::AddEdge{std::move(edge)});
  return out;
}

NarrativeGraph expand_node(Provider& provider, const NarrativeGraph& graph, const NodeId& node,
                           std::string_view instruction) {
  const SceneNode* scene = graph.find_node(node);
  if (!scene) throw Error(Errc::UnknownId, "unknown node " + node.str(), node.str());
  auto proposals = propose_expansion(provider, *scene, instruction, labels_leaving(graph, node));
  NarrativeGraph result = graph;
  for (const auto& proposal : proposals) {
    result = append_generated_branch(result, node, proposal).graph;
  }
  return result;
}

}  // namespace gloss
