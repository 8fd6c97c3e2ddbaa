#include "gloss/graph.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <deque>
#include <random>
#include <set>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "gloss/error.hpp"

namespace gloss {

std::string_view to_string(DialogueMode mode) noexcept {
  return mode == DialogueMode::Strict ? "strict" : "flexible";
}

std::string_view to_string(Provenance provenance) noexcept {
  switch (provenance) {
    case Provenance::Authored: return "authored";
    case Provenance::Generated: return "generated";
    case Provenance::Template: return "template";
  }
  return "authored";
}

std::string_view to_string(Severity severity) noexcept {
  return severity == Severity::Error ? "error" : "warning";
}

std::optional<DialogueMode> parse_dialogue_mode(std::string_view text) noexcept {
  if (text == "strict") return DialogueMode::Strict;
  if (text == "flexible") return DialogueMode::Flexible;
  return std::nullopt;
}

std::optional<Provenance> parse_provenance(std::string_view text) noexcept {
  if (text == "authored") return Provenance::Authored;
  if (text == "generated") return Provenance::Generated;
  if (text == "template") return Provenance::Template;
  return std::nullopt;
}

std::string fold_label(std::string_view label) {
  std::string out(label);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

const SceneNode* NarrativeGraph::find_node(const NodeId& id) const {
  auto it = nodes.find(id);
  return it == nodes.end() ? nullptr : &it->second;
}

const TransitionEdge* NarrativeGraph::find_edge(const EdgeId& id) const {
  auto it = std::find_if(edges.begin(), edges.end(),
                         [&](const TransitionEdge& e) { return e.id == id; });
  return it == edges.end() ? nullptr : &*it;
}

GraphId fresh_graph_id() {
  thread_local std::mt19937_64 engine{[] {
    std::random_device rd;
    std::seed_seq seq{rd(), rd(), rd(), rd()};
    return std::mt19937_64(seq);
  }()};
  char buf[24];
  std::snprintf(buf, sizeof buf, "g-%016llx", static_cast<unsigned long long>(engine()));
  return GraphId(buf);
}

NarrativeGraph new_graph(std::string title, DialogueMode mode) {
  if (title.empty()) throw Error(Errc::EmptyTitle, "graph title must not be empty");
  NarrativeGraph graph;
  graph.id = fresh_graph_id();
  graph.title = std::move(title);
  graph.mode = mode;
  graph.version = 1;
  return graph;
}

namespace {

void check_node_fields(const SceneNode& node) {
  if (node.id.empty()) throw Error(Errc::InvalidElement, "node id must not be empty");
  if (node.avatar_utterance.empty()) {
    throw Error(Errc::InvalidElement, "node " + node.id.str() + " has an empty avatar utterance",
                node.id.str());
  }
}

void check_edge_fields(const TransitionEdge& edge) {
  if (edge.id.empty()) throw Error(Errc::InvalidElement, "edge id must not be empty");
  if (edge.intent.label.empty() || edge.intent.label.find('\n') != std::string::npos) {
    throw Error(Errc::InvalidElement,
                "edge " + edge.id.str() + " needs a single-line, non-empty intent label",
                edge.id.str());
  }
}

bool id_in_use(const NarrativeGraph& graph, const std::string& id) {
  return graph.nodes.count(NodeId(id)) > 0 || graph.find_edge(EdgeId(id)) != nullptr;
}

void require_node(const NarrativeGraph& graph, const NodeId& id) {
  if (!graph.find_node(id)) throw Error(Errc::UnknownId, "unknown node " + id.str(), id.str());
}

void check_label_free(const NarrativeGraph& graph, const TransitionEdge& edge) {
  const auto folded = fold_label(edge.intent.label);
  for (const auto& other : graph.edges) {
    if (other.id != edge.id && other.from == edge.from && fold_label(other.intent.label) == folded) {
      throw Error(Errc::DuplicateIntentLabel,
                  "node " + edge.from.str() + " already has an intent labelled '" +
                      other.intent.label + "'",
                  edge.id.str());
    }
  }
}

struct MutationVisitor {
  NarrativeGraph& g;

  void operator()(const mutation::AddNode& m) {
    check_node_fields(m.node);
    if (id_in_use(g, m.node.id.str())) {
      throw Error(Errc::DuplicateId, "id " + m.node.id.str() + " already exists", m.node.id.str());
    }
    if (g.nodes.empty()) g.start_node = m.node.id;
    g.nodes.emplace(m.node.id, m.node);
  }

  void operator()(const mutation::UpdateNode& m) {
    check_node_fields(m.node);
    require_node(g, m.node.id);
    g.nodes[m.node.id] = m.node;
  }

  void operator()(const mutation::RemoveNode& m) {
    require_node(g, m.id);
    if (m.id == g.start_node && g.nodes.size() > 1) {
      throw Error(Errc::WouldDangle,
                  "cannot remove start node " + m.id.str() + " while other nodes remain; "
                  "move the start first",
                  m.id.str());
    }
    g.nodes.erase(m.id);
    std::erase_if(g.edges, [&](const TransitionEdge& e) { return e.from == m.id || e.to == m.id; });
    if (g.nodes.empty()) g.start_node = NodeId();
  }

  void operator()(const mutation::AddEdge& m) {
    check_edge_fields(m.edge);
    if (id_in_use(g, m.edge.id.str())) {
      throw Error(Errc::DuplicateId, "id " + m.edge.id.str() + " already exists", m.edge.id.str());
    }
    require_node(g, m.edge.from);
    require_node(g, m.edge.to);
    check_label_free(g, m.edge);
    g.edges.push_back(m.edge);
  }

  void operator()(const mutation::UpdateEdge& m) {
    check_edge_fields(m.edge);
    auto it = std::find_if(g.edges.begin(), g.edges.end(),
                           [&](const TransitionEdge& e) { return e.id == m.edge.id; });
    if (it == g.edges.end()) {
      throw Error(Errc::UnknownId, "unknown edge " + m.edge.id.str(), m.edge.id.str());
    }
    require_node(g, m.edge.from);
    require_node(g, m.edge.to);
    check_label_free(g, m.edge);
    *it = m.edge;
  }

  void operator()(const mutation::RemoveEdge& m) {
    auto removed = std::erase_if(g.edges, [&](const TransitionEdge& e) { return e.id == m.id; });
    if (removed == 0) throw Error(Errc::UnknownId, "unknown edge " + m.id.str(), m.id.str());
  }

  void operator()(const mutation::SetStart& m) {
    require_node(g, m.id);
    g.start_node = m.id;
  }

  void operator()(const mutation::SetMode& m) { g.mode = m.mode; }
};

}  // namespace

NarrativeGraph apply_mutation(const NarrativeGraph& graph, const Mutation& mutation) {
  NarrativeGraph next = graph;
  std::visit(MutationVisitor{next}, mutation);
  ++next.version;
  return next;
}

std::vector<TransitionEdge> outgoing_edges(const NarrativeGraph& graph, const NodeId& node) {
  require_node(graph, node);
  std::vector<TransitionEdge> out;
  for (const auto& edge : graph.edges) {
    if (edge.from == node) out.push_back(edge);
  }
  return out;
}

std::string next_generated_id(const NarrativeGraph& graph) {
  unsigned long long highest = 0;
  auto consider = [&](const std::string& id) {
    constexpr std::string_view prefix = "gen-";
    if (id.size() <= prefix.size() || id.compare(0, prefix.size(), prefix) != 0) return;
    auto digits = std::string_view(id).substr(prefix.size());
    if (digits.size() > 18 ||
        !std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); })) {
      return;
    }
    highest = std::max(highest, std::stoull(std::string(digits)));
  };
  for (const auto& [id, node] : graph.nodes) consider(id.str());
  for (const auto& edge : graph.edges) consider(edge.id.str());
  char buf[32];
  std::snprintf(buf, sizeof buf, "gen-%03llu", highest + 1);
  return buf;
}

std::vector<Diagnostic> validate(const NarrativeGraph& graph) {
  std::vector<Diagnostic> out;
  auto emit = [&](const char* code, Severity severity, std::string subject, std::string message) {
    out.push_back(Diagnostic{code, severity, std::move(message), std::move(subject)});
  };

  const bool start_ok = graph.nodes.count(graph.start_node) > 0;
  if (!graph.nodes.empty() && !start_ok) {
    emit("E001", Severity::Error, "graph",
         graph.start_node.empty() ? "graph has nodes but no start node"
                                  : "start node " + graph.start_node.str() + " is not a node");
  } else if (graph.nodes.empty() && !graph.start_node.empty()) {
    emit("E001", Severity::Error, "graph",
         "start node " + graph.start_node.str() + " set on a graph without nodes");
  }

  for (const auto& edge : graph.edges) {
    for (const NodeId* end : {&edge.from, &edge.to}) {
      if (!graph.find_node(*end)) {
        emit("E002", Severity::Error, edge.id.str(),
             "edge " + edge.id.str() + " references missing node '" + end->str() + "'");
      }
    }
  }

  // E003: one diagnostic per (node, folded label) group with more than one edge.
  std::map<std::pair<NodeId, std::string>, int> label_counts;
  for (const auto& edge : graph.edges) ++label_counts[{edge.from, fold_label(edge.intent.label)}];
  for (const auto& [key, count] : label_counts) {
    if (count > 1) {
      emit("E003", Severity::Error, key.first.str(),
           "node " + key.first.str() + " has " + std::to_string(count) +
               " outgoing intents labelled '" + key.second + "'");
    }
  }

  std::map<std::string, int> edge_id_counts;
  for (const auto& edge : graph.edges) ++edge_id_counts[edge.id.str()];
  for (const auto& [id, count] : edge_id_counts) {
    if (count > 1) {
      emit("E004", Severity::Error, id,
           "edge id " + id + " is used by " + std::to_string(count) + " edges");
    }
    if (graph.nodes.count(NodeId(id))) {
      emit("E004", Severity::Error, id, "id " + id + " names both a node and an edge");
    }
  }

  if (start_ok) {
    std::unordered_map<NodeId, std::vector<NodeId>> adjacency;
    for (const auto& edge : graph.edges) adjacency[edge.from].push_back(edge.to);
    std::unordered_set<NodeId> seen{graph.start_node};
    std::deque<NodeId> frontier{graph.start_node};
    while (!frontier.empty()) {
      NodeId current = frontier.front();
      frontier.pop_front();
      for (const auto& next : adjacency[current]) {
        if (graph.nodes.count(next) && seen.insert(next).second) frontier.push_back(next);
      }
    }
    for (const auto& [id, node] : graph.nodes) {
      if (!seen.count(id)) {
        emit("W001", Severity::Warning, id.str(),
             "node " + id.str() + " is unreachable from start node " + graph.start_node.str());
      }
    }
  }

  std::set<NodeId> has_outgoing;
  for (const auto& edge : graph.edges) has_outgoing.insert(edge.from);
  for (const auto& [id, node] : graph.nodes) {
    if (node.terminal && has_outgoing.count(id)) {
      emit("W002", Severity::Warning, id.str(), "terminal node " + id.str() + " has outgoing edges");
    }
    if (!node.terminal && !has_outgoing.count(id)) {
      emit("W003", Severity::Warning, id.str(),
           "non-terminal node " + id.str() + " has no outgoing edges");
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const Diagnostic& a, const Diagnostic& b) {
    return std::tie(a.code, a.subject) < std::tie(b.code, b.subject);
  });
  return out;
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

}  // namespace gloss
