#include "gloss/dot.hpp"

#include <set>
#include <sstream>

#include "gloss/error.hpp"
#include "gloss/text.hpp"

namespace gloss {

std::vector<std::string> Path::flatten() const {
  std::vector<std::string> out;
  if (start.empty()) return out;
  out.push_back(start.str());
  for (const auto& [edge, node] : steps) {
    out.push_back(edge.str());
    out.push_back(node.str());
  }
  return out;
}

namespace {

std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_dot(const NarrativeGraph& graph, const std::optional<Path>& highlight) {
  std::set<NodeId> lit_nodes;
  std::set<EdgeId> lit_edges;
  if (highlight && !highlight->start.empty()) {
    auto need_node = [&](const NodeId& id) {
      if (!graph.find_node(id)) throw Error(Errc::UnknownId, "highlight names unknown node " + id.str(), id.str());
      lit_nodes.insert(id);
    };
    need_node(highlight->start);
    for (const auto& [edge, node] : highlight->steps) {
      if (!graph.find_edge(edge)) throw Error(Errc::UnknownId, "highlight names unknown edge " + edge.str(), edge.str());
      lit_edges.insert(edge);
      need_node(node);
    }
  }

  std::ostringstream out;
  out << "digraph \"" << escape(graph.id.str()) << "\" {\n";
  for (const auto& [id, node] : graph.nodes) {
    out << "  \"" << escape(id.str()) << "\" [label=\"" << escape(id.str()) << ": "
        << escape(text::utf8_prefix(node.avatar_utterance, 40)) << '"';
    if (node.terminal) out << ", shape=doublecircle";
    if (lit_nodes.count(id)) out << ", " << kHighlightAttribute;
    out << "];\n";
  }
  for (const auto& edge : graph.edges) {
    out << "  \"" << escape(edge.from.str()) << "\" -> \"" << escape(edge.to.str())
        << "\" [label=\"" << escape(edge.intent.label) << '"';
    if (lit_edges.count(edge.id)) out << ", " << kHighlightAttribute;
    out << "];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace gloss
