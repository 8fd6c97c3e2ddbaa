#include "gloss/json_io.hpp"

#include <set>

#include "gloss/error.hpp"

namespace gloss {

std::string canonical_dump(const Json& value) {
  return value.dump(2, ' ', false, Json::error_handler_t::strict) + "\n";
}

Json graph_to_value(const NarrativeGraph& graph) {
  Json nodes = Json::array();
  for (const auto& [id, node] : graph.nodes) {
    nodes.push_back({
        {"id", id.str()},
        {"avatar_utterance", node.avatar_utterance},
        {"description", node.description},
        {"terminal", node.terminal},
        {"provenance", to_string(node.provenance)},
    });
  }
  Json edges = Json::array();
  for (const auto& edge : graph.edges) {
    edges.push_back({
        {"id", edge.id.str()},
        {"from", edge.from.str()},
        {"to", edge.to.str()},
        {"intent",
         {{"label", edge.intent.label},
          {"description", edge.intent.description},
          {"examples", edge.intent.examples}}},
        {"provenance", to_string(edge.provenance)},
    });
  }
  return Json{
      {"id", graph.id.str()},
      {"title", graph.title},
      {"mode", to_string(graph.mode)},
      {"start_node", graph.start_node.str()},
      {"version", graph.version},
      {"metadata", graph.metadata},
      {"nodes", std::move(nodes)},
      {"edges", std::move(edges)},
  };
}

std::string to_json(const NarrativeGraph& graph) { return canonical_dump(graph_to_value(graph)); }

Json parse_json_text(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::SchemaViolation, std::string("not valid JSON: ") + e.what(), "");
  }
}

namespace {

[[noreturn]] void violation(const std::string& path, const std::string& what) {
  throw Error(Errc::SchemaViolation, (path.empty() ? "/" : path) + ": " + what, path);
}

const Json& field(const Json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) violation(path + "/" + key, "required field is missing");
  return *it;
}

const Json* optional_field(const Json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

std::string string_at(const Json& value, const std::string& path, bool allow_empty = true) {
  if (!value.is_string()) violation(path, "expected a string");
  auto out = value.get<std::string>();
  if (!allow_empty && out.empty()) violation(path, "must not be empty");
  return out;
}

std::string string_field(const Json& obj, const std::string& path, const char* key,
                         bool allow_empty = true) {
  return string_at(field(obj, path, key), path + "/" + key, allow_empty);
}

std::string optional_string(const Json& obj, const std::string& path, const char* key) {
  const Json* v = optional_field(obj, key);
  return v ? string_at(*v, path + "/" + key) : std::string();
}

Provenance provenance_field(const Json& obj, const std::string& path) {
  const Json* v = optional_field(obj, "provenance");
  if (!v) return Provenance::Authored;
  auto parsed = parse_provenance(string_at(*v, path + "/provenance"));
  if (!parsed) violation(path + "/provenance", "expected authored, generated or template");
  return *parsed;
}

const Json& object_at(const Json& value, const std::string& path) {
  if (!value.is_object()) violation(path, "expected an object");
  return value;
}

SceneNode read_node(const Json& value, const std::string& path) {
  object_at(value, path);
  SceneNode node;
  node.id = NodeId(string_field(value, path, "id", false));
  node.avatar_utterance = string_field(value, path, "avatar_utterance", false);
  node.description = optional_string(value, path, "description");
  if (const Json* t = optional_field(value, "terminal")) {
    if (!t->is_boolean()) violation(path + "/terminal", "expected a boolean");
    node.terminal = t->get<bool>();
  }
  node.provenance = provenance_field(value, path);
  return node;
}

TransitionEdge read_edge(const Json& value, const std::string& path) {
  object_at(value, path);
  TransitionEdge edge;
  edge.id = EdgeId(string_field(value, path, "id", false));
  edge.from = NodeId(string_field(value, path, "from", false));
  edge.to = NodeId(string_field(value, path, "to", false));
  const std::string ipath = path + "/intent";
  const Json& intent = object_at(field(value, path, "intent"), ipath);
  edge.intent.label = string_field(intent, ipath, "label", false);
  if (edge.intent.label.find('\n') != std::string::npos) {
    violation(ipath + "/label", "must be a single line");
  }
  edge.intent.description = optional_string(intent, ipath, "description");
  if (const Json* examples = optional_field(intent, "examples")) {
    if (!examples->is_array()) violation(ipath + "/examples", "expected an array");
    for (std::size_t i = 0; i < examples->size(); ++i) {
      edge.intent.examples.push_back(
          string_at((*examples)[i], ipath + "/examples/" + std::to_string(i)));
    }
  }
  edge.provenance = provenance_field(value, path);
  return edge;
}

}  // namespace

NarrativeGraph graph_from_value(const Json& value) {
  object_at(value, "");
  NarrativeGraph graph;
  graph.id = GraphId(string_field(value, "", "id", false));
  graph.title = string_field(value, "", "title", false);
  auto mode = parse_dialogue_mode(string_field(value, "", "mode"));
  if (!mode) violation("/mode", "expected strict or flexible");
  graph.mode = *mode;
  graph.start_node = NodeId(string_field(value, "", "start_node"));

  const Json& version = field(value, "", "version");
  if (!version.is_number_integer() || version.get<std::int64_t>() < 1) {
    violation("/version", "expected a positive integer");
  }
  graph.version = version.get<std::int64_t>();

  if (const Json* metadata = optional_field(value, "metadata")) {
    object_at(*metadata, "/metadata");
    for (const auto& [key, entry] : metadata->items()) {
      graph.metadata[key] = string_at(entry, "/metadata/" + key);
    }
  }

  const Json& nodes = field(value, "", "nodes");
  if (!nodes.is_array()) violation("/nodes", "expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = "/nodes/" + std::to_string(i);
    SceneNode node = read_node(nodes[i], path);
    if (graph.nodes.count(node.id)) violation(path + "/id", "duplicate node id " + node.id.str());
    graph.nodes.emplace(node.id, std::move(node));
  }

  const Json& edges = field(value, "", "edges");
  if (!edges.is_array()) violation("/edges", "expected an array");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    graph.edges.push_back(read_edge(edges[i], "/edges/" + std::to_string(i)));
  }
  return graph;
}

NarrativeGraph from_json(std::string_view text) { return graph_from_value(parse_json_text(text)); }

}  // namespace gloss
