// Python bindings. Graphs and sessions cross the boundary as their canonical
// JSON text; the gloss package wraps these in dict-friendly helpers.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gloss/analysis.hpp"
#include "gloss/authoring.hpp"
#include "gloss/dot.hpp"
#include "gloss/dsl.hpp"
#include "gloss/error.hpp"
#include "gloss/gateway.hpp"
#include "gloss/json_io.hpp"
#include "gloss/session.hpp"

namespace py = pybind11;
using namespace gloss;

namespace {

ProviderHandle provider_named(const std::string& name) {
  if (name == "mock") return std::make_shared<MockProvider>();
  if (name == "remote" || name == "env") return make_provider(ProviderConfig::from_env());
  throw Error(Errc::InvalidArgument, "provider must be 'mock', 'remote' or 'env'");
}

std::string diagnostics_json(const std::vector<Diagnostic>& diagnostics) {
  Json out = Json::array();
  for (const auto& d : diagnostics) {
    out.push_back({{"code", d.code}, {"severity", to_string(d.severity)}, {"message", d.message}, {"subject", d.subject}});
  }
  return out.dump();
}

std::optional<Path> path_from_json(const std::optional<std::string>& text) {
  if (!text) return std::nullopt;
  const auto flat = parse_json_text(*text).get<std::vector<std::string>>();
  if (flat.empty() || flat.size() % 2 == 0) throw Error(Errc::InvalidArgument, "path must alternate node, edge, ..., node");
  Path path{NodeId(flat[0]), {}};
  for (std::size_t i = 1; i + 1 < flat.size(); i += 2) path.steps.emplace_back(EdgeId(flat[i]), NodeId(flat[i + 1]));
  return path;
}

}  // namespace

PYBIND11_MODULE(_gloss, m) {
  m.doc() = "GLOSS engine core";

  // GlossError(message) with .code (e.g. "VersionConflict") and .detail.
  static py::exception<Error> error(m, "GlossError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::gil_scoped_acquire gil;
      py::object instance = py::reinterpret_borrow<py::object>(error.ptr())(py::str(e.what()));
      instance.attr("code") = py::str(std::string(to_string(e.code())));
      instance.attr("detail") = py::str(e.detail());
      PyErr_SetObject(error.ptr(), instance.ptr());
    }
  });

  // graph-core
  m.def("validate", [](const std::string& graph) { return diagnostics_json(validate(from_json(graph))); },
        py::arg("graph_json"), "Diagnostics as a JSON array.");
  m.def("canonical_graph", [](const std::string& graph) { return to_json(from_json(graph)); }, py::arg("graph_json"));
  m.def("new_graph", [](const std::string& title, const std::string& mode) {
        auto parsed = parse_dialogue_mode(mode);
        if (!parsed) throw Error(Errc::InvalidArgument, "mode must be strict or flexible");
        return to_json(new_graph(title, *parsed));
      },
      py::arg("title"), py::arg("mode") = "flexible");

  // authoring
  m.def("parse_dsl", [](const std::string& source) {
        auto result = parse_dsl(source);
        Json diagnostics = Json::array();
        for (const auto& d : result.diagnostics) {
          diagnostics.push_back(
              {{"line", d.line}, {"column", d.column}, {"severity", to_string(d.severity)}, {"message", d.message}});
        }
        std::optional<std::string> graph;
        if (result.graph) graph = to_json(*result.graph);
        return std::make_pair(graph, diagnostics.dump());
      },
      py::arg("source"), "(graph_json or None, diagnostics_json)");
  m.def("render_dsl", [](const std::string& graph) { return render_dsl(from_json(graph)); }, py::arg("graph_json"));
  m.def("render_dot",
        [](const std::string& graph, const std::optional<std::string>& path) {
          return render_dot(from_json(graph), path_from_json(path));
        },
        py::arg("graph_json"), py::arg("path_json") = py::none());
  m.def("template_ids", [] {
    std::vector<std::string> ids;
    for (const auto& t : template_registry()) ids.push_back(t.id);
    return ids;
  });
  m.def("instantiate_template", [](const std::string& id) { return to_json(instantiate_template(id)); },
        py::arg("template_id"));
  m.def("generate_graph",
        [](const std::string& prompt, const std::string& provider) {
          py::gil_scoped_release release;
          return to_json(generate_graph(*provider_named(provider), prompt));
        },
        py::arg("prompt"), py::arg("provider") = "mock");
  m.def("expand_node",
        [](const std::string& graph, const std::string& node, const std::string& instruction, const std::string& provider) {
          py::gil_scoped_release release;
          return to_json(expand_node(*provider_named(provider), from_json(graph), NodeId(node), instruction));
        },
        py::arg("graph_json"), py::arg("node_id"), py::arg("instruction"), py::arg("provider") = "mock");

  // llm-gateway
  m.def("word_set", [](const std::string& text) { return mock::word_set(text); }, py::arg("text"));
  m.def("jaccard", [](const std::string& a, const std::string& b) { return mock::jaccard(mock::word_set(a), mock::word_set(b)); },
        py::arg("a"), py::arg("b"));
  m.def("classify",
        [](const std::string& utterance, const std::string& graph, const std::string& node, const std::string& provider) {
          const auto g = from_json(graph);
          std::vector<IntentCandidate> candidates;
          for (const auto& e : outgoing_edges(g, NodeId(node))) candidates.push_back({e.id, e.intent});
          py::gil_scoped_release release;
          std::vector<std::pair<std::string, double>> out;
          for (const auto& match : classify_intent(*provider_named(provider), utterance, candidates)) {
            out.emplace_back(match.edge_id.str(), match.confidence);
          }
          return out;
        },
        py::arg("utterance"), py::arg("graph_json"), py::arg("node_id"), py::arg("provider") = "mock",
        "Ranked (edge_id, confidence) pairs for the node's outgoing intents.");

  // session-engine
  m.def("start_session",
        [](const std::string& graph, std::optional<double> threshold, std::optional<std::string> id) {
          SessionOptions options;
          options.threshold = threshold;
          if (id) options.id = SessionId(*id);
          auto start = start_session(from_json(graph), options);
          return std::make_pair(session_to_json(start.session), start.opening_utterance);
        },
        py::arg("graph_json"), py::arg("threshold") = py::none(), py::arg("session_id") = py::none(),
        "(session_json, opening_utterance)");
  m.def("submit_turn",
        [](const std::string& session, const std::string& graph, const std::string& utterance, const std::string& provider) {
          const auto s = session_from_json(session);
          const auto g = from_json(graph);
          py::gil_scoped_release release;
          auto result = submit_turn(s, g, *provider_named(provider), utterance);
          return std::tuple{session_to_json(result.session), to_json(result.graph), turn_to_value(result.turn).dump()};
        },
        py::arg("session_json"), py::arg("graph_json"), py::arg("utterance"), py::arg("provider") = "mock",
        "(session_json, graph_json, turn_json)");
  m.def("end_session", [](const std::string& session) { return session_to_json(end_session(session_from_json(session))); },
        py::arg("session_json"));

  // analysis
  m.def("path_of",
        [](const std::string& session, const std::string& graph) {
          return path_of(session_from_json(session), from_json(graph)).flatten();
        },
        py::arg("session_json"), py::arg("graph_json"));
  m.def("session_report",
        [](const std::string& session) { return report_to_value(session_report(session_from_json(session))).dump(); },
        py::arg("session_json"));
  m.def("cohort_summary",
        [](const std::string& graph, const std::vector<std::string>& sessions) {
          std::vector<Session> parsed;
          for (const auto& s : sessions) parsed.push_back(session_from_json(s));
          return cohort_to_value(cohort_summary(from_json(graph), parsed)).dump();
        },
        py::arg("graph_json"), py::arg("session_jsons"));
  m.def("overlay_dot",
        [](const std::string& graph, const std::string& session) {
          return overlay_dot(from_json(graph), session_from_json(session));
        },
        py::arg("graph_json"), py::arg("session_json"));
}
