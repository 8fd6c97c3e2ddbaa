#include "gloss/service.hpp"

#include <cstdlib>

#include "gloss/analysis.hpp"
#include "gloss/authoring.hpp"
#include "gloss/dot.hpp"
#include "gloss/text.hpp"

namespace gloss {

namespace {

Response json_response(int status, const Json& value) {
  Response r;
  r.status = status;
  r.body = canonical_dump(value);
  return r;
}

std::string etag(std::int64_t version) { return "\"" + std::to_string(version) + "\""; }

Response graph_response(int status, const StoredDocument& doc) {
  Response r;
  r.status = status;
  r.body = doc.body;
  r.headers["ETag"] = etag(doc.version);
  return r;
}

[[noreturn]] void bad_request(const std::string& message) { throw Error(Errc::InvalidArgument, message); }

// Syntax errors are the client's fault in a different way from schema
// violations, so they are told apart here rather than in parse_json_text.
Json parse_body(const Request& request) {
  if (text::trim(request.body).empty()) return Json::object();
  try {
    return Json::parse(request.body);
  } catch (const Json::parse_error& e) {
    throw ApiError{400, "bad_request", std::string("request body is not JSON: ") + e.what(), nullptr};
  }
}

std::string string_member(const Json& body, const char* key, bool required = true) {
  if (!body.is_object()) throw ApiError{400, "bad_request", "request body must be a JSON object", nullptr};
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) {
    if (required) throw ApiError{422, "bad_request", std::string("missing field '") + key + "'", nullptr};
    return {};
  }
  if (!it->is_string()) throw ApiError{422, "bad_request", std::string("field '") + key + "' must be a string", nullptr};
  return it->get<std::string>();
}

std::optional<std::int64_t> if_match(const Request& request) {
  auto it = request.headers.find("if-match");
  if (it == request.headers.end()) return std::nullopt;
  std::string value(text::trim(it->second));
  if (value.rfind("W/", 0) == 0) value = value.substr(2);
  if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
  try {
    std::size_t used = 0;
    auto v = std::stoll(value, &used);
    if (used == value.size() && v >= 0) return v;
  } catch (const std::exception&) {
  }
  throw ApiError{400, "bad_request", "If-Match must carry a graph version", nullptr};
}

Json diagnostics_to_value(const std::vector<Diagnostic>& diagnostics) {
  Json out = Json::array();
  for (const auto& d : diagnostics) {
    out.push_back({{"code", d.code},
                   {"severity", to_string(d.severity)},
                   {"message", d.message},
                   {"subject", d.subject}});
  }
  return out;
}

void require_valid(const NarrativeGraph& graph) {
  auto diagnostics = validate(graph);
  if (has_errors(diagnostics)) {
    throw ApiError{422, "validation_failed", "graph has error diagnostics",
                   Json{{"diagnostics", diagnostics_to_value(diagnostics)}}};
  }
}

// Accepts a partial graph document for creation: {title, mode?} alone makes
// an empty graph; id, version, start_node and metadata get defaults.
NarrativeGraph graph_for_create(Json body) {
  if (!body.is_object()) throw ApiError{400, "bad_request", "request body must be a JSON object", nullptr};
  if (!body.contains("id")) body["id"] = fresh_graph_id().str();
  if (!body.contains("mode")) body["mode"] = "flexible";
  if (!body.contains("version")) body["version"] = 1;
  if (!body.contains("nodes")) body["nodes"] = Json::array();
  if (!body.contains("edges")) body["edges"] = Json::array();
  if (!body.contains("start_node")) {
    body["start_node"] = body["nodes"].empty() || !body["nodes"][0].is_object() ? Json("") : body["nodes"][0].value("id", Json(""));
  }
  return graph_from_value(body);
}

std::string store_graph_body(const NarrativeGraph& graph) { return to_json(graph); }

NarrativeGraph load_graph(const StoredDocument& doc) { return from_json(doc.body); }
Session load_session(const StoredDocument& doc) { return session_from_json(doc.body); }

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

}  // namespace

ApiError api_error_for(const Error& error) {
  const std::string message = error.what();
  if (error.is_provider_error()) return {502, "provider_error", message, nullptr};
  switch (error.code()) {
    case Errc::NotFound:
    case Errc::UnknownTemplate:
      return {404, "not_found", message, nullptr};
    case Errc::VersionConflict:
      return {409, "version_conflict", message, nullptr};
    case Errc::SessionBusy:
      return {409, "session_busy", message, nullptr};
    case Errc::SchemaViolation:
      return {422, "validation_failed", message, Json{{"pointer", error.detail()}}};
    case Errc::InvalidGraph:
    case Errc::InconsistentTranscript:
      return {422, "validation_failed", message, nullptr};
    case Errc::IoFailure:
      return {500, "internal", message, nullptr};
    default:
      return {422, "bad_request", message, nullptr};
  }
}

Response error_response(const ApiError& error) {
  Json payload{{"code", error.code}, {"message", error.message}};
  if (error.details.is_object()) {
    for (const auto& [k, v] : error.details.items()) payload[k] = v;
  }
  return json_response(error.status, payload);
}

ServiceConfig ServiceConfig::from_env() {
  ServiceConfig config;
  if (const char* dir = std::getenv("GLOSS_DATA_DIR"); dir && *dir) config.data_dir = dir;
  if (const char* token = std::getenv("GLOSS_TOKEN")) config.token = token;
  config.provider = make_provider(ProviderConfig::from_env());
  return config;
}

Service::Service(ServiceConfig config) : config_(std::move(config)), store_(config_.data_dir) {
  if (!config_.provider) config_.provider = std::make_shared<MockProvider>();
}

Timestamp Service::now() const { return config_.clock ? config_.clock() : system_now(); }

Response Service::handle(const Request& request) {
  try {
    if (!config_.token.empty()) {
      auto it = request.headers.find("authorization");
      if (it == request.headers.end() || it->second != "Bearer " + config_.token) {
        return error_response({401, "unauthorized", "missing or wrong bearer token", nullptr});
      }
    }
    return dispatch(request);
  } catch (const ApiError& e) {
    return error_response(e);
  } catch (const Error& e) {
    return error_response(api_error_for(e));
  } catch (const Json::exception& e) {
    return error_response({422, "bad_request", std::string("malformed field: ") + e.what(), nullptr});
  } catch (const std::exception& e) {
    return error_response({500, "internal", e.what(), nullptr});
  }
}

Response Service::dispatch(const Request& req) {
  const auto p = split_path(req.path);
  const auto& m = req.method;
  auto route_error = [&] {
    return error_response({404, "not_found", "no route for " + m + " " + req.path, nullptr});
  };

  if (p.empty()) return route_error();
  if (p[0] == "graphs") {
    if (p.size() == 1) {
      if (m == "POST") return create_graph(req);
      if (m == "GET") return list_graphs();
    } else if (p.size() == 2 && p[1] == "generate" && m == "POST") {
      return generate_graph(req);
    } else if (p.size() == 2) {
      if (m == "GET") return get_graph(p[1]);
      if (m == "PUT") return put_graph(p[1], req);
      if (m == "DELETE") return delete_graph(p[1], req);
    } else if (p.size() == 3) {
      if (p[2] == "expand" && m == "POST") return expand_graph(p[1], req);
      if (p[2] == "validate" && m == "GET") return validate_graph(p[1]);
      if (p[2] == "dot" && m == "GET") return graph_dot(p[1], req);
      if (p[2] == "cohort-summary" && m == "GET") return cohort(p[1]);
    }
  } else if (p[0] == "templates") {
    if (p.size() == 1 && m == "GET") return list_templates();
    if (p.size() == 3 && p[2] == "instantiate" && m == "POST") return instantiate(p[1]);
  } else if (p[0] == "sessions") {
    if (p.size() == 1 && m == "POST") return create_session(req);
    if (p.size() == 1 && m == "GET") return list_sessions(req);
    if (p.size() == 2 && m == "GET") return get_session(p[1]);
    if (p.size() == 3 && p[2] == "turns" && m == "POST") return submit(p[1], req);
    if (p.size() == 3 && p[2] == "end" && m == "POST") return end(p[1]);
    if (p.size() == 3 && p[2] == "report" && m == "GET") return report(p[1]);
  }
  return route_error();
}

// --- graphs -------------------------------------------------------------------

Response Service::create_graph(const Request& request) {
  auto graph = graph_for_create(parse_body(request));
  require_valid(graph);
  store_.put({DocumentKind::Graph, graph.id.str(), 0, store_graph_body(graph)}, 0);
  return graph_response(201, store_.get(DocumentKind::Graph, graph.id.str()));
}

Response Service::list_graphs() {
  Json out = Json::array();
  for (const auto& doc : store_.list(DocumentKind::Graph)) {
    const auto g = load_graph(doc);
    out.push_back({{"id", g.id.str()},
                   {"title", g.title},
                   {"mode", to_string(g.mode)},
                   {"version", doc.version},
                   {"node_count", g.nodes.size()},
                   {"edge_count", g.edges.size()}});
  }
  return json_response(200, out);
}

Response Service::get_graph(const std::string& id) { return graph_response(200, store_.get(DocumentKind::Graph, id)); }

Response Service::put_graph(const std::string& id, const Request& request) {
  const auto expected = if_match(request);
  store_.get(DocumentKind::Graph, id);
  Json body = parse_body(request);
  if (!body.is_object()) bad_request("request body must be a JSON object");
  if (!body.contains("id")) body["id"] = id;
  auto graph = graph_from_value(body);
  if (graph.id.str() != id) bad_request("body id " + graph.id.str() + " does not match " + id);
  require_valid(graph);
  store_.put({DocumentKind::Graph, id, 0, store_graph_body(graph)}, expected);
  return graph_response(200, store_.get(DocumentKind::Graph, id));
}

Response Service::delete_graph(const std::string& id, const Request& request) {
  store_.remove(DocumentKind::Graph, id, if_match(request));
  Response r;
  r.status = 204;
  r.content_type.clear();
  return r;
}

Response Service::generate_graph(const Request& request) {
  const auto prompt = string_member(parse_body(request), "prompt");
  if (text::trim(prompt).empty()) throw ApiError{422, "bad_request", "prompt must not be empty", nullptr};
  auto graph = gloss::generate_graph(*config_.provider, prompt);
  store_.put({DocumentKind::Graph, graph.id.str(), 0, store_graph_body(graph)}, 0);
  return graph_response(201, store_.get(DocumentKind::Graph, graph.id.str()));
}

Response Service::expand_graph(const std::string& id, const Request& request) {
  const auto body = parse_body(request);
  const auto node = string_member(body, "node_id");
  const auto instruction = string_member(body, "instruction", false);
  for (int attempt = 0;; ++attempt) {
    const auto doc = store_.get(DocumentKind::Graph, id);
    auto graph = load_graph(doc);
    if (!graph.find_node(NodeId(node))) {
      throw ApiError{422, "bad_request", "graph " + id + " has no node " + node, nullptr};
    }
    auto expanded = expand_node(*config_.provider, graph, NodeId(node), instruction);
    try {
      store_.put({DocumentKind::Graph, id, 0, store_graph_body(expanded)}, doc.version);
    } catch (const Error& e) {
      if (e.code() == Errc::VersionConflict && attempt == 0) continue;
      throw;
    }
    return graph_response(200, store_.get(DocumentKind::Graph, id));
  }
}

Response Service::validate_graph(const std::string& id) {
  const auto diagnostics = validate(load_graph(store_.get(DocumentKind::Graph, id)));
  return json_response(200, {{"ok", !has_errors(diagnostics)}, {"diagnostics", diagnostics_to_value(diagnostics)}});
}

Response Service::graph_dot(const std::string& id, const Request& request) {
  const auto graph = load_graph(store_.get(DocumentKind::Graph, id));
  Response r;
  r.content_type = "text/vnd.graphviz";
  auto it = request.query.find("session");
  if (it != request.query.end() && !it->second.empty()) {
    r.body = overlay_dot(graph, load_session(store_.get(DocumentKind::Session, it->second)));
  } else {
    r.body = render_dot(graph);
  }
  return r;
}

Response Service::cohort(const std::string& id) {
  const auto graph = load_graph(store_.get(DocumentKind::Graph, id));
  std::vector<Session> sessions;
  for (const auto& doc : store_.list(DocumentKind::Session)) {
    auto s = load_session(doc);
    if (s.graph_id == graph.id) sessions.push_back(std::move(s));
  }
  return json_response(200, cohort_to_value(cohort_summary(graph, sessions)));
}

// --- templates -------------------------------------------------------------------

Response Service::list_templates() {
  Json out = Json::array();
  for (const auto& t : template_registry()) out.push_back({{"id", t.id}, {"title", t.title}});
  return json_response(200, out);
}

Response Service::instantiate(const std::string& template_id) {
  auto graph = instantiate_template(template_id);
  store_.put({DocumentKind::Graph, graph.id.str(), 0, store_graph_body(graph)}, 0);
  return graph_response(201, store_.get(DocumentKind::Graph, graph.id.str()));
}

// --- sessions ----------------------------------------------------------------------

std::shared_ptr<std::mutex> Service::session_lock(const std::string& id) {
  std::lock_guard guard(locks_mu_);
  auto& slot = session_locks_[id];
  auto lock = slot.lock();
  if (!lock) {
    lock = std::make_shared<std::mutex>();
    slot = lock;
  }
  return lock;
}

Response Service::create_session(const Request& request) {
  const auto body = parse_body(request);
  const auto graph_id = string_member(body, "graph_id");
  SessionOptions options;
  if (auto it = body.find("threshold"); it != body.end() && !it->is_null()) {
    if (!it->is_number()) throw ApiError{422, "bad_request", "threshold must be a number", nullptr};
    options.threshold = it->get<double>();
  }
  options.clock = [this] { return now(); };
  const auto graph = load_graph(store_.get(DocumentKind::Graph, graph_id));
  if (options.threshold && !(*options.threshold >= 0.0 && *options.threshold <= 1.0)) {
    throw ApiError{422, "bad_request", "threshold must lie in [0, 1]", nullptr};
  }
  require_valid(graph);
  auto start = start_session(graph, options);
  const auto version = store_.put({DocumentKind::Session, start.session.id.str(), 0, session_to_json(start.session)}, 0);
  auto r = json_response(201, {{"session", session_to_value(start.session)}, {"opening_utterance", start.opening_utterance}});
  r.headers["ETag"] = etag(version);
  return r;
}

Response Service::list_sessions(const Request& request) {
  auto it = request.query.find("graph_id");
  Json out = Json::array();
  for (const auto& doc : store_.list(DocumentKind::Session)) {
    const auto s = load_session(doc);
    if (it != request.query.end() && s.graph_id.str() != it->second) continue;
    out.push_back({{"id", s.id.str()},
                   {"graph_id", s.graph_id.str()},
                   {"status", to_string(s.status)},
                   {"turns", s.transcript.size()},
                   {"created_at", format_timestamp(s.created_at)}});
  }
  return json_response(200, out);
}

Response Service::get_session(const std::string& id) {
  const auto doc = store_.get(DocumentKind::Session, id);
  Response r;
  r.body = doc.body;
  r.headers["ETag"] = etag(doc.version);
  return r;
}

Response Service::submit(const std::string& id, const Request& request) {
  const auto utterance = string_member(parse_body(request), "utterance");
  if (text::trim(utterance).empty()) throw ApiError{422, "bad_request", "utterance must not be empty", nullptr};

  auto lock = session_lock(id);
  std::unique_lock guard(*lock, std::try_to_lock);
  if (!guard.owns_lock()) throw Error(Errc::SessionBusy, "session " + id + " is processing another turn", id);

  const auto session_doc = store_.get(DocumentKind::Session, id);
  const auto session = load_session(session_doc);
  if (session.status == SessionStatus::Completed) {
    throw ApiError{422, "bad_request", "session " + id + " is already completed", nullptr};
  }
  const Clock clock = [this] { return now(); };

  for (int attempt = 0;; ++attempt) {
    const auto graph_doc = store_.get(DocumentKind::Graph, session.graph_id.str());
    const auto graph = load_graph(graph_doc);
    auto result = submit_turn(session, graph, *config_.provider, utterance, clock);

    std::int64_t graph_version = graph_doc.version;
    if (result.graph != graph) {
      try {
        graph_version = store_.put({DocumentKind::Graph, graph.id.str(), 0, store_graph_body(result.graph)},
                                   graph_doc.version);
      } catch (const Error& e) {
        if (e.code() == Errc::VersionConflict && attempt == 0) continue;
        throw;
      }
    }
    const auto version =
        store_.put({DocumentKind::Session, id, 0, session_to_json(result.session)}, session_doc.version);
    auto r = json_response(200, {{"turn", turn_to_value(result.turn)},
                                 {"session_status", to_string(result.session.status)},
                                 {"current_node", result.session.current_node.str()},
                                 {"graph_version", graph_version}});
    r.headers["ETag"] = etag(version);
    return r;
  }
}

Response Service::end(const std::string& id) {
  auto lock = session_lock(id);
  std::unique_lock guard(*lock, std::try_to_lock);
  if (!guard.owns_lock()) throw Error(Errc::SessionBusy, "session " + id + " is processing a turn", id);
  const auto doc = store_.get(DocumentKind::Session, id);
  const auto session = load_session(doc);
  if (session.status == SessionStatus::Completed) {
    throw ApiError{422, "bad_request", "session " + id + " is already completed", nullptr};
  }
  const auto ended = end_session(session);
  store_.put({DocumentKind::Session, id, 0, session_to_json(ended)}, doc.version);
  return json_response(200, session_to_value(ended));
}

Response Service::report(const std::string& id) {
  return json_response(200, report_to_value(session_report(load_session(store_.get(DocumentKind::Session, id)))));
}

}  // namespace gloss
