// gloss: command-line front end for authoring, running and reviewing
// scenarios without the web service.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "gloss/analysis.hpp"
#include "gloss/dot.hpp"
#include "gloss/dsl.hpp"
#include "gloss/error.hpp"
#include "gloss/http_server.hpp"
#include "gloss/json_io.hpp"
#include "gloss/service.hpp"
#include "gloss/session.hpp"
#include "gloss/text.hpp"

using namespace gloss;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << content)) throw Error(Errc::IoFailure, "cannot write " + path);
}

bool looks_like_json(std::string_view content) {
  auto t = text::trim(content);
  return !t.empty() && t.front() == '{';
}

void print_parse_diagnostics(const std::string& file, const std::vector<ParseDiagnostic>& diagnostics) {
  for (const auto& d : diagnostics) {
    std::cerr << file << ":" << d.line << ":" << d.column << ": " << to_string(d.severity) << ": " << d.message << "\n";
  }
}

// Graph from a JSON document or DSL source, chosen by content.
NarrativeGraph load_graph(const std::string& file) {
  const auto content = read_file(file);
  if (looks_like_json(content)) return from_json(content);
  auto parsed = parse_dsl(content);
  print_parse_diagnostics(file, parsed.diagnostics);
  if (!parsed.graph) throw Error(Errc::InvalidGraph, file + " does not parse");
  return *parsed.graph;
}

int cmd_validate(const std::string& file) {
  const auto content = read_file(file);
  NarrativeGraph graph;
  if (looks_like_json(content)) {
    graph = from_json(content);
  } else {
    auto parsed = parse_dsl(content);
    print_parse_diagnostics(file, parsed.diagnostics);
    if (!parsed.graph) return 1;
    graph = *parsed.graph;
  }
  const auto diagnostics = validate(graph);
  for (const auto& d : diagnostics) {
    std::cerr << file << ": " << d.code << " " << to_string(d.severity) << " [" << d.subject << "] " << d.message << "\n";
  }
  return has_errors(diagnostics) ? 1 : 0;
}

int cmd_render(const std::string& file, const std::string& format) {
  const auto graph = load_graph(file);
  if (format == "dot") {
    std::cout << render_dot(graph);
  } else if (format == "dsl") {
    std::cout << render_dsl(graph);
  } else {
    std::cout << to_json(graph);
  }
  return 0;
}

int cmd_run(const std::string& file, const std::string& provider_kind, std::optional<double> threshold,
            const std::string& session_out, const std::string& graph_out) {
  auto graph = load_graph(file);
  ProviderConfig config = provider_kind == "remote" ? ProviderConfig::from_env() : ProviderConfig{};
  if (provider_kind == "remote") config.kind = ProviderKind::RemoteChatCompletion;
  auto provider = make_provider(config);

  SessionOptions options;
  options.threshold = threshold;
  auto [session, opening] = start_session(graph, options);
  std::cout << "Scenario: " << graph.title << " (" << to_string(graph.mode) << " mode)\n"
            << "Type your reply and press Enter. /quit ends the session.\n\n"
            << "Avatar: " << opening << "\n";

  std::string line;
  while (session.status == SessionStatus::Active) {
    std::cout << "\nYou: " << std::flush;
    if (!std::getline(std::cin, line)) break;
    if (text::trim(line) == "/quit") {
      session = end_session(session);
      break;
    }
    if (text::trim(line).empty()) continue;
    try {
      auto result = submit_turn(session, graph, *provider, line);
      session = std::move(result.session);
      graph = std::move(result.graph);
      const auto& turn = result.turn;
      if (const auto* r = std::get_if<decision::Rejected>(&turn.decision)) {
        std::cout << "[no matching response; options: " << r->hint << "]\n";
      } else if (std::holds_alternative<decision::GeneratedBranch>(turn.decision)) {
        std::cout << "[new branch: " << decision_label(turn.decision) << "]\n";
      }
      std::cout << "Avatar: " << turn.avatar_reply << "\n"
                << "Feedback: " << turn.feedback << "\n";
    } catch (const Error& e) {
      if (!e.is_provider_error()) throw;
      std::cout << "[provider error, turn not recorded: " << e.what() << "]\n";
    }
  }

  const auto report = session_report(session);
  std::cout << "\nSession " << (report.completed ? "completed" : "stopped") << ": " << report.matched_count
            << " matched, " << report.generated_count << " generated, " << report.rejected_count << " rejected.\n";
  if (!session_out.empty()) write_file(session_out, session_to_json(session));
  if (!graph_out.empty()) write_file(graph_out, to_json(graph));
  return 0;
}

int cmd_report(const std::string& session_file, const std::string& graph_file, bool dot) {
  const auto session = session_from_json(read_file(session_file));
  const auto graph = load_graph(graph_file);
  if (dot) {
    std::cout << overlay_dot(graph, session);
    return 0;
  }
  Json out = report_to_value(session_report(session));
  out["path"] = path_to_value(path_of(session, graph));
  std::cout << canonical_dump(out);
  return 0;
}

int cmd_serve(const std::string& host, int port) {
  Service service(ServiceConfig::from_env());
  std::signal(SIGINT, [](int) { stop_http_server(); });
  std::signal(SIGTERM, [](int) { stop_http_server(); });
  const bool ok = serve_http(service, host, port, [&](int bound) {
    std::cerr << "gloss: serving " << service.store().root().string() << " on http://" << host << ":" << bound
              << " (provider " << service.provider().name() << ")\n";
  });
  if (!ok) {
    std::cerr << "gloss: cannot listen on " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gloss: instructor-in-the-loop conversation training engine"};
  app.require_subcommand(1);
  int exit_code = 0;

  std::string file;
  auto* validate_cmd = app.add_subcommand("validate", "Check a graph (JSON or DSL); exit 1 on error diagnostics");
  validate_cmd->add_option("file", file, "Graph file")->required();

  std::string format = "json";
  auto* render_cmd = app.add_subcommand("render", "Print a graph as DOT, DSL or canonical JSON");
  render_cmd->add_option("file", file, "Graph file")->required();
  render_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"dot", "dsl", "json"}));

  std::string provider = "mock";
  std::optional<double> threshold;
  std::string session_out;
  std::string graph_out;
  auto* run_cmd = app.add_subcommand("run", "Interactive practice session in the terminal");
  run_cmd->add_option("file", file, "Graph file")->required();
  run_cmd->add_option("--provider", provider, "Language model backend")->check(CLI::IsMember({"mock", "remote"}));
  run_cmd->add_option("--threshold", threshold, "Match threshold in [0, 1]")->check(CLI::Range(0.0, 1.0));
  run_cmd->add_option("--session-out", session_out, "Write the session JSON here");
  run_cmd->add_option("--graph-out", graph_out, "Write the (possibly grown) graph JSON here");

  std::string session_file;
  std::string graph_file;
  bool dot = false;
  auto* report_cmd = app.add_subcommand("report", "Summarize a recorded session");
  report_cmd->add_option("session", session_file, "Session JSON")->required();
  report_cmd->add_option("graph", graph_file, "Graph the session ran on")->required();
  report_cmd->add_flag("--dot", dot, "Print the path overlay as DOT instead");

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API (GLOSS_DATA_DIR, GLOSS_TOKEN)");
  serve_cmd->add_option("--port", port, "TCP port");
  serve_cmd->add_option("--host", host, "Bind address");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate_cmd) exit_code = cmd_validate(file);
    if (*render_cmd) exit_code = cmd_render(file, format);
    if (*run_cmd) exit_code = cmd_run(file, provider, threshold, session_out, graph_out);
    if (*report_cmd) exit_code = cmd_report(session_file, graph_file, dot);
    if (*serve_cmd) exit_code = cmd_serve(host, port);
  } catch (const Error& e) {
    std::cerr << "gloss: " << e.what();
    if (!e.detail().empty()) std::cerr << " (" << e.detail() << ")";
    std::cerr << "\n";
    return 2;
  }
  return exit_code;
}
