#include "gloss/http_server.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>

#include "httplib.h"

namespace gloss {

namespace {

std::atomic<httplib::Server*> running{nullptr};

Request to_request(const httplib::Request& in) {
  Request out;
  out.method = in.method;
  out.path = in.path;
  for (const auto& [k, v] : in.params) out.query[k] = v;
  for (const auto& [k, v] : in.headers) {
    std::string name = k;
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    out.headers[name] = v;
  }
  out.body = in.body;
  return out;
}

}  // namespace

bool serve_http(Service& service, const std::string& host, int port, const std::function<void(int)>& on_ready) {
  httplib::Server server;
  auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    const auto response = service.handle(to_request(req));
    res.status = response.status;
    for (const auto& [k, v] : response.headers) res.set_header(k, v);
    if (!response.content_type.empty()) res.set_content(response.body, response.content_type);
  };
  const char* any = R"(/.*)";
  server.Get(any, handler);
  server.Post(any, handler);
  server.Put(any, handler);
  server.Delete(any, handler);

  const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) return false;
  running = &server;
  if (on_ready) on_ready(bound);
  const bool ok = server.listen_after_bind();
  running = nullptr;
  return ok;
}

void stop_http_server() {
  if (auto* server = running.load()) server->stop();
}

}  // namespace gloss
