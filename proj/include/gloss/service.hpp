#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "gloss/error.hpp"
#include "gloss/json_io.hpp"
#include "gloss/provider.hpp"
#include "gloss/session.hpp"
#include "gloss/store.hpp"

namespace gloss {

struct Request {
  std::string method;  // upper case
  std::string path;    // without query string
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::map<std::string, std::string> headers;
  std::string body;
};

/// Error payload: {"code", "message"} plus "diagnostics" for
/// validation_failed. Codes: not_found, version_conflict, validation_failed,
/// provider_error, session_busy, bad_request, unauthorized, internal.
struct ApiError {
  int status = 500;
  std::string code;
  std::string message;
  Json details;  // null or extra fields merged into the payload
};

ApiError api_error_for(const Error& error);
Response error_response(const ApiError& error);

struct ServiceConfig {
  std::filesystem::path data_dir = "gloss-data";
  std::string token;  // empty disables authentication
  ProviderHandle provider;
  Clock clock;  // system_now when empty

  /// GLOSS_DATA_DIR, GLOSS_TOKEN and the provider variables.
  static ServiceConfig from_env();
};

/// The JSON API as a plain function from request to response, so it can be
/// exercised without sockets. See docs/api.md for the route table.
class Service {
 public:
  explicit Service(ServiceConfig config);

  Response handle(const Request& request);

  Store& store() noexcept { return store_; }
  Provider& provider() noexcept { return *config_.provider; }

 private:
  Response dispatch(const Request& request);

  Response create_graph(const Request& request);
  Response list_graphs();
  Response get_graph(const std::string& id);
  Response put_graph(const std::string& id, const Request& request);
  Response delete_graph(const std::string& id, const Request& request);
  Response generate_graph(const Request& request);
  Response expand_graph(const std::string& id, const Request& request);
  Response validate_graph(const std::string& id);
  Response graph_dot(const std::string& id, const Request& request);
  Response cohort(const std::string& id);
  Response list_templates();
  Response instantiate(const std::string& template_id);
  Response create_session(const Request& request);
  Response list_sessions(const Request& request);
  Response get_session(const std::string& id);
  Response submit(const std::string& id, const Request& request);
  Response end(const std::string& id);
  Response report(const std::string& id);

  std::shared_ptr<std::mutex> session_lock(const std::string& id);
  Timestamp now() const;

  ServiceConfig config_;
  Store store_;
  std::mutex locks_mu_;
  std::map<std::string, std::weak_ptr<std::mutex>> session_locks_;
};

}  // namespace gloss
