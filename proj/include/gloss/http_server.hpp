#pragma once

#include <functional>
#include <string>

#include "gloss/service.hpp"

namespace gloss {

/// Serves `service` over HTTP until stop_http_server() or a signal.
/// `on_ready` is called with the bound port (useful with port 0).
/// Returns false if the socket could not be bound.
bool serve_http(Service& service, const std::string& host, int port,
                const std::function<void(int)>& on_ready = {});

/// Asks a running serve_http() loop to return.
void stop_http_server();

}  // namespace gloss
