#include <atomic>
#include <cstdlib>
#include <mutex>
#include <random>
#include <thread>

#include "gloss/error.hpp"
#include "gloss/json_io.hpp"
#include "gloss/provider.hpp"
#include "httplib.h"

namespace gloss {

std::string_view to_string(PromptTask task) noexcept {
  switch (task) {
    case PromptTask::Generate: return "generate";
    case PromptTask::Classify: return "classify";
    case PromptTask::Branch: return "branch";
    case PromptTask::Feedback: return "feedback";
  }
  return "feedback";
}

std::vector<ChatMessage> PromptRequest::messages() const {
  std::vector<ChatMessage> out;
  if (!system_text.empty()) out.push_back({"system", system_text});
  out.push_back({"user", user_text});
  out.insert(out.end(), follow_up.begin(), follow_up.end());
  return out;
}

namespace {

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

}  // namespace

ProviderConfig ProviderConfig::from_env() {
  ProviderConfig config;
  const auto kind = env_or_empty("GLOSS_PROVIDER");
  if (kind.empty() || kind == "mock") {
    config.kind = ProviderKind::Mock;
  } else if (kind == "remote") {
    config.kind = ProviderKind::RemoteChatCompletion;
    config.base_url = env_or_empty("GLOSS_BASE_URL");
    config.api_key = env_or_empty("GLOSS_API_KEY");
    config.model = env_or_empty("GLOSS_MODEL");
  } else {
    throw Error(Errc::InvalidArgument, "GLOSS_PROVIDER must be mock or remote, got '" + kind + "'");
  }
  return config;
}

void ProviderConfig::check() const {
  const bool remote = kind == ProviderKind::RemoteChatCompletion;
  for (const auto* field : {&base_url, &api_key, &model}) {
    if (remote && field->empty()) {
      throw Error(Errc::InvalidArgument, "remote provider needs base_url, api_key and model");
    }
    if (!remote && !field->empty()) {
      throw Error(Errc::InvalidArgument, "base_url, api_key and model only apply to the remote provider");
    }
  }
  if (max_retries < 0 || max_retries > 10) throw Error(Errc::InvalidArgument, "max_retries must be in [0, 10]");
  if (timeout.count() <= 0) throw Error(Errc::InvalidArgument, "timeout must be positive");
}

namespace {

/// OpenAI-compatible chat completions: POST {base_url}/chat/completions with
/// a bearer token and {"model", "messages", "temperature"}.
class RemoteProvider final : public Provider {
 public:
  explicit RemoteProvider(ProviderConfig config) : config_(std::move(config)) {
    auto scheme_end = config_.base_url.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(Errc::InvalidArgument, "base_url needs a scheme: " + config_.base_url);
    }
    auto path_start = config_.base_url.find('/', scheme_end + 3);
    origin_ = config_.base_url.substr(0, path_start);
    if (path_start != std::string::npos) prefix_ = config_.base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  std::string_view name() const override { return "remote"; }

  void cancel() override {
    ++generation_;
    std::lock_guard lock(mu_);
    for (auto* client : active_) client->stop();
  }

  std::string complete(const PromptRequest& request) override {
    Json messages = Json::array();
    for (const auto& m : request.messages()) messages.push_back({{"role", m.role}, {"content", m.content}});
    Json body{{"model", config_.model}, {"messages", messages}, {"temperature", 0}};
    if (request.expects == Expectation::StructuredJson) body["response_format"] = {{"type", "json_object"}};
    const auto payload = body.dump();
    const auto started_generation = generation_.load();

    std::mt19937 jitter_engine{std::random_device{}()};
    std::uniform_real_distribution<double> jitter(0.5, 1.5);

    for (int attempt = 0;; ++attempt) {
      const bool last = attempt >= config_.max_retries;
      try {
        return attempt_once(payload, started_generation);
      } catch (const Error& e) {
        const bool retryable = e.code() == Errc::ProviderTimeout ||
                               e.code() == Errc::ProviderUnavailable ||
                               (e.code() == Errc::ProviderHttp && (e.status() >= 500 || e.status() == 429));
        if (!retryable || last || generation_.load() != started_generation) throw;
      }
      const auto delay = config_.backoff * (1 << attempt) * jitter(jitter_engine);
      std::this_thread::sleep_for(std::chrono::duration_cast<std::chrono::milliseconds>(delay));
    }
  }

 private:
  std::string attempt_once(const std::string& payload, unsigned started_generation) {
    httplib::Client client(origin_);
    if (!client.is_valid()) {
      throw Error(Errc::ProviderUnavailable, "cannot create an HTTP client for " + origin_);
    }
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    client.set_bearer_token_auth(config_.api_key);

    {
      std::lock_guard lock(mu_);
      if (generation_.load() != started_generation) throw Error(Errc::ProviderUnavailable, "call cancelled");
      active_.insert(&client);
    }
    const auto begin = std::chrono::steady_clock::now();
    auto result = client.Post(prefix_ + "/chat/completions", payload, "application/json");
    const auto elapsed = std::chrono::steady_clock::now() - begin;
    {
      std::lock_guard lock(mu_);
      active_.erase(&client);
    }

    if (!result) {
      const auto err = result.error();
      if (err == httplib::Error::ConnectionTimeout ||
          (err == httplib::Error::Read && elapsed >= config_.timeout)) {
        throw Error(Errc::ProviderTimeout, "no response from " + origin_ + " within the timeout");
      }
      throw Error(Errc::ProviderUnavailable, origin_ + ": " + httplib::to_string(err));
    }
    if (result->status < 200 || result->status >= 300) {
      throw Error(Errc::ProviderHttp, "chat completion returned HTTP " + std::to_string(result->status),
                  result->body.substr(0, 512), result->status);
    }
    try {
      const auto reply = Json::parse(result->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception& e) {
      throw Error(Errc::ProviderUnavailable, std::string("unexpected chat completion body: ") + e.what());
    }
  }

  ProviderConfig config_;
  std::string origin_;
  std::string prefix_;
  std::atomic<unsigned> generation_{0};
  std::mutex mu_;
  std::set<httplib::Client*> active_;
};

}  // namespace

ProviderHandle make_provider(const ProviderConfig& config) {
  config.check();
  if (config.kind == ProviderKind::Mock) return std::make_shared<MockProvider>();
  return std::make_shared<RemoteProvider>(config);
}

std::string complete(const ProviderConfig& config, const PromptRequest& request) {
  return make_provider(config)->complete(request);
}

}  // namespace gloss
