#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace gloss {

enum class PromptTask { Generate, Classify, Branch, Feedback };
enum class Expectation { FreeText, StructuredJson };

std::string_view to_string(PromptTask task) noexcept;

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string content;
};

/// One call to a language model. `variables` are the structured inputs the
/// prompt template was rendered from; the mock provider answers from them,
/// remote providers only see the rendered text.
struct PromptRequest {
  PromptTask task = PromptTask::Feedback;
  std::string system_text;
  std::string user_text;
  Expectation expects = Expectation::FreeText;
  std::map<std::string, std::string> variables;
  std::vector<ChatMessage> follow_up;  // repair round: assistant reply + user correction

  std::vector<ChatMessage> messages() const;
};

enum class ProviderKind { Mock, RemoteChatCompletion };

struct ProviderConfig {
  ProviderKind kind = ProviderKind::Mock;
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string api_key;
  std::string model;
  std::chrono::milliseconds timeout{30'000};
  int max_retries = 1;
  std::chrono::milliseconds backoff{250};  // first retry delay before jitter

  /// Reads GLOSS_PROVIDER (mock|remote), GLOSS_BASE_URL, GLOSS_API_KEY,
  /// GLOSS_MODEL. Unset GLOSS_PROVIDER means mock.
  static ProviderConfig from_env();

  /// Throws InvalidArgument unless the remote fields are present exactly when
  /// kind is RemoteChatCompletion.
  void check() const;
};

/// A language-model backend. Implementations are safe to call from several
/// threads at once; each call is independent.
class Provider {
 public:
  virtual ~Provider() = default;

  /// Raw model text. Throws ProviderTimeout, ProviderHttp or
  /// ProviderUnavailable.
  virtual std::string complete(const PromptRequest& request) = 0;

  /// Aborts in-flight calls; they fail with ProviderUnavailable.
  virtual void cancel() {}

  virtual std::string_view name() const = 0;
};

using ProviderHandle = std::shared_ptr<Provider>;

ProviderHandle make_provider(const ProviderConfig& config);

/// One-shot convenience around make_provider(config)->complete(request).
std::string complete(const ProviderConfig& config, const PromptRequest& request);

/// Deterministic offline stand-in. Output is a pure function of the request
/// variables:
///
///   Feedback  "Mock feedback for intent <decision_label>"
///   Classify  Jaccard word overlap against each candidate's examples
///   Branch    label "gen-NNN" (first number free among existing labels),
///             reply "Mock reply to: <utterance>", scene "Auto branch"
///   Generate  fixed three-node skeleton titled after the prompt
class MockProvider final : public Provider {
 public:
  std::string complete(const PromptRequest& request) override;
  std::string_view name() const override { return "mock"; }
};

namespace mock {

/// Lowercases ASCII, strips ASCII punctuation and splits on whitespace.
std::set<std::string> word_set(std::string_view text);

/// |a ∩ b| / |a ∪ b|; 0 when both are empty.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

/// Best Jaccard score of `utterance` against `examples`, or against the words
/// of label + description when there are no examples.
double intent_score(std::string_view utterance, const std::vector<std::string>& examples,
                    std::string_view label, std::string_view description);

}  // namespace mock

}  // namespace gloss
