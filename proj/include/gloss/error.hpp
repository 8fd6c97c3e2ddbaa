#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gloss {

/// Failure categories raised by the engine. The names are part of the public
/// contract: the service maps them onto HTTP statuses and API error codes.
enum class Errc {
  EmptyTitle,
  UnknownId,
  DuplicateId,
  DuplicateIntentLabel,
  WouldDangle,
  InvalidElement,
  SchemaViolation,
  InvalidGraph,
  UnknownTemplate,
  InvalidArgument,
  ProviderTimeout,
  ProviderHttp,
  ProviderUnavailable,
  MalformedGeneration,
  MalformedClassification,
  EmptyCandidates,
  EmptyGraph,
  SessionCompleted,
  SessionBusy,
  EmptyUtterance,
  InconsistentTranscript,
  VersionConflict,
  NotFound,
  IoFailure,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::string detail = {}, int status = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(std::move(detail)),
        status_(status) {}

  Errc code() const noexcept { return code_; }

  /// JSON pointer for SchemaViolation, offending id for UnknownId and friends.
  const std::string& detail() const noexcept { return detail_; }

  /// HTTP status for ProviderHttp, otherwise 0.
  int status() const noexcept { return status_; }

  bool is_provider_error() const noexcept {
    switch (code_) {
      case Errc::ProviderTimeout:
      case Errc::ProviderHttp:
      case Errc::ProviderUnavailable:
      case Errc::MalformedGeneration:
      case Errc::MalformedClassification:
        return true;
      default:
        return false;
    }
  }

 private:
  Errc code_;
  std::string detail_;
  int status_;
};

}  // namespace gloss
