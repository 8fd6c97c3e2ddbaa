#include "gloss/error.hpp"

namespace gloss {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyTitle: return "EmptyTitle";
    case Errc::UnknownId: return "UnknownId";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::DuplicateIntentLabel: return "DuplicateIntentLabel";
    case Errc::WouldDangle: return "WouldDangle";
    case Errc::InvalidElement: return "InvalidElement";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::InvalidGraph: return "InvalidGraph";
    case Errc::UnknownTemplate: return "UnknownTemplate";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ProviderTimeout: return "ProviderTimeout";
    case Errc::ProviderHttp: return "ProviderHttp";
    case Errc::ProviderUnavailable: return "ProviderUnavailable";
    case Errc::MalformedGeneration: return "MalformedGeneration";
    case Errc::MalformedClassification: return "MalformedClassification";
    case Errc::EmptyCandidates: return "EmptyCandidates";
    case Errc::EmptyGraph: return "EmptyGraph";
    case Errc::SessionCompleted: return "SessionCompleted";
    case Errc::SessionBusy: return "SessionBusy";
    case Errc::EmptyUtterance: return "EmptyUtterance";
    case Errc::InconsistentTranscript: return "InconsistentTranscript";
    case Errc::VersionConflict: return "VersionConflict";
    case Errc::NotFound: return "NotFound";
    case Errc::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace gloss
