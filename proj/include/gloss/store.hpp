#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gloss {

enum class DocumentKind { Graph, Session };

std::string_view to_string(DocumentKind kind) noexcept;

struct StoredDocument {
  DocumentKind kind = DocumentKind::Graph;
  std::string id;
  std::int64_t version = 0;
  std::string body;  // canonical JSON of the graph or session
  friend bool operator==(const StoredDocument&, const StoredDocument&) = default;
};

/// File-per-document store: <root>/graphs/<id>.json and
/// <root>/sessions/<id>.json, each a canonical JSON envelope
/// {"body", "id", "kind", "version"}.
///
/// Writes go to a temp file in the same directory, are fsynced, then renamed
/// over the target, so readers never see a partial document. Writers are
/// serialized by an in-process mutex plus flock() on <root>/.lock, which makes
/// the version compare-and-swap hold across processes too.
class Store {
 public:
  explicit Store(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  /// Stores `doc` and returns its new version. A session gets current + 1
  /// (1 when new). A graph gets max(current + 1, version in its body), and the
  /// body's version field is rewritten to match. Throws VersionConflict when
  /// `expected_version` is given and differs from the stored version (0 for
  /// "must not exist"), SchemaViolation when the body does not parse under
  /// its schema, IoFailure.
  std::int64_t put(const StoredDocument& doc, std::optional<std::int64_t> expected_version = std::nullopt);

  /// Latest version. Throws NotFound.
  StoredDocument get(DocumentKind kind, std::string_view id) const;
  std::optional<StoredDocument> find(DocumentKind kind, std::string_view id) const;

  /// Every document of one kind, ordered by id.
  std::vector<StoredDocument> list(DocumentKind kind) const;

  /// Throws NotFound, VersionConflict.
  void remove(DocumentKind kind, std::string_view id, std::optional<std::int64_t> expected_version = std::nullopt);

  /// Test hook called after the temp file is durable and before the rename.
  using FaultHook = std::function<void(const std::filesystem::path& temp, const std::filesystem::path& target)>;
  void set_fault_hook(FaultHook hook) { fault_hook_ = std::move(hook); }

  /// Filesystem-safe encoding of a document id: everything outside
  /// [A-Za-z0-9_-] becomes %XX.
  static std::string encode_id(std::string_view id);

 private:
  std::filesystem::path path_for(DocumentKind kind, std::string_view id) const;
  std::filesystem::path dir_for(DocumentKind kind) const;

  std::filesystem::path root_;
  mutable std::mutex mu_;
  FaultHook fault_hook_;
};

}  // namespace gloss
