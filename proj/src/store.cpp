#include "gloss/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gloss/error.hpp"
#include "gloss/json_io.hpp"
#include "gloss/session.hpp"

namespace gloss {

namespace fs = std::filesystem;

std::string_view to_string(DocumentKind kind) noexcept { return kind == DocumentKind::Graph ? "graph" : "session"; }

namespace {

[[noreturn]] void io_failure(const std::string& what, const fs::path& path) {
  throw Error(Errc::IoFailure, what + " " + path.string() + ": " + std::strerror(errno), path.string());
}

class FileLock {
 public:
  explicit FileLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) io_failure("cannot open lock file", path);
    while (::flock(fd_, LOCK_EX) != 0) {
      if (errno != EINTR) {
        ::close(fd_);
        io_failure("cannot lock", path);
      }
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

void write_all(int fd, std::string_view data, const fs::path& path) {
  while (!data.empty()) {
    auto n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      io_failure("cannot write", path);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

void fsync_dir(const fs::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

std::string envelope(const StoredDocument& doc) {
  return canonical_dump({{"kind", to_string(doc.kind)},
                         {"id", doc.id},
                         {"version", doc.version},
                         {"body", parse_json_text(doc.body)}});
}

std::optional<StoredDocument> read_document(const fs::path& path, DocumentKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!fs::exists(path)) return std::nullopt;
    io_failure("cannot read", path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    const auto value = Json::parse(buffer.str());
    StoredDocument doc;
    doc.kind = kind;
    doc.id = value.at("id").get<std::string>();
    doc.version = value.at("version").get<std::int64_t>();
    doc.body = canonical_dump(value.at("body"));
    return doc;
  } catch (const Json::exception& e) {
    throw Error(Errc::IoFailure, "corrupt document " + path.string() + ": " + e.what(), path.string());
  }
}

}  // namespace

Store::Store(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  for (auto kind : {DocumentKind::Graph, DocumentKind::Session}) {
    fs::create_directories(dir_for(kind), ec);
    if (ec) throw Error(Errc::IoFailure, "cannot create " + dir_for(kind).string() + ": " + ec.message());
  }
}

std::string Store::encode_id(std::string_view id) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : id) {
    if (std::isalnum(c) || c == '-' || c == '_') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 0xF];
    }
  }
  return out;
}

fs::path Store::dir_for(DocumentKind kind) const { return root_ / (kind == DocumentKind::Graph ? "graphs" : "sessions"); }

fs::path Store::path_for(DocumentKind kind, std::string_view id) const {
  return dir_for(kind) / (encode_id(id) + ".json");
}

std::int64_t Store::put(const StoredDocument& doc, std::optional<std::int64_t> expected_version) {
  if (doc.id.empty()) throw Error(Errc::InvalidArgument, "document id must not be empty");

  // Schema check before touching the disk.
  Json body = parse_json_text(doc.body);
  std::int64_t body_version = 0;
  if (doc.kind == DocumentKind::Graph) {
    const auto graph = graph_from_value(body);
    if (graph.id.str() != doc.id) throw Error(Errc::InvalidArgument, "graph body id does not match document id");
    body_version = graph.version;
  } else {
    const auto session = session_from_value(body);
    if (session.id.str() != doc.id) throw Error(Errc::InvalidArgument, "session body id does not match document id");
  }

  std::lock_guard guard(mu_);
  FileLock lock(root_ / ".lock");

  const auto target = path_for(doc.kind, doc.id);
  const auto current = read_document(target, doc.kind);
  const std::int64_t current_version = current ? current->version : 0;
  if (expected_version && *expected_version != current_version) {
    throw Error(Errc::VersionConflict,
                std::string(to_string(doc.kind)) + " " + doc.id + " is at version " + std::to_string(current_version) +
                    ", expected " + std::to_string(*expected_version),
                doc.id);
  }

  StoredDocument next = doc;
  next.version = std::max(current_version + 1, body_version);
  if (doc.kind == DocumentKind::Graph) body["version"] = next.version;
  next.body = canonical_dump(body);
  const auto text = envelope(next);

  static std::atomic<unsigned> counter{0};
  const auto temp = target.parent_path() /
                    ("." + target.filename().string() + ".tmp." + std::to_string(::getpid()) + "." +
                     std::to_string(counter++));
  int fd = ::open(temp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_failure("cannot create", temp);
  try {
    write_all(fd, text, temp);
    if (::fsync(fd) != 0) io_failure("cannot fsync", temp);
  } catch (...) {
    ::close(fd);
    ::unlink(temp.c_str());
    throw;
  }
  ::close(fd);

  if (fault_hook_) fault_hook_(temp, target);

  if (::rename(temp.c_str(), target.c_str()) != 0) {
    const int saved = errno;
    ::unlink(temp.c_str());
    errno = saved;
    io_failure("cannot rename onto", target);
  }
  fsync_dir(target.parent_path());
  return next.version;
}

std::optional<StoredDocument> Store::find(DocumentKind kind, std::string_view id) const {
  return read_document(path_for(kind, id), kind);
}

StoredDocument Store::get(DocumentKind kind, std::string_view id) const {
  auto doc = find(kind, id);
  if (!doc) throw Error(Errc::NotFound, std::string(to_string(kind)) + " " + std::string(id) + " not found", std::string(id));
  return *doc;
}

std::vector<StoredDocument> Store::list(DocumentKind kind) const {
  std::vector<StoredDocument> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir_for(kind), ec)) {
    const auto name = entry.path().filename().string();
    if (name.empty() || name.front() == '.' || entry.path().extension() != ".json") continue;
    if (auto doc = read_document(entry.path(), kind)) out.push_back(std::move(*doc));
  }
  if (ec) throw Error(Errc::IoFailure, "cannot list " + dir_for(kind).string() + ": " + ec.message());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

void Store::remove(DocumentKind kind, std::string_view id, std::optional<std::int64_t> expected_version) {
  std::lock_guard guard(mu_);
  FileLock lock(root_ / ".lock");
  const auto target = path_for(kind, id);
  const auto current = read_document(target, kind);
  if (!current) throw Error(Errc::NotFound, std::string(to_string(kind)) + " " + std::string(id) + " not found", std::string(id));
  if (expected_version && *expected_version != current->version) {
    throw Error(Errc::VersionConflict,
                std::string(id) + " is at version " + std::to_string(current->version) + ", expected " +
                    std::to_string(*expected_version),
                std::string(id));
  }
  if (::unlink(target.c_str()) != 0) io_failure("cannot remove", target);
  fsync_dir(target.parent_path());
}

}  // namespace gloss
