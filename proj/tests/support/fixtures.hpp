#pragma once

// Shared test fixtures, generators and independent oracles. Nothing here
// calls into the code path it is used to check: the reachability and Jaccard
// oracles are written from scratch over plain containers.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gloss/authoring.hpp"
#include "gloss/graph.hpp"
#include "gloss/provider.hpp"
#include "gloss/session.hpp"

namespace gloss::fx {

/// The angry-customer scenario, instantiated from the bundled template.
inline NarrativeGraph customer_service() { return instantiate_template("customer-service"); }

/// Clock that starts at a fixed instant and advances one second per call.
inline Clock stepping_clock(Timestamp start = Timestamp(std::chrono::milliseconds(1'790'000'000'000))) {
  auto now = std::make_shared<Timestamp>(start);
  return [now] {
    auto t = *now;
    *now += std::chrono::seconds(1);
    return t;
  };
}

/// Provider returning canned outputs in order, then repeating the last one.
/// Optionally throws a provider error instead.
class ScriptedProvider final : public Provider {
 public:
  explicit ScriptedProvider(std::vector<std::string> outputs) : outputs_(std::move(outputs)) {}

  std::string complete(const PromptRequest& request) override {
    std::lock_guard lock(mu_);
    requests.push_back(request);
    if (fail_with) throw Error(*fail_with, "scripted failure");
    auto i = std::min(calls_++, outputs_.size() - 1);
    return outputs_[i];
  }
  std::string_view name() const override { return "scripted"; }

  std::optional<Errc> fail_with;
  std::vector<PromptRequest> requests;

 private:
  std::mutex mu_;
  std::vector<std::string> outputs_;
  std::size_t calls_ = 0;
};

/// Wraps another provider and fails every call of one task.
class FailingTaskProvider final : public Provider {
 public:
  FailingTaskProvider(ProviderHandle inner, PromptTask task) : inner_(std::move(inner)), task_(task) {}
  std::string complete(const PromptRequest& request) override {
    if (request.task == task_) throw Error(Errc::ProviderUnavailable, "injected failure");
    return inner_->complete(request);
  }
  std::string_view name() const override { return "failing"; }

 private:
  ProviderHandle inner_;
  PromptTask task_;
};

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("gloss-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Random graphs

struct RandomGraphOptions {
  int max_nodes = 20;
  double edge_density = 0.15;
  bool awkward_text = true;  // quotes, backslashes, newlines, non-ASCII
};

inline std::string random_text(std::mt19937& rng, bool awkward, std::size_t min_len = 1) {
  static const std::vector<std::string> words = {
      "sorry", "wait", "order", "refund", "manager", "please", "calm", "help", "now", "why", "listen", "okay"};
  static const std::vector<std::string> odd = {"\"quoted\"", "back\\slash", "line\nbreak", "tab\there",
                                               "café", "日本語", "emoji 🙂", "a->b", "#hash", "x=y", "[list]"};
  std::uniform_int_distribution<std::size_t> len(min_len, 6);
  std::string out;
  auto n = len(rng);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    if (awkward && rng() % 5 == 0) {
      out += odd[rng() % odd.size()];
    } else {
      out += words[rng() % words.size()];
    }
  }
  return out;
}

inline std::string random_id(std::mt19937& rng, bool awkward, const std::string& prefix, int n) {
  if (awkward && rng() % 6 == 0) return prefix + " " + std::to_string(n) + "\"x";
  if (awkward && rng() % 7 == 0) return prefix + "é" + std::to_string(n);
  return prefix + std::to_string(n);
}

/// A graph built only through apply_mutation, so it satisfies every
/// graph-core invariant. Unreachable nodes and dead ends occur naturally.
inline NarrativeGraph random_graph(std::uint32_t seed, const RandomGraphOptions& opt = {}) {
  std::mt19937 rng(seed);
  auto g = new_graph(opt.awkward_text ? random_text(rng, true) : "Random " + std::to_string(seed),
                     rng() % 2 ? DialogueMode::Strict : DialogueMode::Flexible);
  const int count = static_cast<int>(rng() % (opt.max_nodes + 1));
  std::vector<NodeId> ids;
  const Provenance provs[] = {Provenance::Authored, Provenance::Generated, Provenance::Template};
  for (int i = 0; i < count; ++i) {
    SceneNode node;
    node.id = NodeId(random_id(rng, opt.awkward_text, "n", i));
    node.avatar_utterance = random_text(rng, opt.awkward_text);
    node.description = rng() % 3 ? random_text(rng, opt.awkward_text) : "";
    node.terminal = rng() % 4 == 0;
    node.provenance = provs[rng() % 3];
    g = apply_mutation(g, mutation::AddNode{node});
    ids.push_back(node.id);
  }
  if (!ids.empty()) g = apply_mutation(g, mutation::SetStart{ids[rng() % ids.size()]});
  std::uniform_real_distribution<double> coin(0, 1);
  int edge_no = 0;
  for (const auto& from : ids) {
    int label_no = 0;
    for (const auto& to : ids) {
      if (coin(rng) >= opt.edge_density) continue;
      TransitionEdge edge;
      edge.id = EdgeId(random_id(rng, opt.awkward_text, "e", ++edge_no));
      edge.from = from;
      edge.to = to;
      edge.intent.label = "intent-" + std::to_string(++label_no);
      if (opt.awkward_text && rng() % 4 == 0) edge.intent.label += " \"odd\"";
      edge.intent.description = rng() % 2 ? random_text(rng, opt.awkward_text) : "";
      for (int k = static_cast<int>(rng() % 3); k > 0; --k) edge.intent.examples.push_back(random_text(rng, opt.awkward_text));
      edge.provenance = provs[rng() % 3];
      g = apply_mutation(g, mutation::AddEdge{edge});
    }
  }
  for (int k = static_cast<int>(rng() % 3); k > 0; --k) g.metadata["key" + std::to_string(k)] = random_text(rng, opt.awkward_text);
  return g;
}

// ---------------------------------------------------------------------------
// Oracles

/// Breadth-first reachability over an index-based adjacency list.
inline std::set<std::string> bfs_unreachable_oracle(const NarrativeGraph& g) {
  std::vector<std::string> names;
  for (const auto& [id, node] : g.nodes) names.push_back(id.str());
  auto index_of = [&](const std::string& s) -> int {
    auto it = std::find(names.begin(), names.end(), s);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
  };
  std::vector<std::vector<int>> adj(names.size());
  for (const auto& e : g.edges) {
    int a = index_of(e.from.str());
    int b = index_of(e.to.str());
    if (a >= 0 && b >= 0) adj[a].push_back(b);
  }
  std::vector<bool> seen(names.size(), false);
  int s = index_of(g.start_node.str());
  if (s < 0) return {};
  std::deque<int> q{s};
  seen[s] = true;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        q.push_back(v);
      }
    }
  }
  std::set<std::string> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!seen[i]) out.insert(names[i]);
  }
  return out;
}

/// Jaccard over sorted word vectors, computed with std::set_intersection /
/// std::set_union rather than membership counting.
inline std::vector<std::string> oracle_words(const std::string& text) {
  std::string cleaned;
  for (unsigned char c : text) {
    if (c < 0x80 && std::ispunct(c)) continue;
    cleaned += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
  }
  std::vector<std::string> words;
  std::string cur;
  for (unsigned char c : cleaned + " ") {
    if (std::isspace(c)) {
      if (!cur.empty()) words.push_back(cur);
      cur.clear();
    } else {
      cur += static_cast<char>(c);
    }
  }
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  return words;
}

inline double oracle_jaccard(const std::string& a, const std::string& b) {
  auto wa = oracle_words(a);
  auto wb = oracle_words(b);
  std::vector<std::string> inter, uni;
  std::set_intersection(wa.begin(), wa.end(), wb.begin(), wb.end(), std::back_inserter(inter));
  std::set_union(wa.begin(), wa.end(), wb.begin(), wb.end(), std::back_inserter(uni));
  if (uni.empty()) return 0.0;
  return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

/// Re-walks a transcript using only turn endpoints and the graph's edge list.
inline std::vector<std::string> replay_path_oracle(const Session& s, const NarrativeGraph& g) {
  std::vector<std::string> out{s.transcript.empty() ? s.current_node.str() : s.transcript[0].from_node.str()};
  for (const auto& t : s.transcript) {
    if (t.from_node == t.to_node && std::holds_alternative<decision::Rejected>(t.decision)) continue;
    std::string edge_id = std::visit(
        [](const auto& d) -> std::string {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, decision::Matched>) return d.edge_id.str();
          else if constexpr (std::is_same_v<T, decision::GeneratedBranch>) return d.new_edge_id.str();
          else return "";
        },
        t.decision);
    for (const auto& e : g.edges) {
      if (e.id.str() == edge_id) {
        out.push_back(e.id.str());
        out.push_back(e.to.str());
      }
    }
  }
  return out;
}

/// Utterance script mixing example-exact replies, partial overlaps and
/// nonsense, drawn from the graph's own intent examples.
inline std::vector<std::string> random_script(std::mt19937& rng, const NarrativeGraph& g, int turns) {
  std::vector<std::string> examples;
  for (const auto& e : g.edges) examples.insert(examples.end(), e.intent.examples.begin(), e.intent.examples.end());
  static const std::vector<std::string> noise = {"zxqv", "what is the weather", "blue", "hmm okay",
                                                 "I like trains", "sorry", "refund now please"};
  std::vector<std::string> script;
  for (int i = 0; i < turns; ++i) {
    if (!examples.empty() && rng() % 2) {
      script.push_back(examples[rng() % examples.size()]);
    } else {
      script.push_back(noise[rng() % noise.size()]);
    }
  }
  return script;
}

}  // namespace gloss::fx
