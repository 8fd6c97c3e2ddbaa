#include <algorithm>
#include <cctype>
#include <cstdio>

#include "gloss/error.hpp"
#include "gloss/graph.hpp"
#include "gloss/json_io.hpp"
#include "gloss/provider.hpp"
#include "gloss/text.hpp"

namespace gloss {

namespace mock {

std::set<std::string> word_set(std::string_view text) {
  std::set<std::string> words;
  std::string current;
  for (char raw : text) {
    auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      if (!current.empty()) words.insert(std::move(current));
      current.clear();
    } else if (c < 0x80 && std::ispunct(c)) {
      continue;
    } else {
      current += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    }
  }
  if (!current.empty()) words.insert(std::move(current));
  return words;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t common = 0;
  for (const auto& w : a) common += b.count(w);
  const std::size_t all = a.size() + b.size() - common;
  return all == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(all);
}

double intent_score(std::string_view utterance, const std::vector<std::string>& examples,
                    std::string_view label, std::string_view description) {
  const auto words = word_set(utterance);
  if (examples.empty()) {
    return jaccard(words, word_set(std::string(label) + " " + std::string(description)));
  }
  double best = 0.0;
  for (const auto& example : examples) best = std::max(best, jaccard(words, word_set(example)));
  return best;
}

}  // namespace mock

namespace {

const std::string& var(const PromptRequest& request, const std::string& key) {
  static const std::string empty;
  auto it = request.variables.find(key);
  return it == request.variables.end() ? empty : it->second;
}

std::string first_free_generated_label(const std::string& existing_json) {
  std::set<std::string> taken;
  if (!existing_json.empty()) {
    for (const auto& label : Json::parse(existing_json)) taken.insert(fold_label(label.get<std::string>()));
  }
  for (int n = 1;; ++n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "gen-%03d", n);
    if (!taken.count(buf)) return buf;
  }
}

Json proposal(const std::string& label, const std::string& reply_to) {
  return {
      {"intent_label", label},
      {"intent_description", "Auto-generated intent"},
      {"avatar_reply", "Mock reply to: " + reply_to},
      {"scene_description", "Auto branch"},
      {"terminal", false},
  };
}

std::string classify(const PromptRequest& request) {
  const auto candidates = Json::parse(var(request, "candidates"));
  const auto& utterance = var(request, "utterance");
  Json matches = Json::array();
  for (const auto& c : candidates) {
    std::vector<std::string> examples = c.value("examples", std::vector<std::string>{});
    matches.push_back({
        {"edge_id", c.at("edge_id")},
        {"confidence", mock::intent_score(utterance, examples, c.value("label", ""),
                                          c.value("description", ""))},
    });
  }
  return Json{{"matches", matches}}.dump();
}

std::string generate(const PromptRequest& request) {
  const std::string prompt(text::trim(var(request, "prompt")));
  auto node = [](const char* id, std::string avatar, const char* description, bool terminal) {
    return Json{{"id", id}, {"avatar_utterance", std::move(avatar)}, {"description", description},
                {"terminal", terminal}};
  };
  auto edge = [](const char* id, const char* to, const char* label, const char* description,
                 const char* example) {
    return Json{{"id", id},
                {"from", "n0"},
                {"to", to},
                {"intent", {{"label", label}, {"description", description}, {"examples", {example}}}}};
  };
  Json graph{
      {"title", prompt},
      {"mode", "flexible"},
      {"start_node", "n0"},
      {"nodes",
       {node("n0", "Mock opening for: " + prompt, "Opening scene", false),
        node("n1", "Mock reaction to a cooperative reply", "Cooperative outcome", true),
        node("n2", "Mock reaction to an uncooperative reply", "Uncooperative outcome", true)}},
      {"edges",
       {edge("e1", "n1", "cooperative", "Student engages constructively", "I understand, let me help"),
        edge("e2", "n2", "uncooperative", "Student dismisses the concern", "That is not my problem")}},
  };
  return graph.dump();
}

}  // namespace

std::string MockProvider::complete(const PromptRequest& request) {
  switch (request.task) {
    case PromptTask::Feedback:
      return "Mock feedback for intent " + var(request, "decision_label");
    case PromptTask::Classify:
      return classify(request);
    case PromptTask::Branch: {
      const auto label = first_free_generated_label(var(request, "existing_labels"));
      if (request.variables.count("instruction")) {
        return Json{{"branches", {proposal(label, var(request, "instruction"))}}}.dump();
      }
      return proposal(label, var(request, "utterance")).dump();
    }
    case PromptTask::Generate:
      return generate(request);
  }
  throw Error(Errc::InvalidArgument, "unsupported prompt task");
}

}  // namespace gloss
