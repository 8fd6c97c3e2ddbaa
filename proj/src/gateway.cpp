#include "gloss/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "gloss/error.hpp"
#include "gloss/prompts.hpp"
#include "gloss/text.hpp"

namespace gloss {

std::string_view decision_kind(const MatchDecision& decision) noexcept {
  switch (decision.index()) {
    case 0: return "matched";
    case 1: return "generated";
    default: return "rejected";
  }
}

std::string decision_label(const MatchDecision& decision) {
  if (const auto* m = std::get_if<decision::Matched>(&decision)) return m->intent_label;
  if (const auto* g = std::get_if<decision::GeneratedBranch>(&decision)) return g->intent_label;
  return "<none>";
}

Json extract_json_object(std::string_view output) {
  auto open = output.find('{');
  auto close = output.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw Error(Errc::SchemaViolation, "no JSON object in provider output");
  }
  auto value = parse_json_text(output.substr(open, close - open + 1));
  if (!value.is_object()) throw Error(Errc::SchemaViolation, "expected a JSON object");
  return value;
}

std::string resolve_label_collision(const std::string& label, const std::vector<std::string>& existing_labels) {
  std::set<std::string> taken;
  for (const auto& l : existing_labels) taken.insert(fold_label(l));
  if (!taken.count(fold_label(label))) return label;
  const std::string base = "gen-" + label;
  if (!taken.count(fold_label(base))) return base;
  for (int n = 2;; ++n) {
    auto candidate = base + "-" + std::to_string(n);
    if (!taken.count(fold_label(candidate))) return candidate;
  }
}

namespace {

PromptRequest make_request(PromptTask task, const char* template_name, PromptVariables vars) {
  const auto& tpl = prompt_template(template_name);
  PromptRequest request;
  request.task = task;
  request.system_text = tpl.render_system(vars);
  request.user_text = tpl.render_user(vars);
  request.expects = task == PromptTask::Feedback ? Expectation::FreeText : Expectation::StructuredJson;
  request.variables = std::move(vars);
  return request;
}

std::string single_line(std::string_view s) {
  std::string out(text::trim(s));
  std::replace(out.begin(), out.end(), '\n', ' ');
  std::replace(out.begin(), out.end(), '\r', ' ');
  return out;
}

BranchProposal read_proposal(const Json& value) {
  if (!value.is_object()) throw Error(Errc::SchemaViolation, "branch proposal must be an object");
  BranchProposal p;
  p.intent_label = single_line(value.at("intent_label").get<std::string>());
  p.intent_description = value.value("intent_description", "");
  p.avatar_reply = std::string(text::trim(value.at("avatar_reply").get<std::string>()));
  p.scene_description = value.value("scene_description", "");
  p.terminal = value.value("terminal", false);
  if (p.intent_label.empty() || p.avatar_reply.empty()) {
    throw Error(Errc::SchemaViolation, "intent_label and avatar_reply must be non-empty");
  }
  return p;
}

PromptVariables scene_variables(const SceneNode& scene, const std::vector<std::string>& existing_labels) {
  return {
      {"scene_avatar", scene.avatar_utterance},
      {"scene_description", scene.description},
      {"existing_labels", Json(existing_labels).dump()},
  };
}

}  // namespace

std::vector<IntentMatch> classify_intent(Provider& provider, std::string_view utterance,
                                         const std::vector<IntentCandidate>& candidates) {
  if (candidates.empty()) throw Error(Errc::EmptyCandidates, "classification needs at least one candidate");

  Json listing = Json::array();
  for (const auto& c : candidates) {
    listing.push_back({{"edge_id", c.edge_id.str()},
                       {"label", c.intent.label},
                       {"description", c.intent.description},
                       {"examples", c.intent.examples}});
  }
  auto request = make_request(PromptTask::Classify, "classify",
                               {{"utterance", std::string(utterance)}, {"candidates", listing.dump(2)}});

  return structured_call(provider, std::move(request), Errc::MalformedClassification, [&](const std::string& out) {
    const auto parsed = extract_json_object(out);
    const auto& matches = parsed.at("matches");
    if (!matches.is_array()) throw Error(Errc::SchemaViolation, "matches must be an array");
    std::map<std::string, double> scores;
    for (const auto& m : matches) {
      const auto& conf = m.at("confidence");
      if (!conf.is_number()) throw Error(Errc::SchemaViolation, "confidence must be a number");
      double value = conf.get<double>();
      if (!std::isfinite(value)) throw Error(Errc::SchemaViolation, "confidence must be finite");
      scores[m.at("edge_id").get<std::string>()] = std::clamp(value, 0.0, 1.0);
    }
    std::vector<IntentMatch> result;
    result.reserve(candidates.size());
    for (const auto& c : candidates) {
      auto it = scores.find(c.edge_id.str());
      result.push_back({c.edge_id, it == scores.end() ? 0.0 : it->second});
    }
    std::stable_sort(result.begin(), result.end(),
                     [](const IntentMatch& a, const IntentMatch& b) { return a.confidence > b.confidence; });
    return result;
  });
}

BranchProposal propose_branch(Provider& provider, const SceneNode& scene, std::string_view utterance,
                              const std::vector<std::string>& existing_labels) {
  if (text::trim(utterance).empty()) throw Error(Errc::EmptyUtterance, "utterance must not be empty");
  auto vars = scene_variables(scene, existing_labels);
  vars["utterance"] = std::string(utterance);
  auto request = make_request(PromptTask::Branch, "branch", std::move(vars));
  auto proposal = structured_call(provider, std::move(request), Errc::MalformedGeneration,
                                  [](const std::string& out) { return read_proposal(extract_json_object(out)); });
  proposal.intent_label = resolve_label_collision(proposal.intent_label, existing_labels);
  return proposal;
}

std::vector<BranchProposal> propose_expansion(Provider& provider, const SceneNode& scene,
                                              std::string_view instruction,
                                              const std::vector<std::string>& existing_labels) {
  auto vars = scene_variables(scene, existing_labels);
  vars["instruction"] = std::string(instruction);
  auto request = make_request(PromptTask::Branch, "expand", std::move(vars));
  auto proposals = structured_call(provider, std::move(request), Errc::MalformedGeneration, [](const std::string& out) {
    const auto parsed = extract_json_object(out);
    std::vector<BranchProposal> list;
    if (parsed.contains("branches")) {
      for (const auto& b : parsed.at("branches")) list.push_back(read_proposal(b));
    } else {
      list.push_back(read_proposal(parsed));
    }
    if (list.empty()) throw Error(Errc::SchemaViolation, "expected at least one branch");
    return list;
  });
  auto taken = existing_labels;
  for (auto& p : proposals) {
    p.intent_label = resolve_label_collision(p.intent_label, taken);
    taken.push_back(p.intent_label);
  }
  return proposals;
}

std::string compose_feedback(Provider& provider, const SceneNode& scene, std::string_view utterance,
                             const MatchDecision& decision) {
  auto request = make_request(PromptTask::Feedback, "feedback",
                              {{"scene_avatar", scene.avatar_utterance},
                               {"scene_description", scene.description},
                               {"utterance", std::string(utterance)},
                               {"decision_kind", std::string(decision_kind(decision))},
                               {"decision_label", decision_label(decision)}});
  auto text = std::string(text::trim(provider.complete(request)));
  if (text.empty()) throw Error(Errc::ProviderUnavailable, "provider returned empty feedback");
  return text;
}

}  // namespace gloss
