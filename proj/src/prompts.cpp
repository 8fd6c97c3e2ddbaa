#include "gloss/prompts.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

#include "gloss/error.hpp"
#include "gloss/text.hpp"

namespace gloss {

std::string fill_placeholders(std::string_view text, const PromptVariables& vars) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto open = text.find("{{", pos);
    if (open == std::string_view::npos) break;
    auto close = text.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(text.substr(pos, open - pos));
    const std::string key(text::trim(text.substr(open + 2, close - open - 2)));
    auto it = vars.find(key);
    if (it != vars.end()) {
      out += it->second;
    } else {
      out.append(text.substr(open, close + 2 - open));
    }
    pos = close + 2;
  }
  out.append(text.substr(pos));
  return out;
}

std::string PromptTemplate::render_system(const PromptVariables& vars) const {
  return fill_placeholders(system, vars);
}

std::string PromptTemplate::render_user(const PromptVariables& vars) const {
  return fill_placeholders(user, vars);
}

PromptTemplate parse_prompt_template(std::string name, std::string_view content) {
  PromptTemplate tpl;
  tpl.name = std::move(name);
  std::string* section = nullptr;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    if (!section && line.rfind("# version:", 0) == 0) {
      tpl.version = std::atoi(line.c_str() + 10);
    } else if (line == "[system]") {
      section = &tpl.system;
    } else if (line == "[user]") {
      section = &tpl.user;
    } else if (section) {
      *section += line;
      *section += '\n';
    }
  }
  tpl.system = std::string(text::trim(tpl.system));
  tpl.user = std::string(text::trim(tpl.user));
  if (tpl.user.empty()) {
    throw Error(Errc::InvalidArgument, "prompt '" + tpl.name + "' has no [user] section");
  }
  return tpl;
}

const PromptTemplate& prompt_template(std::string_view name) {
  static std::mutex mu;
  static std::map<std::string, PromptTemplate, std::less<>> cache;
  std::lock_guard lock(mu);
  if (auto it = cache.find(name); it != cache.end()) return it->second;

  std::string content;
  if (const char* dir = std::getenv("GLOSS_PROMPT_DIR"); dir && *dir) {
    std::ifstream file(std::filesystem::path(dir) / (std::string(name) + ".txt"), std::ios::binary);
    if (file) content.assign(std::istreambuf_iterator<char>(file), {});
  }
  if (content.empty()) {
    for (const auto& asset : prompt_assets()) {
      if (asset.name == name) content = asset.content;
    }
  }
  if (content.empty()) throw Error(Errc::NotFound, "no prompt template named " + std::string(name));
  auto [it, inserted] = cache.emplace(std::string(name), parse_prompt_template(std::string(name), content));
  return it->second;
}

}  // namespace gloss
