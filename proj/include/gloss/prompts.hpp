#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>

namespace gloss {

/// Bundled text files compiled into the library (prompts/ and templates/).
struct Asset {
  std::string_view name;  // file stem
  std::string_view content;
};

std::span<const Asset> prompt_assets();
std::span<const Asset> template_assets();

using PromptVariables = std::map<std::string, std::string>;

/// A prompt asset: `# key: value` header lines, then `[system]` and `[user]`
/// sections with `{{variable}}` placeholders.
struct PromptTemplate {
  std::string name;
  int version = 0;
  std::string system;
  std::string user;

  std::string render_system(const PromptVariables& vars) const;
  std::string render_user(const PromptVariables& vars) const;
};

PromptTemplate parse_prompt_template(std::string name, std::string_view text);

/// Replaces each `{{name}}` with its value; unknown placeholders stay as-is.
std::string fill_placeholders(std::string_view text, const PromptVariables& vars);

/// Looks up a prompt by name. Files in $GLOSS_PROMPT_DIR override the bundled
/// copies, so instructors can tune wording without a rebuild. Throws NotFound.
const PromptTemplate& prompt_template(std::string_view name);

}  // namespace gloss
