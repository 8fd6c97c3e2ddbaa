#pragma once

#include <exception>
#include <string>

#include "gloss/error.hpp"
#include "gloss/prompts.hpp"

namespace gloss {

template <class Accept>
auto structured_call(Provider& provider, PromptRequest request, Errc failure, Accept&& accept)
    -> decltype(accept(std::string())) {
  request.expects = Expectation::StructuredJson;
  std::string output = provider.complete(request);
  std::string problem;
  try {
    return accept(output);
  } catch (const std::exception& e) {
    problem = e.what();
  }

  const auto& repair = prompt_template("repair");
  request.follow_up = {
      {"assistant", output},
      {"user", repair.render_user({{"previous_output", output}, {"problem", problem}})},
  };
  output = provider.complete(request);
  try {
    return accept(output);
  } catch (const std::exception& e) {
    throw Error(failure, "provider output unusable after one repair attempt: " + std::string(e.what()));
  }
}

}  // namespace gloss
