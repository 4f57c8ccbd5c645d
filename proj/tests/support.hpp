#pragma once

// Fixture builders shared by the unit and acceptance suites.

#include <cmath>
#include <string>
#include <vector>

#include "hloc/corpus.hpp"

namespace hloc::testing {

inline LogProbStep confident_step(const std::string& text, double p = 0.9) {
  LogProbStep step;
  step.entries = {{text, std::log(p)}, {"<alt>", std::log(1.0 - p)}};
  step.chosen = 0;
  step.chosen_logprob = std::log(p);
  return step;
}

/// Record whose steps all put `p` on the emitted token. With eos the token
/// list gains a trailing EOS sentinel.
inline GenerationRecord make_record(std::vector<std::string> tokens, Language language,
                                    std::string prefix = {}, bool eos = true,
                                    std::string id = "r1") {
  GenerationRecord r;
  r.id = std::move(id);
  r.task = Task::CG;
  r.dataset = language == Language::Python ? "mbpp" : "humaneval-java";
  r.model = "test-model";
  r.language = language;
  r.problem_id = "p1";
  if (!prefix.empty()) r.context_prefix = std::move(prefix);
  r.tokens = std::move(tokens);
  for (const std::string& t : r.tokens) r.steps.push_back(confident_step(t));
  if (eos) {
    r.tokens.emplace_back();
    r.ends_with_eos = true;
    r.eos_text = "<EOS>";
    r.steps.push_back(confident_step("<EOS>"));
  }
  return r;
}

/// The worked example: "<" is the fifth generated token.
inline std::vector<std::string> figure1_tokens() {
  return {"return", " all", "(", "x", " <", " y", " for", " x", ",", " y", " in", " zip",
          "(",      "tup",  "1", ",", " tup", "2", "))"};
}

inline const char* figure1_prefix() { return "def check_smaller(tup1, tup2):\n    "; }

}  // namespace hloc::testing
