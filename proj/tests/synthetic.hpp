#pragma once

// Planted-rule corpus: every step's top-1 probability is high except at the
// gold token, where it is the sequence minimum. The generator knows the
// answer, so it doubles as the oracle.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hloc/corpus.hpp"
#include "hloc/features.hpp"
#include "hloc/rng.hpp"
#include "hloc/syntax.hpp"

namespace hloc::testing {

inline LogProbStep planted_step(const std::string& text, double top1, Rng& rng) {
  LogProbStep step;
  step.entries.push_back({text, std::log(top1)});
  const std::size_t alternatives = 1 + rng.below(9);
  std::vector<double> alt(alternatives);
  double room = 1.0 - top1;
  for (double& a : alt) {
    a = std::min(top1 * rng.uniform(0.05, 0.95), room * 0.5);
    room -= a;
  }
  std::sort(alt.rbegin(), alt.rend());
  for (std::size_t i = 0; i < alt.size(); ++i) {
    if (alt[i] > 0) step.entries.push_back({"alt" + std::to_string(i), std::log(alt[i])});
  }
  step.chosen = 0;
  step.chosen_logprob = std::log(top1);
  return step;
}

inline std::vector<GenerationRecord> planted_corpus(std::size_t count, std::uint64_t seed,
                                                   std::size_t min_len = 5, std::size_t max_len = 20) {
  static const char* vocab[] = {"x", " =", " 1", "(", ")", " +", " y", "\n", "return", " foo", ",", " if"};
  Rng rng(seed);
  std::vector<GenerationRecord> out;
  for (std::size_t i = 0; i < count; ++i) {
    GenerationRecord r;
    r.id = "s" + std::to_string(i);
    r.task = Task::CG;
    r.dataset = i % 2 ? "mbpp" : "humaneval";
    r.model = i % 3 == 0 ? "model-a" : (i % 3 == 1 ? "model-b" : "model-c");
    r.language = Language::Python;
    r.problem_id = "p" + std::to_string(i);
    const std::size_t len = min_len + rng.below(max_len - min_len + 1);
    const std::size_t gold = 1 + rng.below(len);
    for (std::size_t t = 1; t <= len; ++t) {
      r.tokens.push_back(vocab[rng.below(std::size(vocab))]);
      const double top1 = t == gold ? rng.uniform(0.02, 0.3) : rng.uniform(0.35, 1.0);
      r.steps.push_back(planted_step(r.tokens.back(), top1, rng));
    }
    r.gold_index = static_cast<int>(gold);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<FeatureMatrix> featurize_all(const std::vector<GenerationRecord>& records, FeatureMode mode) {
  std::vector<FeatureMatrix> out;
  for (const GenerationRecord& r : records) out.push_back(featurize(r, annotate_tokens(r), mode, true));
  return out;
}

}  // namespace hloc::testing
