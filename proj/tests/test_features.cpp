#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "hloc/error.hpp"
#include "hloc/features.hpp"
#include "hloc/rng.hpp"
#include "hloc/syntax.hpp"
#include "support.hpp"

using namespace hloc;

namespace {

LogProbStep step_of(std::vector<double> probs) {
  LogProbStep s;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    s.entries.push_back({"t" + std::to_string(i), std::log(probs[i])});
  }
  s.chosen = 0;
  s.chosen_logprob = s.entries[0].logprob;
  return s;
}

GenerationRecord twelve_tokens() {
  return hloc::testing::make_record(
      {"return", " all", "(", "x", " <", " y", " for", " x", ",", " y", " in", " z"},
      Language::Python, "def f(z):\n    ", false);
}

}  // namespace

TEST_CASE("step probabilities are sorted and padded") {
  const auto p = step_probabilities(step_of({0.2, 0.7, 0.1}));
  CHECK(p[0] == doctest::Approx(0.7));
  CHECK(p[1] == doctest::Approx(0.2));
  CHECK(p[2] == doctest::Approx(0.1));
  for (std::size_t i = 3; i < p.size(); ++i) CHECK(p[i] == 0.0);

  CHECK(step_probabilities(step_of({1.0}))[0] == 1.0);
  const auto u = step_probabilities(step_of(std::vector<double>(100, 0.01)));
  for (double v : u) CHECK(v == doctest::Approx(0.01));
}

TEST_CASE("step entropy") {
  CHECK(std::abs(step_entropy(step_of(std::vector<double>(100, 0.01))) - std::log(100.0)) < 1e-12);
  CHECK(step_entropy(step_of({1.0})) == 0.0);
  CHECK(step_entropy(step_of({0.5, 0.5})) == doctest::Approx(0.69314718));
  // Renormalized: {0.2, 0.2} is uniform over two entries.
  CHECK(step_entropy(step_of({0.2, 0.2})) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(step_entropy(LogProbStep{}), Error);

  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.below(100);
    std::vector<double> probs(k);
    double total = 0;
    for (double& p : probs) total += (p = rng.uniform(0.01, 1.0));
    for (double& p : probs) p /= total;
    const double h = step_entropy(step_of(probs));
    CHECK(h >= 0.0);
    CHECK(h <= std::log(static_cast<double>(k)) + 1e-12);
  }
}

TEST_CASE("featurize widths and labels") {
  GenerationRecord r = twelve_tokens();
  const auto ann = annotate_tokens(r);
  const FeatureMatrix tok = featurize(r, ann, FeatureMode::PerToken);
  CHECK(tok.rows == 12);
  CHECK(tok.cols == 109);
  CHECK(tok.data.size() == 12 * 109);
  const FeatureMatrix seq = featurize(r, ann, FeatureMode::PerSample);
  CHECK(seq.cols == 108);

  for (std::size_t i = 0; i < tok.rows; ++i) {
    int hot = 0;
    for (std::size_t c = 100; c < 108; ++c) hot += tok.at(i, c) == 1.0;
    CHECK(hot == 1);
    CHECK(tok.at(i, 100 + static_cast<std::size_t>(ann[i].type)) == 1.0);
    CHECK(tok.at(i, 108) == static_cast<double>(i + 1));
    CHECK(tok.at(i, 0) == doctest::Approx(0.9));
    CHECK(tok.at(i, 1) == doctest::Approx(0.1));
    CHECK(tok.labels[i] == RowLabel::Unlabeled);
  }
  CHECK_THROWS_AS(featurize(r, ann, FeatureMode::PerToken, true), Error);

  r.gold_index = 5;
  const FeatureMatrix lab = featurize(r, ann, FeatureMode::PerToken, true);
  for (std::size_t i = 0; i < 4; ++i) CHECK(lab.labels[i] == RowLabel::Correct);
  CHECK(lab.labels[4] == RowLabel::Hallucinated);
  for (std::size_t i = 5; i < 12; ++i) CHECK(lab.labels[i] == RowLabel::Unlabeled);
  CHECK(lab.gold_index == 5);
}

TEST_CASE("rows do not depend on the order of tied entries") {
  GenerationRecord r = hloc::testing::make_record({"a", "b"}, Language::Python, {}, false);
  r.steps[0] = step_of({0.4, 0.3, 0.3});
  const auto ann = annotate_tokens(r);
  const FeatureMatrix before = featurize(r, ann, FeatureMode::PerSample);
  std::swap(r.steps[0].entries[1], r.steps[0].entries[2]);
  CHECK(featurize(r, ann, FeatureMode::PerSample) == before);
}

TEST_CASE("feature files round trip") {
  GenerationRecord r = twelve_tokens();
  r.gold_index = 3;
  const auto ann = annotate_tokens(r);
  std::vector<FeatureMatrix> ms = {featurize(r, ann, FeatureMode::PerToken, true)};
  GenerationRecord s = twelve_tokens();
  s.id = "other";
  ms.push_back(featurize(s, annotate_tokens(s), FeatureMode::PerToken));
  const auto path = std::filesystem::temp_directory_path() / "hloc_features_test.bin";
  write_feature_file(path, ms);
  CHECK(read_feature_file(path) == ms);

  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  CHECK_THROWS_AS(read_feature_file(path), Error);
  std::filesystem::remove(path);
}
