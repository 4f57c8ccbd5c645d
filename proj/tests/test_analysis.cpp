#include <doctest.h>

#include <cmath>

#include "hloc/analysis.hpp"
#include "hloc/syntax.hpp"
#include "support.hpp"

using namespace hloc;

TEST_CASE("type rate counts gold tokens against tokens up to the gold index") {
  GenerationRecord r = hloc::testing::make_record({"x", " =", " f", "(", " -", "1", ")", " +", " y", "\n"},
                                                  Language::Python, {}, false);
  r.gold_index = 5;
  const auto ann = annotate_all(std::span(&r, 1));
  // Hand count: '=' (2) and '-' (5) are the operators at or before index 5.
  REQUIRE(ann[0][1].type == TokenType::Operator);
  REQUIRE(ann[0][4].type == TokenType::Operator);
  REQUIRE(ann[0][7].type == TokenType::Operator);
  const TypeTable t = type_rate_table(std::span(&r, 1), ann);
  CHECK(t.get("test-model", TokenType::Operator) == 0.5);
  CHECK(t.get("test-model", TokenType::Identifier) == 0.0);
  CHECK_FALSE(t.get("test-model", TokenType::Keyword).has_value());

  const TypeTable all = type_rate_table(std::span(&r, 1), ann, RateDenominator::All);
  CHECK(all.get("test-model", TokenType::Operator) == doctest::Approx(1.0 / 3.0));
  CHECK(t.to_csv().find("Operator,0.500000") != std::string::npos);
}

TEST_CASE("type proportions") {
  GenerationRecord r = hloc::testing::make_record({"return", " ", "a", "b"}, Language::Python, {}, false);
  const auto ann = annotate_all(std::span(&r, 1));
  const TypeTable t = type_proportion_table(std::span(&r, 1), ann);
  CHECK(t.get("test-model", TokenType::Identifier) == 0.5);
  CHECK(t.get("test-model", TokenType::Keyword) == 0.25);
  CHECK(t.get("test-model", TokenType::Space) == 0.25);

  std::vector<GenerationRecord> rs = {hloc::testing::make_record(hloc::testing::figure1_tokens(), Language::Python,
                                                                 hloc::testing::figure1_prefix())};
  rs.push_back(r);
  rs[1].model = "other";
  const auto anns = annotate_all(rs, 2);
  const TypeTable p = type_proportion_table(rs, anns);
  for (const auto& [g, row] : p.cells) {
    double sum = 0;
    for (const auto& [type, c] : row) sum += c.value;
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("quantiles interpolate linearly") {
  const std::vector<double> v = {1, 2, 3, 4};
  CHECK(quantile_sorted(v, 0.25) == doctest::Approx(1.75));
  CHECK(quantile_sorted(v, 0.5) == doctest::Approx(2.5));
  CHECK(quantile_sorted(v, 1.0) == 4);
  const Summary s = summarize({0.05, 0.15, 0.95}, 0.0, 1.0, 10);
  CHECK(s.histogram[0] == 1);
  CHECK(s.histogram[1] == 1);
  CHECK(s.histogram[9] == 1);
}

TEST_CASE("distribution report separates gold from earlier tokens") {
  std::vector<GenerationRecord> rs;
  for (int i = 0; i < 6; ++i) {
    GenerationRecord r = hloc::testing::make_record({"x", " =", " 1", " +", " 2"}, Language::Python, {}, false,
                                                    "r" + std::to_string(i));
    r.gold_index = 2 + i % 4;
    r.steps[*r.gold_index - 1] = hloc::testing::confident_step(r.tokens[*r.gold_index - 1], 0.1);
    rs.push_back(r);
  }
  const DistributionReport rep = distribution_report(rs, annotate_all(rs));
  const auto* gold = rep.find("model", "test-model", "chosen_prob", "gold");
  const auto* pre = rep.find("model", "test-model", "chosen_prob", "pre_gold");
  REQUIRE(gold);
  REQUIRE(pre);
  CHECK(gold->summary.median == doctest::Approx(0.1));
  CHECK(pre->summary.median == doctest::Approx(0.9));
  CHECK(rep.find("model", "absent", "chosen_prob", "gold") == nullptr);
  CHECK(rep.find("dataset", "mbpp", "entropy", "gold") != nullptr);

  for (auto& r : rs) {
    for (auto& s : r.steps) {
      s.entries.resize(1);
      s.entries[0].logprob = 0.0;
      s.chosen_logprob = 0.0;
    }
  }
  const DistributionReport det = distribution_report(rs, annotate_all(rs));
  for (const auto& e : det.entries) {
    if (e.signal == "entropy") {
      CHECK(e.summary.max == 0.0);
      CHECK(e.summary.min == 0.0);
    }
  }
}
