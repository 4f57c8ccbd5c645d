#include <doctest.h>

#include <set>

#include "hloc/error.hpp"
#include "hloc/harness.hpp"
#include "hloc/rng.hpp"
#include "support.hpp"
#include "synthetic.hpp"

using namespace hloc;

namespace {

std::vector<GenerationRecord> labeled(std::size_t n, const std::string& dataset = "mbpp",
                                      const std::string& model = "m", const std::string& prefix = "r") {
  std::vector<GenerationRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    GenerationRecord r = hloc::testing::make_record({"x", " =", " 1", "\n", "y"}, Language::Python, {}, false,
                                                    prefix + std::to_string(i));
    r.dataset = dataset;
    r.model = model;
    r.gold_index = 1 + static_cast<int>(i % 5);
    out.push_back(r);
  }
  return out;
}

std::vector<FeatureMatrix> matrices_for(const std::vector<GenerationRecord>& rs, FeatureMode mode) {
  std::vector<FeatureMatrix> out;
  for (const auto& r : rs) out.push_back(featurize(r, annotate_tokens(r), mode, true));
  return out;
}

Trainer oracle_trainer() {
  return [](std::span<const FeatureMatrix>) -> Predictor {
    return [](const FeatureMatrix& m) { return m.gold_index; };
  };
}

Trainer constant_trainer(int index) {
  return [index](std::span<const FeatureMatrix>) -> Predictor {
    return [index](const FeatureMatrix&) -> std::optional<int> { return index; };
  };
}

}  // namespace

TEST_CASE("folds partition each group evenly") {
  const auto rs = labeled(100);
  const SplitPlan plan = make_folds(rs, SplitRegime::AllInOne, 5, 3);
  std::map<int, int> sizes;
  for (const auto& [id, f] : plan.assignments) ++sizes[f];
  CHECK(sizes.size() == 5);
  for (const auto& [f, n] : sizes) CHECK(n == 20);
  CHECK(plan.assignments.size() == 100);

  auto mixed = labeled(50, "mbpp", "m", "a");
  for (auto& r : labeled(50, "defects4j", "m", "b")) mixed.push_back(r);
  const SplitPlan per_dataset = make_folds(mixed, SplitRegime::OnePerDataset, 5, 3);
  CHECK(per_dataset.group_names() == std::vector<std::string>{"defects4j", "mbpp"});
  std::map<std::pair<std::string, int>, int> counts;
  for (const auto& [id, f] : per_dataset.assignments) ++counts[{per_dataset.groups.at(id), f}];
  CHECK(counts.size() == 10);
  for (const auto& [key, n] : counts) CHECK(n == 10);

  auto uneven = labeled(23);
  const SplitPlan p = make_folds(uneven, SplitRegime::AllInOne, 5, 0);
  std::map<int, int> s;
  for (const auto& [id, f] : p.assignments) ++s[f];
  for (const auto& [f, n] : s) CHECK((n == 4 || n == 5));
}

TEST_CASE("fold errors") {
  try {
    make_folds(labeled(3), SplitRegime::AllInOne, 5, 0);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("'all'") != std::string::npos);
  }
  auto dup = labeled(10);
  dup[3].id = dup[4].id;
  CHECK_THROWS_AS(make_folds(dup, SplitRegime::AllInOne, 5, 0), Error);
}

TEST_CASE("fold assignment ignores record order") {
  auto rs = labeled(40);
  const SplitPlan ref = make_folds(rs, SplitRegime::AllInOne, 5, 9);
  Rng rng(1);
  for (int i = 0; i < 5; ++i) {
    rng.shuffle(rs);
    CHECK(make_folds(rs, SplitRegime::AllInOne, 5, 9).assignments == ref.assignments);
  }
  CHECK(make_folds(rs, SplitRegime::AllInOne, 5, 10).assignments != ref.assignments);
}

TEST_CASE("oracle predictor is perfect under every regime and mode") {
  std::vector<GenerationRecord> rs;
  for (const char* ds : {"mbpp", "humaneval"}) {
    for (const char* m : {"m1", "m2"}) {
      for (auto& r : labeled(10, ds, m, std::string(ds) + m)) rs.push_back(r);
    }
  }
  for (FeatureMode mode : {FeatureMode::PerToken, FeatureMode::PerSample}) {
    const auto ms = matrices_for(rs, mode);
    for (SplitRegime regime : {SplitRegime::AllInOne, SplitRegime::OnePerDataset, SplitRegime::OnePerLLM}) {
      const EvalReport rep = evaluate(rs, ms, make_folds(rs, regime, 5, 0), oracle_trainer(), "oracle", mode);
      for (const EvalCell& c : rep.cells) CHECK(c.accuracy == 1.0);
    }
  }
}

TEST_CASE("constant predictor accuracy equals the share of matching golds") {
  auto rs = labeled(50);
  for (std::size_t i = 0; i < rs.size(); ++i) rs[i].gold_index = i < 20 ? 1 : 2 + static_cast<int>(i % 3);
  const auto ms = matrices_for(rs, FeatureMode::PerSample);
  const EvalReport rep = evaluate(rs, ms, make_folds(rs, SplitRegime::AllInOne, 5, 0), constant_trainer(1),
                                  "constant", FeatureMode::PerSample);
  REQUIRE(rep.cells.size() == 1);
  CHECK(rep.cells[0].matches == 20);
  CHECK(rep.cells[0].evaluated == 50);
  CHECK(rep.cells[0].accuracy == 0.4);

  auto one = labeled(5);
  for (auto& r : one) r.gold_index = 5;
  const EvalReport miss = evaluate(one, matrices_for(one, FeatureMode::PerSample),
                                   make_folds(one, SplitRegime::AllInOne, 5, 0), constant_trainer(3), "c",
                                   FeatureMode::PerSample);
  CHECK(miss.cells[0].accuracy == 0.0);
}

TEST_CASE("unlabeled records are rejected") {
  auto rs = labeled(10);
  const auto ms = matrices_for(rs, FeatureMode::PerToken);
  rs[2].gold_index.reset();
  CHECK_THROWS_AS(evaluate(rs, ms, make_folds(rs, SplitRegime::AllInOne, 5, 0), oracle_trainer(), "o",
                           FeatureMode::PerToken),
                  Error);
}

TEST_CASE("cross matrix covers every pair of model groups") {
  auto rs = labeled(10, "mbpp", "m1", "a");
  for (auto& r : labeled(10, "mbpp", "m2", "b")) rs.push_back(r);
  const auto ms = matrices_for(rs, FeatureMode::PerSample);
  const EvalReport rep = cross_matrix(rs, ms, constant_trainer(1), "constant", FeatureMode::PerSample);
  CHECK(rep.cells.size() == 4);
  for (const EvalCell& c : rep.cells) {
    CHECK(c.accuracy >= 0.0);
    CHECK(c.accuracy <= 1.0);
    CHECK(c.fold_accuracy.empty() == (c.train_group != c.test_group));
  }
  REQUIRE(rep.cell("m1", "m2") != nullptr);
  CHECK(rep.cell("m1", "m2")->evaluated == 10);
  CHECK(rep.cell("m1", "m1")->fold_accuracy.size() == 5);
  CHECK(rep.file_stem() == "cross_one-per-llm_per-sample_constant_seed0");

  const auto single = labeled(10);
  CHECK_THROWS_AS(cross_matrix(single, matrices_for(single, FeatureMode::PerSample), oracle_trainer(), "o",
                               FeatureMode::PerSample),
                  Error);
}

TEST_CASE("evaluation does not depend on record order") {
  auto rs = hloc::testing::planted_corpus(60, 21);
  TrainConfig c;
  c.trees = 5;
  const Trainer trainer = model_trainer(ModelKind::TreeEnsemble, c);
  auto run = [&](const std::vector<GenerationRecord>& records) {
    const auto ms = hloc::testing::featurize_all(records, FeatureMode::PerToken);
    return evaluate(records, ms, make_folds(records, SplitRegime::AllInOne, 5, 2), trainer, "forest",
                    FeatureMode::PerToken);
  };
  const EvalReport ref = run(rs);
  Rng rng(8);
  rng.shuffle(rs);
  const EvalReport again = run(rs);
  CHECK(again.cells[0].matches == ref.cells[0].matches);
  CHECK(again.cells[0].fold_accuracy == ref.cells[0].fold_accuracy);
}
