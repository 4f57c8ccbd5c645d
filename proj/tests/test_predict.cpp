#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hloc/error.hpp"
#include "hloc/predict.hpp"
#include "synthetic.hpp"

using namespace hloc;

namespace {

TokenRows labeled_rows(std::size_t correct, std::size_t hallucinated) {
  TokenRows rows;
  rows.cols = 2;
  for (std::size_t i = 0; i < correct + hallucinated; ++i) {
    rows.data.push_back(static_cast<double>(i));
    rows.data.push_back(0.0);
    rows.labels.push_back(i < correct ? 0 : 1);
  }
  return rows;
}

TrainConfig quick_config() {
  TrainConfig c;
  c.trees = 10;
  c.epochs = 3;
  c.mlp_hidden = 8;
  c.encoder.hidden = 8;
  c.encoder.layers = 1;
  c.encoder.heads = 2;
  c.encoder.ff_hidden = 16;
  return c;
}

FeatureMatrix per_sample_with_logits(std::size_t rows) {
  FeatureMatrix m;
  m.mode = FeatureMode::PerSample;
  m.rows = rows;
  m.cols = feature_width(FeatureMode::PerSample);
  m.data.assign(rows * m.cols, 0.0);
  m.labels.assign(rows, RowLabel::Unlabeled);
  return m;
}

}  // namespace

TEST_CASE("downsample keeps the requested ratio") {
  const TokenRows rows = labeled_rows(90, 10);
  const TokenRows kept = downsample(rows, 3.0, 7);
  CHECK(kept.size() == 40);
  CHECK(std::count(kept.labels.begin(), kept.labels.end(), 1) == 10);
  CHECK(downsample(rows, 3.0, 7).data == kept.data);
  CHECK(downsample(rows, 3.0, 8).data != kept.data);
  CHECK(downsample(labeled_rows(5, 10), 3.0, 1).size() == 15);
  CHECK_THROWS_AS(downsample(labeled_rows(5, 0), 3.0, 1), Error);
  CHECK_THROWS_AS(downsample(rows, 0.5, 1), Error);
}

TEST_CASE("scan picks the first score at or above the threshold") {
  CHECK(first_crossing(std::vector<double>{.1, .2, .9, .8}, 0.5) == 3);
  CHECK_FALSE(first_crossing(std::vector<double>{.1, .2, .4}, 0.5).has_value());
  CHECK(first_crossing(std::vector<double>{.6, .1}, 0.5) == 1);
  CHECK(first_crossing(std::vector<double>{.5}, 0.5) == 1);
}

TEST_CASE("pointer argmax breaks ties toward the smallest index") {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(8);
  z(4) = 3.0;
  CHECK(argmax_first(z) == 5);
  z.setZero();
  z(1) = 2.0;
  z(5) = 2.0;
  CHECK(argmax_first(z) == 2);
  CHECK(argmax_first(Eigen::VectorXd::Constant(1, -4.0)) == 1);
}

TEST_CASE("token classifiers reject bad inputs") {
  CHECK_THROWS_AS(train_token_classifier({}, ModelKind::TreeEnsemble, quick_config()), Error);
  auto records = hloc::testing::planted_corpus(4, 1);
  for (auto& r : records) r.gold_index = 1;  // only hallucinated rows survive
  const auto ms = hloc::testing::featurize_all(records, FeatureMode::PerToken);
  CHECK_THROWS_AS(train_token_classifier(ms, ModelKind::LinearLogistic, quick_config()), Error);
  CHECK_THROWS_AS(train_token_classifier(ms, ModelKind::RecurrentPointer, quick_config()), Error);
}

TEST_CASE("constant features give constant scores and a warning") {
  auto records = hloc::testing::planted_corpus(30, 2);
  auto ms = hloc::testing::featurize_all(records, FeatureMode::PerToken);
  for (auto& m : ms) std::fill(m.data.begin(), m.data.end(), 0.25);
  for (ModelKind kind : {ModelKind::TreeEnsemble, ModelKind::LinearLogistic, ModelKind::FeedForward}) {
    const PredictorModel model = train_token_classifier(ms, kind, quick_config());
    REQUIRE(model.warnings().size() == 1);
    const auto s = model.scores(ms[0]);
    for (double v : s) CHECK(v == doctest::Approx(s[0]));
  }
}

TEST_CASE("models round trip through files and refuse other versions") {
  auto records = hloc::testing::planted_corpus(40, 3);
  const auto tok = hloc::testing::featurize_all(records, FeatureMode::PerToken);
  const auto seq = hloc::testing::featurize_all(records, FeatureMode::PerSample);
  std::vector<PredictorModel> models;
  for (ModelKind kind : {ModelKind::TreeEnsemble, ModelKind::LinearLogistic, ModelKind::FeedForward}) {
    models.push_back(train_token_classifier(tok, kind, quick_config()));
  }
  for (nn::EncoderKind e : {nn::EncoderKind::Recurrent, nn::EncoderKind::Convolutional, nn::EncoderKind::Attention}) {
    TrainConfig c = quick_config();
    c.encoder.kind = e;
    c.epochs = 1;
    models.push_back(train_pointer(seq, c));
  }
  const auto path = std::filesystem::temp_directory_path() / "hloc_model_test.bin";
  for (const PredictorModel& m : models) {
    INFO(to_string(m.kind()));
    save_model(path, m);
    const PredictorModel back = load_model(path);
    CHECK(back.kind() == m.kind());
    CHECK(serialize_model(back) == serialize_model(m));
    if (is_per_token(m.kind())) {
      CHECK(back.scores(tok[0]) == m.scores(tok[0]));
      CHECK_THROWS_AS(m.scores(seq[0]), Error);
    } else {
      CHECK(back.pointer_logits(seq[1]) == m.pointer_logits(seq[1]));
      CHECK_THROWS_AS(predict_pointer(m, tok[0]), Error);
    }
  }

  const std::string bytes = serialize_model(models[0]);
  CHECK_THROWS_AS(deserialize_model(bytes.substr(0, bytes.size() - 5), "cut"), Error);
  std::string bumped = bytes;
  const auto at = bumped.find("\"feature_layout_version\":1");
  REQUIRE(at != std::string::npos);
  bumped.replace(at, 26, "\"feature_layout_version\":2");
  try {
    deserialize_model(bumped, "bumped");
    FAIL("expected refusal");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Version);
  }
  std::filesystem::remove(path);
}

TEST_CASE("training is deterministic under a seed") {
  auto records = hloc::testing::planted_corpus(30, 4);
  const auto tok = hloc::testing::featurize_all(records, FeatureMode::PerToken);
  const auto seq = hloc::testing::featurize_all(records, FeatureMode::PerSample);
  for (ModelKind kind : {ModelKind::TreeEnsemble, ModelKind::FeedForward}) {
    CHECK(serialize_model(train_token_classifier(tok, kind, quick_config())) ==
          serialize_model(train_token_classifier(tok, kind, quick_config())));
  }
  TrainConfig c = quick_config();
  c.epochs = 1;
  CHECK(serialize_model(train_pointer(seq, c)) == serialize_model(train_pointer(seq, c)));
  c.seed = 1;
  CHECK(serialize_model(train_pointer(seq, c)) != serialize_model(train_pointer(seq, quick_config())));
}

TEST_CASE("pointer training validates gold indices first") {
  auto records = hloc::testing::planted_corpus(3, 5);
  auto seq = hloc::testing::featurize_all(records, FeatureMode::PerSample);
  seq[1].gold_index = static_cast<int>(seq[1].rows) + 1;
  CHECK_THROWS_AS(train_pointer(seq, quick_config()), Error);
  seq[1].gold_index.reset();
  CHECK_THROWS_AS(train_pointer(seq, quick_config()), Error);
}

TEST_CASE("raising the scan threshold never moves the prediction earlier") {
  Rng rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> s(1 + rng.below(15));
    for (double& v : s) v = rng.uniform();
    const double lo = rng.uniform();
    const double hi = lo + rng.uniform(0.0, 1.0 - lo);
    const auto a = first_crossing(s, lo);
    const auto b = first_crossing(s, hi);
    if (b) {
      REQUIRE(a.has_value());
      CHECK(*b >= *a);
    }
  }
}

TEST_CASE("planted rule is learnable by the forest") {
  auto train = hloc::testing::planted_corpus(300, 10);
  auto test = hloc::testing::planted_corpus(100, 11);
  const auto tr = hloc::testing::featurize_all(train, FeatureMode::PerToken);
  const auto te = hloc::testing::featurize_all(test, FeatureMode::PerToken);
  TrainConfig c;
  c.trees = 20;
  const PredictorModel model = train_token_classifier(tr, ModelKind::TreeEnsemble, c);
  int hits = 0;
  for (const auto& m : te) hits += predict_scan(model, m) == m.gold_index;
  CHECK(hits >= 90);
}

TEST_CASE("training options parse from JSON") {
  const TrainConfig c = TrainConfig::from_json(
      nlohmann::json::parse(R"({"epochs": 2, "trees": 7, "encoder": {"kind": "attention", "hidden": 16}})"));
  CHECK(c.epochs == 2);
  CHECK(c.trees == 7);
  CHECK(c.encoder.kind == nn::EncoderKind::Attention);
  CHECK(c.encoder.hidden == 16);
  CHECK(c.encoder.heads == nn::EncoderConfig::defaults(nn::EncoderKind::Attention).heads);
  CHECK(c.batch_size == TrainConfig{}.batch_size);

  auto kind_of = [](const char* text) {
    try {
      TrainConfig::from_json(nlohmann::json::parse(text));
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Usage;
  };
  CHECK(kind_of(R"({"epoch": 2})") == ErrorKind::Config);
  CHECK(kind_of(R"({"encoder": {"width": 3}})") == ErrorKind::Config);
  CHECK(kind_of(R"({"downsample_ratio": 0.5})") == ErrorKind::Config);
  CHECK(kind_of(R"({"epochs": "many"})") == ErrorKind::Config);
}
