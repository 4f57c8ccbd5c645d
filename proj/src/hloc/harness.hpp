#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hloc/corpus.hpp"
#include "hloc/features.hpp"
#include "hloc/predict.hpp"

namespace hloc {

enum class SplitRegime { AllInOne, OnePerDataset, OnePerLLM };

std::string_view to_string(SplitRegime regime);
SplitRegime parse_split_regime(std::string_view name);

/// Group a record belongs to under a regime: "all", its dataset, or its model.
std::string group_key(const GenerationRecord& record, SplitRegime regime);

struct SplitPlan {
  SplitRegime regime = SplitRegime::AllInOne;
  int k = 5;
  std::uint64_t seed = 0;
  std::map<std::string, int> assignments;     // record id -> fold
  std::map<std::string, std::string> groups;  // record id -> group

  std::vector<std::string> group_names() const;
};

/// Per group: ids sorted, shuffled under a group-derived seed, dealt round
/// robin into k folds.
SplitPlan make_folds(std::span<const GenerationRecord> records, SplitRegime regime, int k = 5,
                     std::uint64_t seed = 0);

/// Predicted 1-based index for one record, or nullopt when nothing is flagged.
using Predictor = std::function<std::optional<int>(const FeatureMatrix&)>;
using Trainer = std::function<Predictor(std::span<const FeatureMatrix> train)>;

/// Trains the given kind; per-token kinds scan at threshold.
Trainer model_trainer(ModelKind kind, const TrainConfig& config, double threshold = 0.5);

struct EvalCell {
  std::string train_group;
  std::string test_group;
  std::string model;
  double accuracy = 0.0;  // matches / evaluated, pooled over folds
  std::size_t matches = 0;
  std::size_t evaluated = 0;
  std::vector<double> fold_accuracy;  // empty for cells without folds
};

struct EvalReport {
  std::string kind;  // "cv" or "cross"
  SplitRegime regime = SplitRegime::AllInOne;
  FeatureMode mode = FeatureMode::PerToken;
  std::string model;
  int k = 5;
  std::uint64_t seed = 0;
  std::string config_digest;
  nlohmann::json config;
  std::vector<EvalCell> cells;

  const EvalCell* cell(const std::string& train, const std::string& test) const;
  nlohmann::json to_json() const;
  std::string to_csv() const;
  /// Base file name embedding kind, regime, mode, model and seed.
  std::string file_stem() const;
};

/// k-fold evaluation within every group of the plan. matrices[i] belongs to
/// records[i]; every record needs a gold index.
EvalReport evaluate(std::span<const GenerationRecord> records, std::span<const FeatureMatrix> matrices,
                    const SplitPlan& plan, const Trainer& trainer, const std::string& model_name,
                    FeatureMode mode, const nlohmann::json& config = {}, unsigned jobs = 1);

/// One-per-LLM generalization matrix: within-group CV on the diagonal,
/// train-on-source / test-on-all-of-target elsewhere.
EvalReport cross_matrix(std::span<const GenerationRecord> records, std::span<const FeatureMatrix> matrices,
                        const Trainer& trainer, const std::string& model_name, FeatureMode mode, int k = 5,
                        std::uint64_t seed = 0, const nlohmann::json& config = {}, unsigned jobs = 1);

std::string config_digest(const nlohmann::json& config, std::uint64_t seed);

}  // namespace hloc
