#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hloc/features.hpp"
#include "hloc/models/forest.hpp"
#include "hloc/nn/pointer.hpp"

namespace hloc {

inline constexpr int kModelFormatVersion = 1;

enum class ModelKind {
  TreeEnsemble,
  LinearLogistic,
  FeedForward,
  RecurrentPointer,
  ConvolutionalPointer,
  AttentionPointer,
};

std::string_view to_string(ModelKind kind);
/// Accepts the canonical names plus forest, logistic, mlp, recurrent,
/// convolutional and attention.
ModelKind parse_model_kind(std::string_view name);
bool is_per_token(ModelKind kind);
FeatureMode feature_mode(ModelKind kind);
ModelKind pointer_kind(nn::EncoderKind encoder);

struct TrainConfig {
  double downsample_ratio = 3.0;  // correct : hallucinated
  int batch_size = 32;
  int epochs = 10;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::string split_regime = "all-in-one";

  int trees = 100;
  int max_depth = 12;
  int mlp_hidden = 100;

  // Per-sample encoders; hidden/layers/heads follow the chosen family.
  nn::EncoderConfig encoder = nn::EncoderConfig::defaults(nn::EncoderKind::Recurrent);
  int max_sequence = 2048;

  nlohmann::json to_json() const;
  /// Overrides defaults with the keys present; encoder defaults follow
  /// encoder.kind. Unknown keys and out-of-range values are Config errors.
  static TrainConfig from_json(const nlohmann::json& object);
  void validate() const;
};

/// Labeled per-token rows pooled from many matrices, row-major.
struct TokenRows {
  std::size_t cols = 0;
  std::vector<double> data;
  std::vector<int> labels;  // 0 correct, 1 hallucinated

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

/// Rows with a Correct or Hallucinated label, in matrix order.
TokenRows collect_token_rows(std::span<const FeatureMatrix> matrices);

/// Keeps every hallucinated row and ratio x that many correct rows, drawn
/// uniformly without replacement (all of them if fewer exist). Row order is
/// preserved.
TokenRows downsample(const TokenRows& rows, double ratio, std::uint64_t seed);

class PredictorModel {
 public:
  ModelKind kind() const { return kind_; }
  FeatureMode mode() const { return feature_mode(kind_); }
  int feature_layout_version() const { return layout_version_; }
  const nlohmann::json& training_meta() const { return meta_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Per-token score in [0, 1] for every row.
  std::vector<double> scores(const FeatureMatrix& matrix) const;
  /// Per-sample pointer logits, one per row.
  Eigen::VectorXd pointer_logits(const FeatureMatrix& matrix) const;

 private:
  friend PredictorModel train_token_classifier(std::span<const FeatureMatrix>, ModelKind, const TrainConfig&);
  friend PredictorModel train_pointer(std::span<const FeatureMatrix>, const TrainConfig&);
  friend void save_model(const std::filesystem::path&, const PredictorModel&);
  friend PredictorModel load_model(const std::filesystem::path&);
  friend std::string serialize_model(const PredictorModel&);
  friend PredictorModel deserialize_model(std::string_view, const std::string&);

  void check_matrix(const FeatureMatrix& matrix) const;
  Eigen::MatrixXd standardized(const FeatureMatrix& matrix, std::size_t rows) const;

  ModelKind kind_ = ModelKind::TreeEnsemble;
  int layout_version_ = kFeatureLayoutVersion;
  nlohmann::json meta_;
  std::vector<std::string> warnings_;

  RandomForest forest_;
  // Neural models standardize with training statistics.
  Eigen::RowVectorXd mean_, scale_;
  std::vector<nn::Parameter> dense_;  // logistic or feed-forward weights
  std::shared_ptr<nn::PointerNetwork> pointer_;
  int max_sequence_ = 2048;
};

/// Per-token classifier over downsampled labeled rows.
PredictorModel train_token_classifier(std::span<const FeatureMatrix> matrices, ModelKind kind,
                                      const TrainConfig& config);

/// Smallest 1-based index whose score reaches threshold.
std::optional<int> predict_scan(const PredictorModel& model, const FeatureMatrix& matrix, double threshold = 0.5);
std::optional<int> first_crossing(std::span<const double> scores, double threshold);

/// Sequence encoder with a pointer head trained on gold indices.
PredictorModel train_pointer(std::span<const FeatureMatrix> matrices, const TrainConfig& config);

/// argmax of the pointer logits, ties to the smallest index.
int predict_pointer(const PredictorModel& model, const FeatureMatrix& matrix);
int argmax_first(const Eigen::VectorXd& logits);

void save_model(const std::filesystem::path& path, const PredictorModel& model);
PredictorModel load_model(const std::filesystem::path& path);
std::string serialize_model(const PredictorModel& model);
PredictorModel deserialize_model(std::string_view bytes, const std::string& origin);

}  // namespace hloc
