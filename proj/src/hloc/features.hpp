#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hloc/corpus.hpp"
#include "hloc/types.hpp"

namespace hloc {

inline constexpr std::size_t kProbabilitySlots = 100;
inline constexpr int kFeatureLayoutVersion = 1;

enum class FeatureMode { PerToken, PerSample };

std::string_view to_string(FeatureMode mode);
FeatureMode parse_feature_mode(std::string_view name);

/// Row width: 100 probability slots + 8 type slots (+ 1 position slot per token).
constexpr std::size_t feature_width(FeatureMode mode) {
  return kProbabilitySlots + kTokenTypeCount + (mode == FeatureMode::PerToken ? 1 : 0);
}

struct TokenAnnotation {
  int token_index = 0;  // 1-based
  ByteSpan span;        // offsets into the generated text
  TokenType type = TokenType::Space;
  double chosen_prob = 0.0;
  double entropy = 0.0;
};

/// exp of each stored logprob, descending, zero-padded to 100 slots.
std::array<double, kProbabilitySlots> step_probabilities(const LogProbStep& step);

/// Natural-log Shannon entropy of the top-k distribution renormalized to 1.
double step_entropy(const LogProbStep& step);

enum class RowLabel : std::int8_t { Unlabeled = -1, Correct = 0, Hallucinated = 1 };

struct FeatureMatrix {
  FeatureMode mode = FeatureMode::PerToken;
  std::string record_id;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major rows x cols
  // Per-row labels; all Unlabeled when the record carries no gold index.
  std::vector<RowLabel> labels;
  std::optional<int> gold_index;

  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

/// Builds one row per token. With require_labels the record must carry a
/// gold index; rows after it stay Unlabeled.
FeatureMatrix featurize(const GenerationRecord& record,
                        std::span<const TokenAnnotation> annotations, FeatureMode mode,
                        bool require_labels = false);

/// Columnar container: magic, JSON header, then per-matrix float64 rows and
/// int8 labels, little-endian.
void write_feature_file(const std::filesystem::path& path, std::span<const FeatureMatrix> matrices);
std::vector<FeatureMatrix> read_feature_file(const std::filesystem::path& path);

}  // namespace hloc
