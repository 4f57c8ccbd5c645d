#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hloc/corpus.hpp"
#include "hloc/features.hpp"
#include "hloc/types.hpp"

namespace hloc {

enum class RateDenominator { Prefix, All };
enum class GroupField { Model, Dataset };

std::string_view to_string(RateDenominator d);
RateDenominator parse_rate_denominator(std::string_view name);

/// Annotations for every record, computed on up to `jobs` threads.
std::vector<std::vector<TokenAnnotation>> annotate_all(std::span<const GenerationRecord> records, unsigned jobs = 1);

struct TypeCell {
  double value = 0.0;
  std::size_t numerator = 0;
  std::size_t denominator = 0;
};

/// TokenType x group table; a missing cell means an empty denominator.
struct TypeTable {
  std::string measure;  // "rate" or "proportion"
  std::vector<std::string> groups;
  std::map<std::string, std::map<TokenType, TypeCell>> cells;  // group -> type -> cell

  std::optional<double> get(const std::string& group, TokenType type) const;
  nlohmann::json to_json() const;
  std::string to_csv() const;
};

/// rate(t, g) = gold tokens of type t / tokens of type t, counting either
/// positions up to the gold index or all positions.
TypeTable type_rate_table(std::span<const GenerationRecord> records,
                          std::span<const std::vector<TokenAnnotation>> annotations,
                          RateDenominator denominator = RateDenominator::Prefix,
                          GroupField group = GroupField::Model);

/// Share of each type among all tokens of the group.
TypeTable type_proportion_table(std::span<const GenerationRecord> records,
                                std::span<const std::vector<TokenAnnotation>> annotations,
                                GroupField group = GroupField::Model);

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
  std::vector<double> bin_edges;
  std::vector<std::size_t> histogram;
};

/// Linear-interpolated quantile of sorted values (q in [0, 1]).
double quantile_sorted(std::span<const double> sorted, double q);
Summary summarize(std::vector<double> values, double lo, double hi, int bins = 10);

struct DistributionEntry {
  std::string dimension;  // "model", "dataset" or "type"
  std::string group;
  std::string signal;  // "chosen_prob" or "entropy"
  std::string role;    // "gold" or "pre_gold"
  Summary summary;
};

struct DistributionReport {
  std::vector<DistributionEntry> entries;

  const DistributionEntry* find(const std::string& dimension, const std::string& group, const std::string& signal,
                                const std::string& role) const;
  nlohmann::json to_json() const;
};

/// chosen_prob and entropy at gold tokens versus tokens before the gold
/// index, grouped by model, dataset and token type. Empty groups are omitted.
DistributionReport distribution_report(std::span<const GenerationRecord> records,
                                       std::span<const std::vector<TokenAnnotation>> annotations);

}  // namespace hloc
