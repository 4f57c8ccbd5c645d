#include "hloc/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "hloc/error.hpp"

namespace hloc {

namespace {

constexpr char kFeatureMagic[8] = {'H', 'L', 'O', 'C', 'F', 'E', 'A', 'T'};

static_assert(std::endian::native == std::endian::little,
              "feature and model containers assume a little-endian host");

}  // namespace

std::string_view to_string(FeatureMode mode) {
  return mode == FeatureMode::PerToken ? "per-token" : "per-sample";
}

FeatureMode parse_feature_mode(std::string_view name) {
  if (name == "per-token") return FeatureMode::PerToken;
  if (name == "per-sample") return FeatureMode::PerSample;
  throw Error(ErrorKind::Usage, "unknown mode '" + std::string(name) + "'");
}

std::array<double, kProbabilitySlots> step_probabilities(const LogProbStep& step) {
  std::array<double, kProbabilitySlots> probs{};
  std::vector<double> values;
  values.reserve(step.entries.size());
  for (const LogProbEntry& e : step.entries) values.push_back(std::exp(e.logprob));
  std::sort(values.begin(), values.end(), std::greater<>());
  const std::size_t n = std::min(values.size(), kProbabilitySlots);
  std::copy_n(values.begin(), n, probs.begin());
  return probs;
}

double step_entropy(const LogProbStep& step) {
  if (step.entries.empty()) {
    throw Error(ErrorKind::Data, "entropy of a step with zero probability mass");
  }
  double max_lp = -std::numeric_limits<double>::infinity();
  for (const LogProbEntry& e : step.entries) max_lp = std::max(max_lp, e.logprob);
  if (!std::isfinite(max_lp)) {
    throw Error(ErrorKind::Data, "entropy of a step with zero probability mass");
  }
  // Work relative to the largest logprob so tiny masses still renormalize.
  double mass = 0.0;
  for (const LogProbEntry& e : step.entries) mass += std::exp(e.logprob - max_lp);
  const double log_mass = std::log(mass);
  double h = 0.0;
  for (const LogProbEntry& e : step.entries) {
    const double log_p = e.logprob - max_lp - log_mass;
    const double p = std::exp(log_p);
    if (p > 0.0) h -= p * log_p;
  }
  return std::max(h, 0.0);
}

FeatureMatrix featurize(const GenerationRecord& record,
                        std::span<const TokenAnnotation> annotations, FeatureMode mode,
                        bool require_labels) {
  if (annotations.size() != record.tokens.size() || record.steps.size() != record.tokens.size()) {
    throw Error(ErrorKind::Data, "record '" + record.id + "': annotations do not align with tokens");
  }
  if (require_labels && !record.gold_index) {
    throw Error(ErrorKind::Data, "record '" + record.id + "' has no gold_index");
  }

  FeatureMatrix m;
  m.mode = mode;
  m.record_id = record.id;
  m.rows = record.tokens.size();
  m.cols = feature_width(mode);
  m.data.assign(m.rows * m.cols, 0.0);
  m.labels.assign(m.rows, RowLabel::Unlabeled);
  m.gold_index = record.gold_index;

  for (std::size_t r = 0; r < m.rows; ++r) {
    double* row = m.data.data() + r * m.cols;
    const auto probs = step_probabilities(record.steps[r]);
    std::copy(probs.begin(), probs.end(), row);
    row[kProbabilitySlots + static_cast<std::size_t>(annotations[r].type)] = 1.0;
    if (mode == FeatureMode::PerToken) {
      row[kProbabilitySlots + kTokenTypeCount] = static_cast<double>(annotations[r].token_index);
    }
  }

  if (record.gold_index) {
    const std::size_t gold = static_cast<std::size_t>(*record.gold_index);
    for (std::size_t r = 0; r < m.rows && r + 1 <= gold; ++r) {
      m.labels[r] = r + 1 == gold ? RowLabel::Hallucinated : RowLabel::Correct;
    }
  }
  return m;
}

void write_feature_file(const std::filesystem::path& path, std::span<const FeatureMatrix> matrices) {
  nlohmann::json header;
  header["layout_version"] = kFeatureLayoutVersion;
  header["mode"] = matrices.empty() ? "per-token" : std::string(to_string(matrices.front().mode));
  header["cols"] = matrices.empty() ? 0 : matrices.front().cols;
  header["probability_slots"] = kProbabilitySlots;
  header["type_slots"] = kTokenTypeCount;
  nlohmann::json type_order = nlohmann::json::array();
  for (TokenType t : kAllTokenTypes) type_order.push_back(std::string(to_string(t)));
  header["type_order"] = type_order;
  nlohmann::json recs = nlohmann::json::array();
  for (const FeatureMatrix& m : matrices) {
    if (m.mode != matrices.front().mode) {
      throw Error(ErrorKind::Usage, "feature file cannot mix modes");
    }
    recs.push_back({{"id", m.record_id},
                    {"rows", m.rows},
                    {"gold_index", m.gold_index ? nlohmann::json(*m.gold_index) : nlohmann::json()}});
  }
  header["records"] = std::move(recs);
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out.write(kFeatureMagic, sizeof kFeatureMagic);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const FeatureMatrix& m : matrices) {
    out.write(reinterpret_cast<const char*>(m.data.data()),
              static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(m.labels.data()),
              static_cast<std::streamsize>(m.labels.size()));
  }
  if (!out) throw Error(ErrorKind::Io, "short write to '" + path.string() + "'");
}

std::vector<FeatureMatrix> read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  char magic[sizeof kFeatureMagic];
  std::uint64_t len = 0;
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kFeatureMagic, sizeof magic) != 0 ||
      !in.read(reinterpret_cast<char*>(&len), sizeof len)) {
    throw Error(ErrorKind::Schema, "'" + path.string() + "' is not a feature file");
  }
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) {
    throw Error(ErrorKind::Schema, "truncated feature header");
  }
  const nlohmann::json header = nlohmann::json::parse(text);
  if (header.at("layout_version").get<int>() != kFeatureLayoutVersion) {
    throw Error(ErrorKind::Version, "feature layout version mismatch");
  }
  const FeatureMode mode = parse_feature_mode(header.at("mode").get<std::string>());
  const std::size_t cols = header.at("cols").get<std::size_t>();
  std::vector<FeatureMatrix> out;
  for (const auto& rec : header.at("records")) {
    FeatureMatrix m;
    m.mode = mode;
    m.record_id = rec.at("id").get<std::string>();
    m.rows = rec.at("rows").get<std::size_t>();
    m.cols = cols;
    if (!rec.at("gold_index").is_null()) m.gold_index = rec.at("gold_index").get<int>();
    m.data.resize(m.rows * m.cols);
    m.labels.resize(m.rows);
    if (!in.read(reinterpret_cast<char*>(m.data.data()),
                 static_cast<std::streamsize>(m.data.size() * sizeof(double))) ||
        !in.read(reinterpret_cast<char*>(m.labels.data()), static_cast<std::streamsize>(m.rows))) {
      throw Error(ErrorKind::Schema, "truncated feature payload");
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace hloc
