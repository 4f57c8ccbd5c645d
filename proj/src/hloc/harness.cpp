#include "hloc/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <set>
#include <sstream>

#include "hloc/error.hpp"
#include "hloc/parallel.hpp"
#include "hloc/rng.hpp"

namespace hloc {

std::string_view to_string(SplitRegime regime) {
  switch (regime) {
    case SplitRegime::AllInOne: return "all-in-one";
    case SplitRegime::OnePerDataset: return "one-per-dataset";
    case SplitRegime::OnePerLLM: return "one-per-llm";
  }
  return "?";
}

SplitRegime parse_split_regime(std::string_view name) {
  if (name == "all-in-one") return SplitRegime::AllInOne;
  if (name == "one-per-dataset") return SplitRegime::OnePerDataset;
  if (name == "one-per-llm") return SplitRegime::OnePerLLM;
  throw Error(ErrorKind::Usage, "unknown split regime '" + std::string(name) + "'");
}

std::string group_key(const GenerationRecord& record, SplitRegime regime) {
  switch (regime) {
    case SplitRegime::AllInOne: return "all";
    case SplitRegime::OnePerDataset: return record.dataset;
    case SplitRegime::OnePerLLM: return record.model;
  }
  return "all";
}

std::vector<std::string> SplitPlan::group_names() const {
  std::set<std::string> names;
  for (const auto& [id, g] : groups) names.insert(g);
  return {names.begin(), names.end()};
}

SplitPlan make_folds(std::span<const GenerationRecord> records, SplitRegime regime, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::Config, "cross-validation needs at least 2 folds");
  SplitPlan plan;
  plan.regime = regime;
  plan.k = k;
  plan.seed = seed;
  std::map<std::string, std::vector<std::string>> members;
  for (const GenerationRecord& r : records) {
    const std::string g = group_key(r, regime);
    if (!plan.groups.emplace(r.id, g).second) {
      throw Error(ErrorKind::Data, "duplicate record id '" + r.id + "'");
    }
    members[g].push_back(r.id);
  }
  for (auto& [g, ids] : members) {
    if (ids.size() < static_cast<std::size_t>(k)) {
      throw Error(ErrorKind::Data, "group '" + g + "' has " + std::to_string(ids.size()) +
                                       " records, fewer than " + std::to_string(k) + " folds");
    }
    std::sort(ids.begin(), ids.end());
    Rng rng(fnv1a(g, seed ^ 0x9e3779b97f4a7c15ull));
    rng.shuffle(ids);
    for (std::size_t i = 0; i < ids.size(); ++i) plan.assignments[ids[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  return plan;
}

Trainer model_trainer(ModelKind kind, const TrainConfig& config, double threshold) {
  if (!is_per_token(kind) && pointer_kind(config.encoder.kind) != kind) {
    throw Error(ErrorKind::Config, "encoder configuration does not match model kind " + std::string(to_string(kind)));
  }
  return [kind, config, threshold](std::span<const FeatureMatrix> train) -> Predictor {
    auto model = std::make_shared<PredictorModel>(is_per_token(kind) ? train_token_classifier(train, kind, config)
                                                                     : train_pointer(train, config));
    if (is_per_token(kind)) {
      return [model, threshold](const FeatureMatrix& m) { return predict_scan(*model, m, threshold); };
    }
    return [model](const FeatureMatrix& m) -> std::optional<int> { return predict_pointer(*model, m); };
  };
}

std::string config_digest(const nlohmann::json& config, std::uint64_t seed) {
  const std::uint64_t h = fnv1a(config.dump() + "#seed=" + std::to_string(seed));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

void check_inputs(std::span<const GenerationRecord> records, std::span<const FeatureMatrix> matrices,
                  FeatureMode mode) {
  if (records.size() != matrices.size()) throw Error(ErrorKind::Data, "records and feature matrices differ in count");
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].gold_index) {
      throw Error(ErrorKind::Data, "record '" + records[i].id + "' has no gold index");
    }
    if (matrices[i].mode != mode) {
      throw Error(ErrorKind::Data, "record '" + records[i].id + "' was featurized for the other mode");
    }
  }
}

// Record indices ordered by id, so training input is independent of record order.
std::vector<std::size_t> by_id(std::span<const GenerationRecord> records, std::vector<std::size_t> idx) {
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return records[a].id < records[b].id; });
  return idx;
}

struct Tally {
  std::size_t matches = 0;
  std::size_t evaluated = 0;
};

Tally score(const Predictor& predict, std::span<const GenerationRecord> records,
            std::span<const FeatureMatrix> matrices, const std::vector<std::size_t>& test) {
  Tally t;
  for (std::size_t i : test) {
    const std::optional<int> got = predict(matrices[i]);
    t.matches += got.has_value() && got == records[i].gold_index;
    ++t.evaluated;
  }
  return t;
}

// Runs k-fold CV over the given record indices; returns the filled cell.
EvalCell cross_validate(std::span<const GenerationRecord> records, std::span<const FeatureMatrix> matrices,
                        const std::vector<std::size_t>& members, const SplitPlan& plan, const Trainer& trainer,
                        unsigned jobs) {
  std::vector<Tally> folds(static_cast<std::size_t>(plan.k));
  parallel_for(folds.size(), jobs, [&](std::size_t f) {
    std::vector<FeatureMatrix> train;
    std::vector<std::size_t> test;
    for (std::size_t i : by_id(records, members)) {
      if (plan.assignments.at(records[i].id) == static_cast<int>(f)) {
        test.push_back(i);
      } else {
        train.push_back(matrices[i]);
      }
    }
    const Predictor predict = trainer(train);
    folds[f] = score(predict, records, matrices, test);
  });
  EvalCell cell;
  for (const Tally& t : folds) {
    cell.matches += t.matches;
    cell.evaluated += t.evaluated;
    cell.fold_accuracy.push_back(t.evaluated ? static_cast<double>(t.matches) / static_cast<double>(t.evaluated) : 0.0);
  }
  cell.accuracy = cell.evaluated ? static_cast<double>(cell.matches) / static_cast<double>(cell.evaluated) : 0.0;
  return cell;
}

}  // namespace

EvalReport evaluate(std::span<const GenerationRecord> records, std::span<const FeatureMatrix> matrices,
                    const SplitPlan& plan, const Trainer& trainer, const std::string& model_name, FeatureMode mode,
                    const nlohmann::json& config, unsigned jobs) {
  check_inputs(records, matrices, mode);
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto it = plan.groups.find(records[i].id);
    if (it == plan.groups.end()) throw Error(ErrorKind::Data, "record '" + records[i].id + "' is not in the split plan");
    members[it->second].push_back(i);
  }
  EvalReport report;
  report.kind = "cv";
  report.regime = plan.regime;
  report.mode = mode;
  report.model = model_name;
  report.k = plan.k;
  report.seed = plan.seed;
  report.config = config;
  report.config_digest = config_digest(config, plan.seed);
  for (const auto& [g, idx] : members) {
    EvalCell cell = cross_validate(records, matrices, idx, plan, trainer, jobs);
    cell.train_group = g;
    cell.test_group = g;
    cell.model = model_name;
    report.cells.push_back(std::move(cell));
  }
  return report;
}

EvalReport cross_matrix(std::span<const GenerationRecord> records, std::span<const FeatureMatrix> matrices,
                        const Trainer& trainer, const std::string& model_name, FeatureMode mode, int k,
                        std::uint64_t seed, const nlohmann::json& config, unsigned jobs) {
  check_inputs(records, matrices, mode);
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < records.size(); ++i) members[records[i].model].push_back(i);
  if (members.size() < 2) throw Error(ErrorKind::Data, "cross-model evaluation needs at least two model groups");
  const SplitPlan plan = make_folds(records, SplitRegime::OnePerLLM, k, seed);

  EvalReport report;
  report.kind = "cross";
  report.regime = SplitRegime::OnePerLLM;
  report.mode = mode;
  report.model = model_name;
  report.k = k;
  report.seed = seed;
  report.config = config;
  report.config_digest = config_digest(config, seed);

  std::vector<std::string> names;
  for (const auto& [g, idx] : members) names.push_back(g);
  std::vector<Predictor> full(names.size());
  parallel_for(names.size(), jobs, [&](std::size_t s) {
    std::vector<FeatureMatrix> train;
    for (std::size_t i : by_id(records, members[names[s]])) train.push_back(matrices[i]);
    full[s] = trainer(train);
  });
  for (std::size_t s = 0; s < names.size(); ++s) {
    for (std::size_t t = 0; t < names.size(); ++t) {
      EvalCell cell;
      if (s == t) {
        cell = cross_validate(records, matrices, members[names[s]], plan, trainer, jobs);
      } else {
        const Tally tally = score(full[s], records, matrices, members[names[t]]);
        cell.matches = tally.matches;
        cell.evaluated = tally.evaluated;
        cell.accuracy = tally.evaluated ? static_cast<double>(tally.matches) / static_cast<double>(tally.evaluated) : 0.0;
      }
      cell.train_group = names[s];
      cell.test_group = names[t];
      cell.model = model_name;
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

const EvalCell* EvalReport::cell(const std::string& train, const std::string& test) const {
  for (const EvalCell& c : cells) {
    if (c.train_group == train && c.test_group == test) return &c;
  }
  return nullptr;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json cells_json = nlohmann::json::array();
  for (const EvalCell& c : cells) {
    cells_json.push_back({{"train_group", c.train_group},
                          {"test_group", c.test_group},
                          {"model", c.model},
                          {"accuracy", c.accuracy},
                          {"matches", c.matches},
                          {"evaluated", c.evaluated},
                          {"fold_accuracy", c.fold_accuracy}});
  }
  return {{"kind", kind},     {"regime", to_string(regime)},   {"mode", to_string(mode)},
          {"model", model},   {"k", k},                        {"seed", seed},
          {"config", config}, {"config_digest", config_digest}, {"cells", cells_json}};
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "train_group,test_group,model,accuracy,matches,evaluated,seed\n";
  for (const EvalCell& c : cells) {
    char acc[32];
    std::snprintf(acc, sizeof acc, "%.6f", c.accuracy);
    out << c.train_group << ',' << c.test_group << ',' << c.model << ',' << acc << ',' << c.matches << ','
        << c.evaluated << ',' << seed << '\n';
  }
  return out.str();
}

std::string EvalReport::file_stem() const {
  return kind + "_" + std::string(to_string(regime)) + "_" + std::string(to_string(mode)) + "_" + model + "_seed" +
         std::to_string(seed);
}

}  // namespace hloc
