#include "hloc/hloc.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hloc/analysis.hpp"
#include "hloc/corpus.hpp"
#include "hloc/error.hpp"
#include "hloc/features.hpp"
#include "hloc/harness.hpp"
#include "hloc/localize.hpp"
#include "hloc/normalize.hpp"
#include "hloc/parallel.hpp"
#include "hloc/predict.hpp"
#include "hloc/syntax.hpp"

struct hloc_records {
  std::vector<hloc::GenerationRecord> items;
};
struct hloc_canonicals {
  hloc::CanonicalMap map;
};
struct hloc_model {
  hloc::PredictorModel model;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

hloc_status status_of(hloc::ErrorKind kind) {
  switch (kind) {
    case hloc::ErrorKind::Usage: return HLOC_ERR_USAGE;
    case hloc::ErrorKind::Schema: return HLOC_ERR_SCHEMA;
    case hloc::ErrorKind::Integrity: return HLOC_ERR_INTEGRITY;
    case hloc::ErrorKind::Io: return HLOC_ERR_IO;
    case hloc::ErrorKind::Data: return HLOC_ERR_DATA;
    case hloc::ErrorKind::Config: return HLOC_ERR_CONFIG;
    case hloc::ErrorKind::Version: return HLOC_ERR_VERSION;
  }
  return HLOC_ERR_INTERNAL;
}

template <typename Fn>
hloc_status guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return HLOC_OK;
  } catch (const hloc::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const json::exception& e) {
    g_last_error = std::string("invalid JSON argument: ") + e.what();
    return HLOC_ERR_USAGE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return HLOC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HLOC_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw hloc::Error(hloc::ErrorKind::Usage, std::string(what) + " must not be null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

json parse_options(const char* text) {
  if (!text || !*text) return json::object();
  json j = json::parse(text);
  if (!j.is_object()) throw hloc::Error(hloc::ErrorKind::Usage, "options must be a JSON object");
  return j;
}

std::vector<hloc::FeatureMatrix> featurize_records(const std::vector<hloc::GenerationRecord>& records,
                                                   hloc::FeatureMode mode, bool require_labels, unsigned jobs) {
  std::vector<hloc::FeatureMatrix> out(records.size());
  hloc::parallel_for(records.size(), jobs, [&](std::size_t i) {
    out[i] = hloc::featurize(records[i], hloc::annotate_tokens(records[i]), mode, require_labels);
  });
  return out;
}

void require_labels(const std::vector<hloc::GenerationRecord>& records) {
  if (records.empty()) throw hloc::Error(hloc::ErrorKind::Data, "no records");
  for (const auto& r : records) {
    if (!r.gold_index) throw hloc::Error(hloc::ErrorKind::Data, "record '" + r.id + "' has no gold index");
  }
}

// Training config for a kind: pointer kinds get their encoder family's
// defaults unless the caller names one.
hloc::TrainConfig train_config(hloc::ModelKind kind, json train, std::uint64_t seed) {
  if (!train.is_object()) train = json::object();
  if (!train.contains("seed")) train["seed"] = seed;
  if (!hloc::is_per_token(kind)) {
    json& enc = train["encoder"];
    if (!enc.is_object()) enc = json::object();
    if (!enc.contains("kind")) {
      const char* name = kind == hloc::ModelKind::RecurrentPointer       ? "recurrent"
                         : kind == hloc::ModelKind::ConvolutionalPointer ? "convolutional"
                                                                         : "attention";
      enc["kind"] = name;
    }
  }
  return hloc::TrainConfig::from_json(train);
}

struct EvalOptions {
  hloc::ModelKind kind = hloc::ModelKind::TreeEnsemble;
  hloc::SplitRegime regime = hloc::SplitRegime::AllInOne;
  int k = 5;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  unsigned jobs = 1;
  hloc::TrainConfig train;
};

EvalOptions eval_options(const char* text) {
  const json j = parse_options(text);
  EvalOptions o;
  for (const auto& [key, value] : j.items()) {
    if (key != "model" && key != "regime" && key != "k" && key != "seed" && key != "threshold" && key != "jobs" &&
        key != "train") {
      throw hloc::Error(hloc::ErrorKind::Usage, "unknown evaluation option '" + key + "'");
    }
  }
  if (j.contains("model")) o.kind = hloc::parse_model_kind(j.at("model").get<std::string>());
  if (j.contains("regime")) o.regime = hloc::parse_split_regime(j.at("regime").get<std::string>());
  o.k = j.value("k", 5);
  o.seed = j.value("seed", std::uint64_t{0});
  o.threshold = j.value("threshold", 0.5);
  o.jobs = j.value("jobs", 1u);
  o.train = train_config(o.kind, j.value("train", json::object()), o.seed);
  return o;
}

json report_config(const EvalOptions& o) {
  json c = o.train.to_json();
  c["threshold"] = o.threshold;
  return c;
}

void emit_report(const hloc::EvalReport& report, char** report_json, char** report_csv, char** file_stem) {
  put(report_json, report.to_json().dump(2));
  put(report_csv, report.to_csv());
  put(file_stem, report.file_stem());
}

}  // namespace

extern "C" {

const char* hloc_last_error(void) { return g_last_error.c_str(); }

const char* hloc_status_name(hloc_status status) {
  switch (status) {
    case HLOC_OK: return "ok";
    case HLOC_ERR_USAGE: return "usage";
    case HLOC_ERR_SCHEMA: return "schema";
    case HLOC_ERR_INTEGRITY: return "integrity";
    case HLOC_ERR_IO: return "io";
    case HLOC_ERR_DATA: return "data";
    case HLOC_ERR_CONFIG: return "config";
    case HLOC_ERR_VERSION: return "version";
    case HLOC_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* hloc_version(void) { return HLOC_VERSION_STRING; }
int hloc_schema_version(void) { return hloc::kSchemaVersion; }
int hloc_model_format_version(void) { return hloc::kModelFormatVersion; }
int hloc_feature_layout_version(void) { return hloc::kFeatureLayoutVersion; }

void hloc_string_free(char* s) { std::free(s); }

hloc_status hloc_records_load(const char* path, hloc_records** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto r = std::make_unique<hloc_records>();
    r->items = hloc::load_records(path);
    *out = r.release();
  });
}

void hloc_records_free(hloc_records* records) { delete records; }

size_t hloc_records_count(const hloc_records* records) { return records ? records->items.size() : 0; }

hloc_status hloc_records_save(const hloc_records* records, const char* path) {
  return guard([&] {
    require(records, "records");
    require(path, "path");
    hloc::save_records(path, records->items);
  });
}

hloc_status hloc_records_check_language(const hloc_records* records, const char* language) {
  return guard([&] {
    require(records, "records");
    require(language, "language");
    const hloc::Language lang = hloc::parse_language(language);
    for (const auto& r : records->items) {
      if (r.language != lang) {
        throw hloc::Error(hloc::ErrorKind::Data, "record '" + r.id + "' is " + std::string(hloc::to_string(r.language)) +
                                                     ", expected " + std::string(hloc::to_string(lang)));
      }
    }
  });
}

hloc_status hloc_canonicals_load(const char* path, hloc_canonicals** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto c = std::make_unique<hloc_canonicals>();
    c->map = hloc::load_canonicals(path);
    *out = c.release();
  });
}

void hloc_canonicals_free(hloc_canonicals* canonicals) { delete canonicals; }

hloc_status hloc_validate_file(const char* path, char** report_json) {
  return guard([&] {
    require(path, "path");
    require(report_json, "report_json");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw hloc::Error(hloc::ErrorKind::Io, std::string("cannot open ") + path);
    json problems = json::array();
    std::size_t records = 0;
    std::size_t valid = 0;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      ++records;
      try {
        const hloc::GenerationRecord r = hloc::record_from_json(json::parse(line));
        const auto violations = hloc::validate_record(r);
        for (const auto& v : violations) {
          problems.push_back({{"line", line_no},
                              {"id", r.id},
                              {"kind", "integrity"},
                              {"invariant", v.invariant},
                              {"location", v.location}});
        }
        if (violations.empty()) ++valid;
      } catch (const json::exception& e) {
        problems.push_back({{"line", line_no}, {"kind", "schema"}, {"message", e.what()}});
      } catch (const hloc::Error& e) {
        problems.push_back({{"line", line_no}, {"kind", "schema"}, {"message", e.what()}});
      }
    }
    *report_json = dup(json{{"records", records}, {"valid", valid}, {"problems", problems}}.dump(2));
  });
}

hloc_status hloc_normalize_source(const char* source, const char* language, char** result_json) {
  return guard([&] {
    require(source, "source");
    require(language, "language");
    require(result_json, "result_json");
    const hloc::NormalizedProgram p = hloc::normalize_program(source, hloc::parse_language(language));
    json table = json::array();
    for (const auto& [name, v] : p.rename_table) table.push_back({name, v});
    *result_json = dup(json{{"normalized", p.normalized}, {"rename_table", table}}.dump());
  });
}

hloc_status hloc_localize(hloc_records* records, const hloc_canonicals* canonicals, unsigned jobs,
                          char** summary_json, char** per_canonical_jsonl) {
  return guard([&] {
    require(records, "records");
    require(canonicals, "canonicals");
    const auto labels = hloc::localize_all(records->items, canonicals->map, jobs);
    std::size_t labeled = 0;
    std::size_t matched = 0;
    std::ostringstream sidecar;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      hloc::GenerationRecord& r = records->items[i];
      r.gold_index = labels[i].index;
      labeled += labels[i].index.has_value();
      matched += labels[i].matched;
      json outcomes = json::array();
      for (const auto& o : labels[i].per_canonical) {
        outcomes.push_back({{"canonical", o.canonical}, {"index", o.index ? json(*o.index) : json(nullptr)}});
      }
      sidecar << json{{"id", r.id},
                      {"gold_index", r.gold_index ? json(*r.gold_index) : json(nullptr)},
                      {"matched", labels[i].matched},
                      {"per_canonical", outcomes}}
                     .dump()
              << '\n';
    }
    put(summary_json, json{{"records", labels.size()}, {"labeled", labeled}, {"matched", matched}}.dump());
    put(per_canonical_jsonl, sidecar.str());
  });
}

hloc_status hloc_featurize_file(const hloc_records* records, const char* mode, int require_labels_flag,
                                unsigned jobs, const char* out_path) {
  return guard([&] {
    require(records, "records");
    require(mode, "mode");
    require(out_path, "out_path");
    const auto matrices = featurize_records(records->items, hloc::parse_feature_mode(mode), require_labels_flag != 0, jobs);
    hloc::write_feature_file(out_path, matrices);
  });
}

hloc_status hloc_model_train(const hloc_records* records, const char* kind, const char* config_json, unsigned jobs,
                             hloc_model** out) {
  return guard([&] {
    require(records, "records");
    require(kind, "kind");
    require(out, "out");
    const hloc::ModelKind k = hloc::parse_model_kind(kind);
    const json options = parse_options(config_json);
    const hloc::TrainConfig config = train_config(k, options, options.value("seed", std::uint64_t{0}));
    require_labels(records->items);
    const auto matrices = featurize_records(records->items, hloc::feature_mode(k), true, jobs);
    auto m = std::make_unique<hloc_model>();
    m->model = hloc::is_per_token(k) ? hloc::train_token_classifier(matrices, k, config)
                                     : hloc::train_pointer(matrices, config);
    *out = m.release();
  });
}

hloc_status hloc_model_save(const hloc_model* model, const char* path) {
  return guard([&] {
    require(model, "model");
    require(path, "path");
    hloc::save_model(path, model->model);
  });
}

hloc_status hloc_model_load(const char* path, hloc_model** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto m = std::make_unique<hloc_model>();
    m->model = hloc::load_model(path);
    *out = m.release();
  });
}

void hloc_model_free(hloc_model* model) { delete model; }

hloc_status hloc_model_info(const hloc_model* model, char** info_json) {
  return guard([&] {
    require(model, "model");
    require(info_json, "info_json");
    const hloc::PredictorModel& m = model->model;
    *info_json = dup(json{{"kind", hloc::to_string(m.kind())},
                          {"mode", hloc::to_string(m.mode())},
                          {"feature_layout_version", m.feature_layout_version()},
                          {"training_meta", m.training_meta()},
                          {"warnings", m.warnings()}}
                         .dump(2));
  });
}

hloc_status hloc_model_predict(const hloc_model* model, const hloc_records* records, double threshold, unsigned jobs,
                               char** predictions_jsonl) {
  return guard([&] {
    require(model, "model");
    require(records, "records");
    require(predictions_jsonl, "predictions_jsonl");
    const hloc::PredictorModel& m = model->model;
    const auto matrices = featurize_records(records->items, m.mode(), false, jobs);
    std::vector<std::optional<int>> predicted(matrices.size());
    hloc::parallel_for(matrices.size(), jobs, [&](std::size_t i) {
      predicted[i] = hloc::is_per_token(m.kind()) ? hloc::predict_scan(m, matrices[i], threshold)
                                                   : std::optional<int>(hloc::predict_pointer(m, matrices[i]));
    });
    std::ostringstream out;
    for (std::size_t i = 0; i < matrices.size(); ++i) {
      out << json{{"id", records->items[i].id},
                  {"predicted_index", predicted[i] ? json(*predicted[i]) : json(nullptr)}}
                 .dump()
          << '\n';
    }
    *predictions_jsonl = dup(out.str());
  });
}

hloc_status hloc_evaluate(const hloc_records* records, const char* options_json, char** report_json,
                          char** report_csv, char** file_stem) {
  return guard([&] {
    require(records, "records");
    const EvalOptions o = eval_options(options_json);
    require_labels(records->items);
    const hloc::FeatureMode mode = hloc::feature_mode(o.kind);
    const auto matrices = featurize_records(records->items, mode, true, o.jobs);
    const hloc::SplitPlan plan = hloc::make_folds(records->items, o.regime, o.k, o.seed);
    const hloc::EvalReport report =
        hloc::evaluate(records->items, matrices, plan, hloc::model_trainer(o.kind, o.train, o.threshold),
                       std::string(hloc::to_string(o.kind)), mode, report_config(o), o.jobs);
    emit_report(report, report_json, report_csv, file_stem);
  });
}

hloc_status hloc_cross_matrix(const hloc_records* records, const char* options_json, char** report_json,
                              char** report_csv, char** file_stem) {
  return guard([&] {
    require(records, "records");
    const EvalOptions o = eval_options(options_json);
    require_labels(records->items);
    const hloc::FeatureMode mode = hloc::feature_mode(o.kind);
    const auto matrices = featurize_records(records->items, mode, true, o.jobs);
    const hloc::EvalReport report =
        hloc::cross_matrix(records->items, matrices, hloc::model_trainer(o.kind, o.train, o.threshold),
                           std::string(hloc::to_string(o.kind)), mode, o.k, o.seed, report_config(o), o.jobs);
    emit_report(report, report_json, report_csv, file_stem);
  });
}

hloc_status hloc_analyze(const hloc_records* records, const char* options_json, char** result_json) {
  return guard([&] {
    require(records, "records");
    require(result_json, "result_json");
    const json j = parse_options(options_json);
    for (const auto& [key, value] : j.items()) {
      if (key != "rate_denominator" && key != "group" && key != "jobs") {
        throw hloc::Error(hloc::ErrorKind::Usage, "unknown analysis option '" + key + "'");
      }
    }
    const auto denominator = hloc::parse_rate_denominator(j.value("rate_denominator", std::string("prefix")));
    const std::string group_name = j.value("group", std::string("model"));
    if (group_name != "model" && group_name != "dataset") {
      throw hloc::Error(hloc::ErrorKind::Usage, "group must be model or dataset");
    }
    const auto group = group_name == "model" ? hloc::GroupField::Model : hloc::GroupField::Dataset;
    require_labels(records->items);
    const auto annotations = hloc::annotate_all(records->items, j.value("jobs", 1u));
    const hloc::TypeTable rates = hloc::type_rate_table(records->items, annotations, denominator, group);
    const hloc::TypeTable proportions = hloc::type_proportion_table(records->items, annotations, group);
    const hloc::DistributionReport dist = hloc::distribution_report(records->items, annotations);
    json out = {{"rate_denominator", hloc::to_string(denominator)},
                {"group", group_name},
                {"type_rates", rates.to_json()},
                {"type_proportions", proportions.to_json()},
                {"distributions", dist.to_json()},
                {"type_rates_csv", rates.to_csv()},
                {"type_proportions_csv", proportions.to_csv()}};
    *result_json = dup(out.dump(2));
  });
}

hloc_status hloc_demo_figure1(char** result_json) {
  return guard([&] {
    require(result_json, "result_json");
    hloc::GenerationRecord r;
    r.id = "figure1";
    r.dataset = "mbpp";
    r.model = "example";
    r.language = hloc::Language::Python;
    r.problem_id = "check_smaller";
    r.context_prefix = "def check_smaller(tup1, tup2):\n    ";
    r.tokens = {"return", " all", "(", "x", " <", " y", " for", " x", ",", " y", " in", " zip",
                "(",      "tup",  "1", ",", " tup", "2", "))"};
    for (const std::string& t : r.tokens) {
      hloc::LogProbStep step;
      step.entries = {{t, 0.0}};
      step.chosen = 0;
      r.steps.push_back(step);
    }
    hloc::CanonicalPool pool;
    pool.problem_id = r.problem_id;
    pool.solutions = {"return all(i > j for i, j in zip(tup1, tup2))",
                      "return all(a > b for a, b in zip(tup1, tup2))"};
    const hloc::HallucinationLabel label = hloc::localize(r, pool);
    const std::string generated = r.generated_text();
    const hloc::NormalizedProgram norm =
        hloc::normalize_program(*r.context_prefix + generated, r.language,
                                {r.context_prefix->size(), r.context_prefix->size() + generated.size()});
    const auto unique = hloc::dedup_pool(pool, *r.context_prefix);
    json out = {{"generated", generated},
                {"normalized_generated", norm.normalized},
                {"normalized_canonicals", json::array()},
                {"index", label.index ? json(*label.index) : json(nullptr)},
                {"token", label.index ? json(r.tokens[static_cast<std::size_t>(*label.index - 1)]) : json(nullptr)}};
    for (const auto& u : unique) out["normalized_canonicals"].push_back(u.normalized);
    *result_json = dup(out.dump(2));
  });
}

}  // extern "C"
