// Command-line front end over the C API.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hloc/hloc.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct Failure {
  int code;
  std::string message;
};

int exit_code(hloc_status s) {
  return s == HLOC_ERR_USAGE || s == HLOC_ERR_CONFIG ? kExitUsage : kExitData;
}

void check(hloc_status s) {
  if (s != HLOC_OK) throw Failure{exit_code(s), std::string(hloc_status_name(s)) + " error: " + hloc_last_error()};
}

[[noreturn]] void usage(const std::string& message) { throw Failure{kExitUsage, message}; }

// Owned C string from the library.
struct Text {
  char* p = nullptr;
  ~Text() { hloc_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  ~Handle() {
    if (p) Free(p);
  }
};
using Records = Handle<hloc_records, hloc_records_free>;
using Canonicals = Handle<hloc_canonicals, hloc_canonicals_free>;
using Model = Handle<hloc_model, hloc_model_free>;

// Relative inputs missing from the working directory are looked up under
// HLOC_DATA_DIR.
std::string input_path(const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute() || fs::exists(path)) return path;
  if (const char* dir = std::getenv("HLOC_DATA_DIR"); dir && *dir) {
    const fs::path candidate = fs::path(dir) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

std::string read_text(const std::string& path) {
  if (path == "-") {
    std::ostringstream s;
    s << std::cin.rdbuf();
    return s.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitData, "cannot open " + path};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Failure{kExitData, "cannot write " + path};
}

void load_records(const std::string& path, Records& r) { check(hloc_records_load(input_path(path).c_str(), &r.p)); }

// Model options shared by train, eval and cross.
struct ModelFlags {
  std::string mode;
  std::string model;
  std::string encoder;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<int> hidden;
  std::optional<int> trees;
  std::optional<double> ratio;

  void add(CLI::App* app) {
    app->add_option("--mode", mode, "per-token or per-sample")->check(CLI::IsMember({"per-token", "per-sample"}));
    app->add_option("--model", model, "model kind (forest, logistic, mlp, recurrent, convolutional, attention)");
    app->add_option("--encoder", encoder, "per-sample encoder family (recurrent, convolutional, attention)")
        ->check(CLI::IsMember({"recurrent", "convolutional", "attention"}));
    app->add_option("--config", config_path, "JSON file with training options");
    app->add_option("--seed", seed, "seed for folds, sampling and initialization (default: config file seed, else 0)");
    app->add_option("--epochs", epochs, "training epochs");
    app->add_option("--hidden", hidden, "encoder hidden size");
    app->add_option("--trees", trees, "trees in the forest");
    app->add_option("--downsample-ratio", ratio, "correct:hallucinated token ratio");
  }

  std::string kind() const {
    if (!model.empty() && !encoder.empty()) usage("--model and --encoder are mutually exclusive");
    std::string k = !encoder.empty() ? encoder : model;
    if (k.empty()) k = mode == "per-sample" ? "recurrent" : "forest";
    static const std::map<std::string, std::string> kModes = {
        {"forest", "per-token"},     {"tree-ensemble", "per-token"},          {"logistic", "per-token"},
        {"linear-logistic", "per-token"}, {"mlp", "per-token"},              {"feed-forward", "per-token"},
        {"recurrent", "per-sample"}, {"recurrent-pointer", "per-sample"},    {"convolutional", "per-sample"},
        {"convolutional-pointer", "per-sample"}, {"attention", "per-sample"}, {"attention-pointer", "per-sample"}};
    auto it = kModes.find(k);
    if (it == kModes.end()) usage("unknown model kind '" + k + "'");
    if (!mode.empty() && it->second != mode) usage("model '" + k + "' is not a " + mode + " model");
    return k;
  }

  json train_options() const {
    json t = config_path.empty() ? json::object() : json::parse(read_text(input_path(config_path)), nullptr, false);
    if (t.is_discarded() || !t.is_object()) usage("--config must hold a JSON object");
    if (seed) t["seed"] = *seed;
    else if (!t.contains("seed")) t["seed"] = 0;
    if (epochs) t["epochs"] = *epochs;
    if (trees) t["trees"] = *trees;
    if (ratio) t["downsample_ratio"] = *ratio;
    if (hidden) t["encoder"]["hidden"] = *hidden;
    return t;
  }
};

void print_report_paths(const std::string& out_dir, const Text& stem, const Text& json_text, const Text& csv) {
  if (out_dir.empty()) {
    write_text("-", json_text.str());
    return;
  }
  fs::create_directories(out_dir);
  const fs::path base = fs::path(out_dir) / stem.str();
  write_text(base.string() + ".json", json_text.str());
  write_text(base.string() + ".csv", csv.str());
  std::cerr << "wrote " << base.string() << ".json and .csv\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Localize and predict the first hallucinated token in generated code"};
  app.require_subcommand(0, 1);
  bool show_version = false;
  app.add_flag("--version", show_version, "print toolkit and schema versions");

  unsigned jobs = 1;
  std::string in, out, lang, canon, per_canonical, out_dir, model_file, rate_denominator = "prefix", group = "model",
                                                                         regime = "all-in-one";
  double threshold = 0.5;
  int k = 5;
  bool as_json = false;
  bool require_labels = false;
  ModelFlags mf;

  auto* validate = app.add_subcommand("validate", "check an instance file against the schema");
  validate->add_option("--in", in, "instance file")->required();
  validate->add_option("--out", out, "report file (default stdout)");

  auto* normalize = app.add_subcommand("normalize", "rename user-defined identifiers in a source file");
  normalize->add_option("--lang", lang, "python or java")->required()->check(CLI::IsMember({"python", "java"}));
  normalize->add_option("--in", in, "source file, or - for stdin")->required();
  normalize->add_option("--out", out, "output file (default stdout)");
  normalize->add_flag("--json", as_json, "emit JSON with the rename table");

  auto* localize = app.add_subcommand("localize", "fill gold_index from canonical solutions");
  localize->add_option("--lang", lang, "expected language of every record")->check(CLI::IsMember({"python", "java"}));
  localize->add_option("--in", in, "instance file")->required();
  localize->add_option("--canon", canon, "canonical solution file")->required();
  localize->add_option("--out", out, "labeled instance file")->required();
  localize->add_option("--per-canonical", per_canonical, "sidecar with per-canonical outcomes");
  localize->add_option("--jobs", jobs, "worker threads");

  auto* featurize = app.add_subcommand("featurize", "write feature matrices");
  featurize->add_option("--in", in, "instance file")->required();
  featurize->add_option("--mode", mf.mode, "per-token or per-sample")
      ->required()
      ->check(CLI::IsMember({"per-token", "per-sample"}));
  featurize->add_option("--out", out, "feature file")->required();
  featurize->add_flag("--require-labels", require_labels, "fail on records without gold_index");
  featurize->add_option("--jobs", jobs, "worker threads");

  auto* train = app.add_subcommand("train", "train a predictor on labeled records");
  train->add_option("--in", in, "labeled instance file")->required();
  train->add_option("--out", out, "model file")->required();
  train->add_option("--jobs", jobs, "worker threads for featurization");
  mf.add(train);

  auto* predict = app.add_subcommand("predict", "predict hallucination token indices");
  predict->add_option("--model-file", model_file, "trained model")->required();
  predict->add_option("--in", in, "instance file")->required();
  predict->add_option("--out", out, "predictions file (default stdout)");
  predict->add_option("--threshold", threshold, "per-token decision threshold");
  predict->add_option("--jobs", jobs, "worker threads");

  auto* eval = app.add_subcommand("eval", "k-fold evaluation under a split regime");
  eval->add_option("--in", in, "labeled instance file")->required();
  eval->add_option("--regime", regime, "all-in-one, one-per-dataset or one-per-llm")
      ->check(CLI::IsMember({"all-in-one", "one-per-dataset", "one-per-llm"}));
  eval->add_option("--k", k, "folds")->check(CLI::PositiveNumber);
  eval->add_option("--threshold", threshold, "per-token decision threshold");
  eval->add_option("--out-dir", out_dir, "directory for JSON and CSV reports (default: JSON to stdout)");
  eval->add_option("--jobs", jobs, "worker threads");
  mf.add(eval);

  auto* cross = app.add_subcommand("cross", "cross-LLM generalization matrix");
  cross->add_option("--in", in, "labeled instance file")->required();
  cross->add_option("--k", k, "folds for diagonal cells")->check(CLI::PositiveNumber);
  cross->add_option("--threshold", threshold, "per-token decision threshold");
  cross->add_option("--out-dir", out_dir, "directory for JSON and CSV reports (default: JSON to stdout)");
  cross->add_option("--jobs", jobs, "worker threads");
  mf.add(cross);

  auto* analyze = app.add_subcommand("analyze", "token-type rates, proportions and distributions");
  analyze->add_option("--in", in, "labeled instance file")->required();
  analyze->add_option("--rate-denominator", rate_denominator, "prefix or all")
      ->check(CLI::IsMember({"prefix", "all"}));
  analyze->add_option("--group", group, "model or dataset")->check(CLI::IsMember({"model", "dataset"}));
  analyze->add_option("--out-dir", out_dir, "directory for JSON and CSV tables (default: JSON to stdout)");
  analyze->add_option("--jobs", jobs, "worker threads");

  auto* demo = app.add_subcommand("demo-figure1", "localize the built-in worked example");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const CLI::App* s : app.get_subcommands()) sub = s;
    std::cerr << (sub ? sub->help() : app.help());
    return kExitUsage;
  }

  if (show_version) {
    std::cout << "hloc " << hloc_version() << " (instance schema " << hloc_schema_version() << ", model format "
              << hloc_model_format_version() << ", feature layout " << hloc_feature_layout_version() << ")\n";
    return kExitOk;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kExitUsage;
  }

  if (validate->parsed()) {
    Text report;
    check(hloc_validate_file(input_path(in).c_str(), &report.p));
    write_text(out, report.str());
    const json r = json::parse(report.str());
    const auto problems = r.at("problems").size();
    std::cerr << r.at("valid").get<std::size_t>() << " of " << r.at("records").get<std::size_t>()
              << " records valid, " << problems << " problems\n";
    return problems == 0 ? kExitOk : kExitData;
  }
  if (normalize->parsed()) {
    Text result;
    check(hloc_normalize_source(read_text(input_path(in)).c_str(), lang.c_str(), &result.p));
    write_text(out, as_json ? result.str() : json::parse(result.str()).at("normalized").get<std::string>());
    return kExitOk;
  }
  if (localize->parsed()) {
    Records records;
    Canonicals canonicals;
    load_records(in, records);
    if (!lang.empty()) check(hloc_records_check_language(records.p, lang.c_str()));
    check(hloc_canonicals_load(input_path(canon).c_str(), &canonicals.p));
    Text summary, sidecar;
    check(hloc_localize(records.p, canonicals.p, jobs, &summary.p, per_canonical.empty() ? nullptr : &sidecar.p));
    check(hloc_records_save(records.p, out.c_str()));
    if (!per_canonical.empty()) write_text(per_canonical, sidecar.str());
    std::cerr << summary.str() << '\n';
    return kExitOk;
  }
  if (featurize->parsed()) {
    Records records;
    load_records(in, records);
    check(hloc_featurize_file(records.p, mf.mode.c_str(), require_labels, jobs, out.c_str()));
    return kExitOk;
  }
  if (train->parsed()) {
    const std::string kind = mf.kind();
    const json train_options = mf.train_options();
    const std::string options = train_options.dump();
    Records records;
    load_records(in, records);
    Model model;
    check(hloc_model_train(records.p, kind.c_str(), options.c_str(), jobs, &model.p));
    check(hloc_model_save(model.p, out.c_str()));
    Text info;
    check(hloc_model_info(model.p, &info.p));
    const json meta = json::parse(info.str());
    for (const auto& w : meta.at("warnings")) std::cerr << "warning: " << w.get<std::string>() << '\n';
    std::cerr << "trained " << meta.at("kind").get<std::string>() << " (seed " << train_options.at("seed").dump() << ") -> " << out << '\n';
    return kExitOk;
  }
  if (predict->parsed()) {
    Model model;
    check(hloc_model_load(input_path(model_file).c_str(), &model.p));
    Records records;
    load_records(in, records);
    Text predictions;
    check(hloc_model_predict(model.p, records.p, threshold, jobs, &predictions.p));
    write_text(out, predictions.str());
    return kExitOk;
  }
  if (eval->parsed() || cross->parsed()) {
    const std::string kind = mf.kind();
    const json train_options = mf.train_options();
    json options = {{"model", kind}, {"k", k}, {"seed", train_options.at("seed")}, {"threshold", threshold},
                    {"jobs", jobs},  {"train", train_options}};
    if (eval->parsed()) options["regime"] = regime;
    Records records;
    load_records(in, records);
    Text report, csv, stem;
    const std::string o = options.dump();
    check(eval->parsed() ? hloc_evaluate(records.p, o.c_str(), &report.p, &csv.p, &stem.p)
                         : hloc_cross_matrix(records.p, o.c_str(), &report.p, &csv.p, &stem.p));
    print_report_paths(out_dir, stem, report, csv);
    return kExitOk;
  }
  if (analyze->parsed()) {
    Records records;
    load_records(in, records);
    const json options = {{"rate_denominator", rate_denominator}, {"group", group}, {"jobs", jobs}};
    Text result;
    check(hloc_analyze(records.p, options.dump().c_str(), &result.p));
    if (out_dir.empty()) {
      write_text("-", result.str());
      return kExitOk;
    }
    json r = json::parse(result.str());
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_text((dir / "type_rates.csv").string(), r.at("type_rates_csv").get<std::string>());
    write_text((dir / "type_proportions.csv").string(), r.at("type_proportions_csv").get<std::string>());
    r.erase("type_rates_csv");
    r.erase("type_proportions_csv");
    write_text((dir / "analysis.json").string(), r.dump(2));
    std::cerr << "wrote analysis.json, type_rates.csv and type_proportions.csv to " << out_dir << '\n';
    return kExitOk;
  }
  if (demo->parsed()) {
    Text result;
    check(hloc_demo_figure1(&result.p));
    const json r = json::parse(result.str());
    std::cout << "generated:            " << r.at("generated").get<std::string>() << '\n';
    std::cout << "normalized generated: " << r.at("normalized_generated").get<std::string>() << '\n';
    for (const auto& c : r.at("normalized_canonicals")) {
      std::cout << "normalized canonical: " << c.get<std::string>() << '\n';
    }
    if (r.at("index").is_null()) {
      std::cout << "hallucination token index: none\n";
    } else {
      std::cout << "hallucination token index: " << r.at("index").get<int>() << " (token \""
                << r.at("token").get<std::string>() << "\")\n";
    }
    return kExitOk;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Failure& f) {
    std::cerr << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
