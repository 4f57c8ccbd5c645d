#include "hloc/corpus.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "hloc/error.hpp"

namespace hloc {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(std::string_view field, std::string_view what) {
  throw Error(ErrorKind::Schema, "field '" + std::string(field) + "': " + std::string(what));
}

const json& require(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) field_error(field, "missing");
  return *it;
}

std::string require_string(const json& obj, const char* field) {
  const json& v = require(obj, field);
  if (!v.is_string()) field_error(field, "expected string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) field_error(field, "expected string or null");
  return it->get<std::string>();
}

double as_logprob(const json& v, std::string_view field) {
  if (!v.is_number()) field_error(field, "expected number");
  return v.get<double>();
}

LogProbStep decode_step(const json& arr, std::size_t step_index) {
  const std::string field = "steps[" + std::to_string(step_index) + "]";
  if (!arr.is_array()) field_error(field, "expected array of [token, logprob] pairs");
  LogProbStep step;
  step.entries.reserve(arr.size());
  for (const json& pair : arr) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string()) {
      field_error(field, "expected [token, logprob] pair");
    }
    step.entries.push_back({pair[0].get<std::string>(), as_logprob(pair[1], field)});
  }
  return step;
}

}  // namespace

std::string GenerationRecord::generated_text() const {
  std::string out;
  const std::size_t n = ends_with_eos && !tokens.empty() ? tokens.size() - 1 : tokens.size();
  for (std::size_t i = 0; i < n; ++i) out += tokens[i];
  return out;
}

GenerationRecord record_from_json(const json& obj) {
  if (!obj.is_object()) throw Error(ErrorKind::Schema, "instance must be a JSON object");

  const json& version = require(obj, "schema_version");
  if (!version.is_number_integer()) field_error("schema_version", "expected integer");
  if (version.get<int>() != kSchemaVersion) {
    throw Error(ErrorKind::Version, "unsupported schema_version " +
                                        std::to_string(version.get<int>()) + " (expected " +
                                        std::to_string(kSchemaVersion) + ")");
  }

  GenerationRecord r;
  r.id = require_string(obj, "id");
  r.task = parse_task(require_string(obj, "task"));
  r.dataset = require_string(obj, "dataset");
  r.model = require_string(obj, "model");
  r.language = parse_language(require_string(obj, "language"));
  r.problem_id = require_string(obj, "problem_id");
  r.context_prefix = optional_string(obj, "context_prefix");
  r.declared_source = optional_string(obj, "source");
  r.error_message = optional_string(obj, "error_message");
  r.eos_text = optional_string(obj, "eos_text");

  const json& tokens = require(obj, "tokens");
  if (!tokens.is_array()) field_error("tokens", "expected array of strings");
  for (const json& t : tokens) {
    if (!t.is_string()) field_error("tokens", "expected array of strings");
    r.tokens.push_back(t.get<std::string>());
  }

  if (auto it = obj.find("is_eos"); it != obj.end() && !it->is_null()) {
    if (!it->is_boolean()) field_error("is_eos", "expected boolean");
    r.ends_with_eos = it->get<bool>();
  }

  if (auto it = obj.find("gold_index"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_integer()) field_error("gold_index", "expected integer or null");
    r.gold_index = it->get<int>();
  }

  const json& steps = require(obj, "steps");
  if (!steps.is_array()) field_error("steps", "expected array");
  r.steps.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) r.steps.push_back(decode_step(steps[i], i));

  const json* chosen = nullptr;
  if (auto it = obj.find("chosen"); it != obj.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != steps.size()) {
      field_error("chosen", "expected array with one entry per step");
    }
    chosen = &*it;
  }
  const json* side = nullptr;
  if (auto it = obj.find("chosen_logprob"); it != obj.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != steps.size()) {
      field_error("chosen_logprob", "expected array with one entry per step");
    }
    side = &*it;
  }

  // Resolve the emitted token of every step: explicit index, then text match,
  // then the side-channel logprob for tokens outside the top-k.
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    LogProbStep& step = r.steps[i];
    if (chosen && !(*chosen)[i].is_null()) {
      const json& c = (*chosen)[i];
      if (!c.is_number_integer() || c.get<long long>() < 0 ||
          static_cast<std::size_t>(c.get<long long>()) >= step.entries.size()) {
        field_error("chosen", "index out of range at step " + std::to_string(i));
      }
      step.chosen = static_cast<std::size_t>(c.get<long long>());
    } else if (i < r.tokens.size()) {
      const bool eos = r.ends_with_eos && i + 1 == r.tokens.size();
      const std::optional<std::string> want =
          eos ? r.eos_text : std::optional<std::string>(r.tokens[i]);
      if (want) {
        for (std::size_t e = 0; e < step.entries.size(); ++e) {
          if (step.entries[e].text == *want) {
            step.chosen = e;
            break;
          }
        }
      }
    }
    if (step.chosen) {
      step.chosen_logprob = step.entries[*step.chosen].logprob;
    } else if (side && !(*side)[i].is_null()) {
      step.chosen_logprob = as_logprob((*side)[i], "chosen_logprob");
    } else {
      step.chosen_logprob = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return r;
}

json record_to_json(const GenerationRecord& r) {
  json obj;
  obj["schema_version"] = kSchemaVersion;
  obj["id"] = r.id;
  obj["task"] = std::string(to_string(r.task));
  obj["dataset"] = r.dataset;
  obj["model"] = r.model;
  obj["language"] = std::string(to_string(r.language));
  obj["problem_id"] = r.problem_id;
  obj["context_prefix"] = r.context_prefix ? json(*r.context_prefix) : json(nullptr);
  if (r.declared_source) obj["source"] = *r.declared_source;
  obj["tokens"] = r.tokens;
  obj["is_eos"] = r.ends_with_eos;
  if (r.eos_text) obj["eos_text"] = *r.eos_text;

  json steps = json::array();
  json chosen = json::array();
  json side = json::array();
  bool any_side = false;
  for (const LogProbStep& step : r.steps) {
    json entries = json::array();
    for (const LogProbEntry& e : step.entries) entries.push_back(json::array({e.text, e.logprob}));
    steps.push_back(std::move(entries));
    chosen.push_back(step.chosen ? json(*step.chosen) : json(nullptr));
    if (!step.chosen && std::isfinite(step.chosen_logprob)) {
      side.push_back(step.chosen_logprob);
      any_side = true;
    } else {
      side.push_back(nullptr);
    }
  }
  obj["steps"] = std::move(steps);
  obj["chosen"] = std::move(chosen);
  if (any_side) obj["chosen_logprob"] = std::move(side);
  obj["error_message"] = r.error_message ? json(*r.error_message) : json(nullptr);
  obj["gold_index"] = r.gold_index ? json(*r.gold_index) : json(nullptr);
  return obj;
}

std::vector<Violation> validate_record(const GenerationRecord& r) {
  std::vector<Violation> out;
  auto add = [&](std::string_view inv, std::string location = {}) {
    out.push_back({std::string(inv), std::move(location)});
  };

  if (r.tokens.empty()) add(invariant::kNoTokens);
  if (r.steps.size() != r.tokens.size()) {
    add(invariant::kLengthMismatch, std::to_string(r.tokens.size()) + " tokens, " +
                                        std::to_string(r.steps.size()) + " steps");
  }
  if (r.ends_with_eos && !r.tokens.empty() && !r.tokens.back().empty()) add(invariant::kEosText);
  if (r.declared_source && *r.declared_source != r.generated_text()) add(invariant::kConcatMismatch);
  if (r.gold_index &&
      (*r.gold_index < 1 || static_cast<std::size_t>(*r.gold_index) > r.tokens.size())) {
    add(invariant::kGoldRange);
  }

  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const LogProbStep& step = r.steps[i];
    const std::string where = "step " + std::to_string(i + 1);
    if (step.entries.empty()) add(invariant::kEmptyStep, where);
    if (step.entries.size() > kTopK) add(invariant::kTooManyEntries, where);
    bool finite = true;
    bool non_positive = true;
    bool sorted = true;
    for (std::size_t e = 0; e < step.entries.size(); ++e) {
      const double lp = step.entries[e].logprob;
      if (!std::isfinite(lp)) finite = false;
      else if (lp > 0.0) non_positive = false;
      if (e > 0 && step.entries[e - 1].logprob < lp) sorted = false;
    }
    if (!step.chosen) {
      if (std::isnan(step.chosen_logprob)) add(invariant::kChosenMissing, where);
      else if (!std::isfinite(step.chosen_logprob)) finite = false;
      else if (step.chosen_logprob > 0.0) non_positive = false;
    }
    if (!finite) add(invariant::kLogprobFinite, where);
    if (!non_positive) add(invariant::kLogprobPositive, where);
    if (!sorted) add(invariant::kUnsorted, where);
  }
  return out;
}

std::vector<GenerationRecord> read_records(std::istream& in, std::string_view source_name) {
  std::vector<GenerationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = std::string(source_name) + ":" + std::to_string(line_no) + ": ";
    GenerationRecord r;
    try {
      r = record_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Schema, where + "invalid JSON: " + e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), where + e.what());
    }
    if (auto v = validate_record(r); !v.empty()) {
      std::string msg = where + "record '" + r.id + "': " + v.front().invariant;
      if (!v.front().location.empty()) msg += " (" + v.front().location + ")";
      throw Error(ErrorKind::Integrity, msg);
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<GenerationRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open instance file '" + path.string() + "'");
  return read_records(in, path.filename().string());
}

void write_records(std::ostream& out, std::span<const GenerationRecord> records) {
  for (const GenerationRecord& r : records) out << record_to_json(r).dump() << '\n';
}

void save_records(const std::filesystem::path& path, std::span<const GenerationRecord> records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  write_records(out, records);
}

CanonicalMap read_canonicals(std::istream& in, std::string_view source_name) {
  CanonicalMap pools;
  std::map<std::string, std::set<std::string>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = std::string(source_name) + ":" + std::to_string(line_no) + ": ";
    try {
      const json obj = json::parse(line);
      if (!obj.is_object()) throw Error(ErrorKind::Schema, "entry must be a JSON object");
      const std::string problem = require_string(obj, "problem_id");
      const Language lang = parse_language(require_string(obj, "language"));
      std::string source = require_string(obj, "source");
      if (source.empty()) field_error("source", "empty solution text");

      auto [it, inserted] = pools.try_emplace(problem);
      CanonicalPool& pool = it->second;
      if (inserted) {
        pool.problem_id = problem;
        pool.language = lang;
      } else if (pool.language != lang) {
        throw Error(ErrorKind::Schema, "problem '" + problem + "' mixes languages");
      }
      if (seen[problem].insert(source).second) pool.solutions.push_back(std::move(source));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Schema, where + "invalid JSON: " + e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), where + e.what());
    }
  }
  return pools;
}

CanonicalMap load_canonicals(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open canonical file '" + path.string() + "'");
  return read_canonicals(in, path.filename().string());
}

}  // namespace hloc
