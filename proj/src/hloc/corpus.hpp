#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hloc/types.hpp"

namespace hloc {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::size_t kTopK = 100;

struct LogProbEntry {
  std::string text;
  double logprob = 0.0;

  friend bool operator==(const LogProbEntry&, const LogProbEntry&) = default;
};

/// One decoding step: the retained top-k candidates plus the emitted token.
struct LogProbStep {
  std::vector<LogProbEntry> entries;
  // Index of the emitted token in entries, or nullopt when it fell outside
  // the stored top-k; chosen_logprob is filled in both cases.
  std::optional<std::size_t> chosen;
  double chosen_logprob = 0.0;

  friend bool operator==(const LogProbStep& a, const LogProbStep& b) {
    if (a.entries != b.entries || a.chosen != b.chosen) return false;
    // NaN marks an unresolved chosen token; two unresolved steps are equal.
    return a.chosen_logprob == b.chosen_logprob ||
           (a.chosen_logprob != a.chosen_logprob && b.chosen_logprob != b.chosen_logprob);
  }
};

struct GenerationRecord {
  std::string id;
  Task task = Task::CG;
  std::string dataset;
  std::string model;
  Language language = Language::Python;
  std::string problem_id;
  std::optional<std::string> context_prefix;
  // Generated source as declared by the producer; when present it must equal
  // the token concatenation.
  std::optional<std::string> declared_source;
  std::vector<std::string> tokens;
  // The final token is the end-of-sequence sentinel (its text is empty).
  bool ends_with_eos = false;
  // Text of the EOS candidate inside the top-k lists, if the producer names it.
  std::optional<std::string> eos_text;
  std::vector<LogProbStep> steps;
  std::optional<std::string> error_message;
  std::optional<int> gold_index;  // 1-based

  std::size_t token_count() const { return tokens.size(); }
  bool is_eos(std::size_t i) const { return ends_with_eos && i + 1 == tokens.size(); }
  /// Concatenation of all non-EOS tokens.
  std::string generated_text() const;
  std::string_view prefix() const {
    return context_prefix ? std::string_view(*context_prefix) : std::string_view{};
  }

  friend bool operator==(const GenerationRecord&, const GenerationRecord&) = default;
};

struct Violation {
  std::string invariant;  // stable name of the violated invariant
  std::string location;   // e.g. "step 3", empty for record-level

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Invariant names reported by validate_record.
namespace invariant {
inline constexpr std::string_view kLengthMismatch = "steps length must equal tokens length";
inline constexpr std::string_view kConcatMismatch = "token concatenation must equal declared source";
inline constexpr std::string_view kGoldRange = "gold_index out of range";
inline constexpr std::string_view kLogprobPositive = "logprob must be \xE2\x89\xA4 0";
inline constexpr std::string_view kLogprobFinite = "logprob must be finite";
inline constexpr std::string_view kUnsorted = "entries must be sorted by logprob descending";
inline constexpr std::string_view kTooManyEntries = "at most 100 entries per step";
inline constexpr std::string_view kEmptyStep = "step must have at least one entry";
inline constexpr std::string_view kChosenMissing = "emitted token missing from top-k without chosen_logprob";
inline constexpr std::string_view kEosText = "EOS sentinel token must be empty";
inline constexpr std::string_view kNoTokens = "record must have at least one token";
}  // namespace invariant

std::vector<Violation> validate_record(const GenerationRecord& record);

/// Structural decode of one instance object. Type errors throw
/// Error(Schema) naming the field; invariants are left to validate_record.
GenerationRecord record_from_json(const nlohmann::json& object);
nlohmann::json record_to_json(const GenerationRecord& record);

/// Reads a line-delimited instance file. Every returned record satisfies
/// validate_record; the first offending line aborts the load.
std::vector<GenerationRecord> load_records(const std::filesystem::path& path);
std::vector<GenerationRecord> read_records(std::istream& in, std::string_view source_name);
void save_records(const std::filesystem::path& path, std::span<const GenerationRecord> records);
void write_records(std::ostream& out, std::span<const GenerationRecord> records);

struct CanonicalPool {
  std::string problem_id;
  Language language = Language::Python;
  std::vector<std::string> solutions;  // raw texts, exact duplicates removed

  friend bool operator==(const CanonicalPool&, const CanonicalPool&) = default;
};

using CanonicalMap = std::map<std::string, CanonicalPool>;

CanonicalMap load_canonicals(const std::filesystem::path& path);
CanonicalMap read_canonicals(std::istream& in, std::string_view source_name);

}  // namespace hloc
