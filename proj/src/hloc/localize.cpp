#include "hloc/localize.hpp"

#include <algorithm>

#include "hloc/error.hpp"
#include "hloc/normalize.hpp"
#include "hloc/parallel.hpp"
#include "hloc/syntax.hpp"

namespace hloc {
namespace {

constexpr std::size_t kNoPos = static_cast<std::size_t>(-1);

bool is_inline_space(char c) { return c == ' ' || c == '\t' || c == '\f' || c == '\v' || c == '\r'; }

SignificantStream java_stream(std::string_view text) {
  SignificantStream s;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!is_space_byte(text[i])) {
      s.chars.push_back(text[i]);
      s.origins.push_back(i);
    }
  }
  return s;
}

SignificantStream python_stream(std::string_view text) {
  SignificantStream s;
  std::size_t pending_newline = kNoPos;
  bool first = true;
  std::size_t line_start = 0;
  while (line_start <= text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = text.size();

    std::size_t i = line_start;
    while (i < line_end && is_inline_space(text[i])) ++i;
    const bool blank = i == line_end;
    if (!blank) {
      if (!first) {
        s.chars.push_back('\n');
        s.origins.push_back(pending_newline);
      }
      // Indentation: leading spaces and tabs only; a stray '\r' is not indentation.
      for (std::size_t k = line_start; k < i; ++k) {
        if (text[k] == ' ' || text[k] == '\t') {
          s.chars.push_back(text[k]);
          s.origins.push_back(k);
        }
      }
      for (std::size_t k = i; k < line_end; ++k) {
        if (!is_inline_space(text[k])) {
          s.chars.push_back(text[k]);
          s.origins.push_back(k);
        }
      }
      first = false;
      pending_newline = line_end < text.size() ? line_end : kNoPos;
    }
    if (line_end == text.size()) break;
    line_start = line_end + 1;
  }
  return s;
}

}  // namespace

SignificantStream significant_stream(std::string_view text, Language language) {
  return language == Language::Java ? java_stream(text) : python_stream(text);
}

std::optional<Divergence> first_mismatch(const SignificantStream& generated,
                                         const SignificantStream& canonical) {
  const std::size_t n = std::min(generated.chars.size(), canonical.chars.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (generated.chars[i] != canonical.chars[i]) return Divergence{generated.origins[i], false};
  }
  if (generated.chars.size() == canonical.chars.size()) return std::nullopt;
  if (generated.chars.size() < canonical.chars.size()) {
    const std::size_t end = generated.origins.empty() ? 0 : generated.origins.back() + 1;
    return Divergence{end, true};
  }
  return Divergence{generated.origins[n], false};
}

int token_index_at(const GenerationRecord& record, std::size_t offset) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < record.tokens.size(); ++i) {
    if (record.is_eos(i)) break;
    const std::size_t len = record.tokens[i].size();
    if (offset >= pos && offset < pos + len) return static_cast<int>(i + 1);
    pos += len;
  }
  return static_cast<int>(record.tokens.size());
}

int attribute_divergence(const GenerationRecord& record, const NormalizedProgram& generated,
                         const Divergence& divergence) {
  if (divergence.end_of_generated || divergence.offset >= generated.offset_map.size()) {
    // The model stopped early: blame EOS (or the final token if none).
    return static_cast<int>(record.tokens.size());
  }
  return token_index_at(record, generated.offset_map[divergence.offset]);
}

HallucinationLabel localize(const GenerationRecord& record,
                            std::span<const NormalizedProgram> unique_canonicals) {
  if (unique_canonicals.empty()) {
    throw Error(ErrorKind::Data, "no canonical solutions for problem '" + record.problem_id + "'");
  }
  const std::string prefix(record.prefix());
  const std::string generated_text = record.generated_text();
  const NormalizedProgram generated =
      normalize_program(prefix + generated_text, record.language,
                        ByteSpan{prefix.size(), prefix.size() + generated_text.size()});
  const SignificantStream gen_stream = significant_stream(generated.normalized, record.language);

  HallucinationLabel label;
  int best = 0;
  for (std::size_t c = 0; c < unique_canonicals.size(); ++c) {
    const SignificantStream canon_stream =
        significant_stream(unique_canonicals[c].normalized, record.language);
    const std::optional<Divergence> d = first_mismatch(gen_stream, canon_stream);
    CanonicalOutcome outcome{c, std::nullopt};
    if (!d) {
      label.matched = true;
    } else {
      outcome.index = attribute_divergence(record, generated, *d);
      best = std::max(best, *outcome.index);
    }
    label.per_canonical.push_back(outcome);
  }
  if (!label.matched) label.index = best;
  return label;
}

HallucinationLabel localize(const GenerationRecord& record, const CanonicalPool& pool) {
  if (pool.language != record.language) {
    throw Error(ErrorKind::Data, "record '" + record.id + "' and the canonical pool for '" +
                                     pool.problem_id + "' use different languages");
  }
  const std::vector<NormalizedProgram> unique = dedup_pool(pool, record.prefix());
  return localize(record, unique);
}

std::vector<HallucinationLabel> localize_all(std::span<const GenerationRecord> records,
                                             const CanonicalMap& canonicals, unsigned jobs) {
  // Canonicals are normalized once per (problem, prompt prefix).
  struct Key {
    std::string problem;
    std::string prefix;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, std::size_t> slot_of;
  std::vector<Key> keys;
  std::vector<std::size_t> record_slot(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const GenerationRecord& r = records[i];
    auto pool = canonicals.find(r.problem_id);
    if (pool == canonicals.end() || pool->second.solutions.empty()) {
      throw Error(ErrorKind::Data, "no canonical solutions for problem '" + r.problem_id + "'");
    }
    if (pool->second.language != r.language) {
      throw Error(ErrorKind::Data, "record '" + r.id + "' and the canonical pool for '" +
                                       r.problem_id + "' use different languages");
    }
    Key key{r.problem_id, std::string(r.prefix())};
    auto [it, inserted] = slot_of.try_emplace(key, keys.size());
    if (inserted) keys.push_back(std::move(key));
    record_slot[i] = it->second;
  }

  std::vector<std::vector<NormalizedProgram>> unique(keys.size());
  parallel_for(keys.size(), jobs, [&](std::size_t k) {
    unique[k] = dedup_pool(canonicals.at(keys[k].problem), keys[k].prefix);
  });

  std::vector<HallucinationLabel> labels(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    labels[i] = localize(records[i], unique[record_slot[i]]);
  });
  return labels;
}

}  // namespace hloc
