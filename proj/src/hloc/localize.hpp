#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hloc/corpus.hpp"
#include "hloc/types.hpp"

namespace hloc {

struct NormalizedProgram;

/// The bytes that take part in comparison, with their positions in the text.
///
/// Java keeps every non-whitespace byte. Python additionally keeps line
/// structure: each non-blank line after the first contributes the newline
/// that ended the previous non-blank line plus its own indentation. Blank
/// lines and intra-line whitespace are dropped; "\r\n" counts as "\n".
struct SignificantStream {
  std::string chars;
  std::vector<std::size_t> origins;  // strictly increasing
};

SignificantStream significant_stream(std::string_view text, Language language);

struct Divergence {
  // Byte offset into the generated text. For end_of_generated it is one past
  // the last significant generated byte.
  std::size_t offset = 0;
  // The generated stream is a strict prefix of the canonical one.
  bool end_of_generated = false;
};

/// First position where the streams differ; nullopt when they are equal.
std::optional<Divergence> first_mismatch(const SignificantStream& generated,
                                         const SignificantStream& canonical);

struct CanonicalOutcome {
  std::size_t canonical = 0;  // position in the deduplicated pool
  std::optional<int> index;   // nullopt: full match
};

struct HallucinationLabel {
  std::optional<int> index;  // 1-based token index
  bool matched = false;      // some canonical matched fully
  std::vector<CanonicalOutcome> per_canonical;
};

/// 1-based index of the token covering byte `offset` of the generated text.
/// Offsets at or past the end go to the EOS token when the record has one,
/// else to the last token.
int token_index_at(const GenerationRecord& record, std::size_t offset);

/// Token attribution for a divergence against one normalized canonical.
int attribute_divergence(const GenerationRecord& record, const NormalizedProgram& generated,
                         const Divergence& divergence);

HallucinationLabel localize(const GenerationRecord& record, const CanonicalPool& pool);
HallucinationLabel localize(const GenerationRecord& record,
                            std::span<const NormalizedProgram> unique_canonicals);

/// Labels many records, sharing canonical normalization per (problem,
/// prefix) and spreading records over `jobs` threads.
std::vector<HallucinationLabel> localize_all(std::span<const GenerationRecord> records,
                                             const CanonicalMap& canonicals, unsigned jobs = 1);

}  // namespace hloc
