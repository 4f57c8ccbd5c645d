#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hloc/corpus.hpp"
#include "hloc/types.hpp"

namespace hloc {

/// A program region with user-defined identifiers renamed to v1, v2, ...
struct NormalizedProgram {
  std::string original;    // the region text before renaming
  std::string normalized;  // the region text after renaming
  // name -> vK, in first-definition order.
  std::vector<std::pair<std::string, std::string>> rename_table;
  // offset_map[i] is the byte of `original` that normalized[i] derives from.
  // Every byte of a replacement maps to the first byte of the identifier it
  // replaced.
  std::vector<std::size_t> offset_map;
  // Uncollected names of the form v<digits> found in the region.
  std::vector<std::string> preexisting_v_names;
};

/// Renames identifiers defined inside region; source outside the region is
/// context only (parsed, never renamed, not part of the result).
NormalizedProgram normalize_program(std::string_view source, Language language, ByteSpan region);
NormalizedProgram normalize_program(std::string_view source, Language language);

/// Unique normalized solutions, keyed by significant-character stream,
/// first appearance first. context_prefix is parsed ahead of each solution.
std::vector<NormalizedProgram> dedup_pool(const CanonicalPool& pool,
                                          std::string_view context_prefix = {});

}  // namespace hloc
