#include "hloc/normalize.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "hloc/localize.hpp"
#include "hloc/syntax.hpp"

namespace hloc {
namespace {

bool looks_like_v_name(std::string_view s) {
  if (s.size() < 2 || s[0] != 'v') return false;
  return std::all_of(s.begin() + 1, s.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

bool is_renamable_leaf(const Leaf& leaf) {
  return !leaf.in_error && !leaf.in_literal &&
         (leaf.node_type == "identifier" || leaf.node_type == "type_identifier");
}

}  // namespace

NormalizedProgram normalize_program(std::string_view source, Language language, ByteSpan region) {
  region.end = std::min(region.end, source.size());
  region.begin = std::min(region.begin, region.end);

  const SyntaxTree tree = parse(std::string(source), language);
  const std::vector<IdentifierOccurrence> defs = collect_identifiers(tree, region);

  NormalizedProgram out;
  out.original = std::string(source.substr(region.begin, region.size()));
  std::map<std::string, std::string, std::less<>> renames;
  for (std::size_t i = 0; i < defs.size(); ++i) {
    std::string v = "v" + std::to_string(i + 1);
    renames.emplace(defs[i].name, v);
    out.rename_table.emplace_back(defs[i].name, std::move(v));
  }

  std::set<std::string, std::less<>> seen_v;
  std::size_t pos = region.begin;
  auto copy_through = [&](std::size_t until) {
    for (; pos < until; ++pos) {
      out.normalized.push_back(source[pos]);
      out.offset_map.push_back(pos - region.begin);
    }
  };

  for (const Leaf& leaf : tree.leaves()) {
    if (leaf.span.end <= region.begin || leaf.span.begin >= region.end) continue;
    if (!is_renamable_leaf(leaf) || !region.contains(leaf.span)) continue;
    const std::string_view name = source.substr(leaf.span.begin, leaf.span.size());
    auto it = renames.find(name);
    if (it == renames.end()) {
      if (looks_like_v_name(name) && seen_v.insert(std::string(name)).second) {
        out.preexisting_v_names.emplace_back(name);
      }
      continue;
    }
    copy_through(leaf.span.begin);
    for (char c : it->second) {
      out.normalized.push_back(c);
      out.offset_map.push_back(leaf.span.begin - region.begin);
    }
    pos = leaf.span.end;
  }
  copy_through(region.end);
  return out;
}

NormalizedProgram normalize_program(std::string_view source, Language language) {
  return normalize_program(source, language, ByteSpan{0, source.size()});
}

std::vector<NormalizedProgram> dedup_pool(const CanonicalPool& pool, std::string_view context_prefix) {
  std::vector<NormalizedProgram> unique;
  std::set<std::string, std::less<>> keys;
  const std::string prefix(context_prefix);
  for (const std::string& solution : pool.solutions) {
    NormalizedProgram np = normalize_program(
        prefix + solution, pool.language, ByteSpan{prefix.size(), prefix.size() + solution.size()});
    std::string key = significant_stream(np.normalized, pool.language).chars;
    if (keys.insert(std::move(key)).second) unique.push_back(std::move(np));
  }
  return unique;
}

}  // namespace hloc
