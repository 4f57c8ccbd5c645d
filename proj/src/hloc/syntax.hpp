#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hloc/types.hpp"

struct TSTree;

namespace hloc {

struct GenerationRecord;
struct TokenAnnotation;

/// A terminal of the concrete syntax tree. Literal nodes (strings, numbers,
/// character literals) are kept whole; f-strings with interpolations are
/// split so the embedded expressions stay visible.
struct Leaf {
  ByteSpan span;
  std::string_view node_type;    // grammar symbol name, static storage
  std::string_view parent_type;  // enclosing node's symbol, empty at root
  bool is_named = false;
  bool is_error = false;    // ERROR/MISSING leaf or uncovered bytes
  bool in_error = false;    // leaf or any ancestor is an error node
  bool in_literal = false;  // string part of an interpolated literal
};

/// How a fragment was wrapped to make it parse. Java fragments may be placed
/// in a class or method body; Python fragments may get a closing suffix or
/// an enclosing opener for dangling clauses.
enum class FragmentWrapper { None, ClassBody, MethodBody, Completion, Enclosing };

std::string_view to_string(FragmentWrapper wrapper);

struct IdentifierOccurrence {
  std::string name;
  ByteSpan definition_span;
  std::string defining_node_type;
};

class SyntaxTree {
 public:
  const std::string& source() const { return source_; }
  Language language() const { return language_; }
  std::span<const Leaf> leaves() const { return leaves_; }
  FragmentWrapper wrapper() const { return wrapper_; }
  bool has_error() const { return has_error_; }

  /// Index of the leaf covering offset, or npos.
  std::size_t leaf_at(std::size_t offset) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  // Raw grammar tree; offsets inside it are shifted by wrap_offset().
  const TSTree* raw_tree() const { return tree_.get(); }
  std::size_t wrap_offset() const { return wrap_offset_; }

 private:
  friend SyntaxTree parse(std::string source, Language language);

  std::string source_;
  Language language_ = Language::Python;
  std::vector<Leaf> leaves_;
  FragmentWrapper wrapper_ = FragmentWrapper::None;
  bool has_error_ = false;
  std::size_t wrap_offset_ = 0;  // bytes of wrapper text before source_
  std::shared_ptr<TSTree> tree_;
};

/// Parses source with the grammar for language. Never throws on syntax
/// errors; throws Error(Config) only if the grammar runtime is unusable.
SyntaxTree parse(std::string source, Language language);

/// Definition-site identifiers inside region, one per distinct name, in order
/// of their first definition site.
std::vector<IdentifierOccurrence> collect_identifiers(const SyntaxTree& tree, ByteSpan region);

/// Token type of a single leaf per the fixed node-type table.
TokenType classify_leaf(const Leaf& leaf, std::string_view text, Language language);

/// Total: whitespace is Space, everything else goes through the covering leaf.
TokenType classify_offset(const SyntaxTree& tree, std::size_t offset);

/// One annotation per token; parses prefix + generated text.
std::vector<TokenAnnotation> annotate_tokens(const GenerationRecord& record);

bool is_space_byte(char c);

}  // namespace hloc
