#include "hloc/syntax.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <set>

#include <tree_sitter/api.h>

#include "hloc/corpus.hpp"
#include "hloc/error.hpp"
#include "hloc/features.hpp"

extern "C" {
const TSLanguage* tree_sitter_python(void);
const TSLanguage* tree_sitter_java(void);
}

namespace hloc {
namespace {

struct WrapCandidate {
  FragmentWrapper kind;
  std::string_view prefix, suffix;
};

constexpr std::string_view kJavaClassPrefix = "class __HlocWrap__ {\n";
constexpr std::string_view kJavaMethodPrefix = "class __HlocWrap__ { void __hlocWrap__() {\n";
constexpr std::array<WrapCandidate, 3> kJavaWrappers = {{
    {FragmentWrapper::ClassBody, kJavaClassPrefix, "\n}"},
    {FragmentWrapper::ClassBody, kJavaClassPrefix, " {}\n}"},
    {FragmentWrapper::MethodBody, kJavaMethodPrefix, "\n}}"},
}};

constexpr std::string_view kPythonTry = "try:\n    pass\n";
constexpr std::string_view kPythonIf = "if True:\n    pass\n";
constexpr std::array<WrapCandidate, 10> kPythonWrappers = {{
    {FragmentWrapper::Completion, "", ":\n    pass"},
    {FragmentWrapper::Completion, "", "\n    pass"},
    {FragmentWrapper::Completion, "", ")"},
    {FragmentWrapper::Completion, "", "):\n    pass"},
    {FragmentWrapper::Completion, "", "]"},
    {FragmentWrapper::Completion, "", "))"},
    {FragmentWrapper::Enclosing, kPythonTry, ""},
    {FragmentWrapper::Enclosing, kPythonTry, "\n    pass"},
    {FragmentWrapper::Enclosing, kPythonIf, ""},
    {FragmentWrapper::Enclosing, kPythonIf, "\n    pass"},
}};

struct ParserDeleter {
  void operator()(TSParser* p) const { ts_parser_delete(p); }
};

// One parser per language per thread.
TSParser* thread_parser(Language language) {
  thread_local std::array<std::unique_ptr<TSParser, ParserDeleter>, 2> parsers;
  auto& slot = parsers[language == Language::Python ? 0 : 1];
  if (!slot) {
    slot.reset(ts_parser_new());
    const TSLanguage* grammar =
        language == Language::Python ? tree_sitter_python() : tree_sitter_java();
    if (!slot || !ts_parser_set_language(slot.get(), grammar)) {
      slot.reset();
      throw Error(ErrorKind::Config, "incompatible grammar for " + std::string(to_string(language)));
    }
  }
  return slot.get();
}

std::shared_ptr<TSTree> parse_raw(std::string_view text, Language language) {
  TSParser* parser = thread_parser(language);
  TSTree* tree = ts_parser_parse_string(parser, nullptr, text.data(),
                                        static_cast<std::uint32_t>(text.size()));
  if (!tree) throw Error(ErrorKind::Config, "grammar runtime returned no tree");
  return {tree, ts_tree_delete};
}

// Bytes swallowed by error nodes plus one per missing node.
std::size_t error_cost(TSNode node) {
  if (ts_node_is_missing(node)) return 1;
  if (ts_node_is_error(node)) {
    return std::max<std::size_t>(1, ts_node_end_byte(node) - ts_node_start_byte(node));
  }
  if (!ts_node_has_error(node)) return 0;
  std::size_t cost = 0;
  const std::uint32_t n = ts_node_child_count(node);
  for (std::uint32_t i = 0; i < n; ++i) cost += error_cost(ts_node_child(node, i));
  return cost;
}

bool is_python_hard_keyword(std::string_view word) {
  static const std::set<std::string_view, std::less<>> hard = {
      "and",  "as",     "assert", "async",    "await", "break", "class", "continue", "def",
      "del",  "elif",   "else",   "except",   "finally", "for", "from",  "global",   "if",
      "import", "in",   "is",     "lambda",   "nonlocal", "not", "or",   "pass",     "raise",
      "return", "try",  "while",  "with",     "yield"};
  return hard.contains(word);
}

// Python hard keywords that the grammar accepted as identifiers, e.g. a
// dangling "else:" read as an annotated assignment.
std::size_t keyword_identifiers(TSNode node, std::string_view text) {
  if (std::string_view(ts_node_type(node)) == "identifier") {
    return is_python_hard_keyword(text.substr(ts_node_start_byte(node), ts_node_end_byte(node) - ts_node_start_byte(node)));
  }
  std::size_t count = 0;
  const std::uint32_t n = ts_node_child_count(node);
  for (std::uint32_t i = 0; i < n; ++i) count += keyword_identifiers(ts_node_child(node, i), text);
  return count;
}

std::size_t parse_cost(TSNode root, std::string_view text, Language language) {
  return error_cost(root) + (language == Language::Python ? keyword_identifiers(root, text) : 0);
}

bool is_python_atomic_literal(TSNode node, std::string_view type) {
  if (type == "string") {
    const std::uint32_t n = ts_node_named_child_count(node);
    for (std::uint32_t i = 0; i < n; ++i) {
      if (std::string_view(ts_node_type(ts_node_named_child(node, i))) == "interpolation") {
        return false;
      }
    }
    return true;
  }
  return false;
}

bool is_java_atomic_literal(std::string_view type) {
  return type == "string_literal" || type == "text_block" || type == "character_literal";
}

struct LeafCollector {
  std::string_view text;  // parsed text (wrapper included)
  std::size_t lo = 0;     // source window within text
  std::size_t hi = 0;
  Language language;
  std::vector<Leaf> leaves;

  void emit(TSNode node, std::string_view type, std::string_view parent, bool named,
            bool is_error, bool in_error, bool in_literal) {
    std::size_t b = ts_node_start_byte(node);
    std::size_t e = ts_node_end_byte(node);
    b = std::max(b, lo);
    e = std::min(e, hi);
    if (b >= e) return;
    Leaf leaf;
    leaf.span = {b - lo, e - lo};
    leaf.node_type = type;
    leaf.parent_type = parent;
    leaf.is_named = named;
    leaf.is_error = is_error;
    leaf.in_error = in_error;
    leaf.in_literal = in_literal;
    leaves.push_back(leaf);
  }

  void walk(TSTreeCursor* cursor, std::string_view parent, bool in_error, bool in_literal) {
    const TSNode node = ts_tree_cursor_current_node(cursor);
    if (ts_node_end_byte(node) <= lo || ts_node_start_byte(node) >= hi) return;
    const std::string_view type = ts_node_type(node);
    const bool named = ts_node_is_named(node);
    const bool self_error = ts_node_is_error(node) || ts_node_is_missing(node);
    const bool err = in_error || self_error;
    const bool atomic = ts_node_child_count(node) == 0 ||
                        (language == Language::Python && is_python_atomic_literal(node, type)) ||
                        (language == Language::Java && is_java_atomic_literal(type));
    if (atomic) {
      emit(node, type, parent, named, self_error, err, in_literal);
      return;
    }
    // Inside an interpolated string the literal parts are constants and the
    // interpolation bodies are ordinary code.
    bool child_literal = in_literal;
    if (language == Language::Python) {
      if (type == "string") child_literal = true;
      if (type == "interpolation") child_literal = false;
    }
    if (ts_tree_cursor_goto_first_child(cursor)) {
      do {
        walk(cursor, type, err, child_literal);
      } while (ts_tree_cursor_goto_next_sibling(cursor));
      ts_tree_cursor_goto_parent(cursor);
    }
  }
};

// Orders leaves, removes overlap and covers stray non-whitespace bytes.
std::vector<Leaf> normalize_leaves(std::vector<Leaf> leaves, std::string_view source) {
  std::stable_sort(leaves.begin(), leaves.end(),
                   [](const Leaf& a, const Leaf& b) { return a.span.begin < b.span.begin; });
  std::vector<Leaf> out;
  out.reserve(leaves.size());
  std::size_t cursor = 0;
  auto fill_gap = [&](std::size_t from, std::size_t to) {
    std::size_t i = from;
    while (i < to) {
      while (i < to && is_space_byte(source[i])) ++i;
      std::size_t j = i;
      while (j < to && !is_space_byte(source[j])) ++j;
      if (j > i) {
        Leaf leaf;
        leaf.span = {i, j};
        leaf.node_type = "ERROR";
        leaf.is_named = true;
        leaf.is_error = true;
        leaf.in_error = true;
        out.push_back(leaf);
      }
      i = j;
    }
  };
  for (Leaf leaf : leaves) {
    if (leaf.span.begin < cursor) leaf.span.begin = cursor;
    if (leaf.span.begin >= leaf.span.end) continue;
    fill_gap(cursor, leaf.span.begin);
    out.push_back(leaf);
    cursor = leaf.span.end;
  }
  fill_gap(cursor, source.size());
  return out;
}

const std::set<std::string_view, std::less<>>& keywords(Language language) {
  static const std::set<std::string_view, std::less<>> python = {
      "False", "None",   "True",    "and",      "as",       "assert", "async", "await",
      "break", "class",  "continue", "def",     "del",      "elif",   "else",  "except",
      "finally", "for",  "from",    "global",   "if",       "import", "in",    "is",
      "lambda", "nonlocal", "not",  "or",       "pass",     "raise",  "return", "try",
      "while", "with",   "yield",   "match",    "case",     "print",  "exec"};
  static const std::set<std::string_view, std::less<>> java = {
      "abstract", "assert",  "boolean", "break",     "byte",       "case",     "catch",
      "char",     "class",   "const",   "continue",  "default",    "do",       "double",
      "else",     "enum",    "extends", "final",     "finally",    "float",    "for",
      "goto",     "if",      "implements", "import", "instanceof", "int",      "interface",
      "long",     "native",  "new",     "package",   "private",    "protected", "public",
      "return",   "short",   "static",  "strictfp",  "super",      "switch",   "synchronized",
      "this",     "throw",   "throws",  "transient", "try",        "void",     "volatile",
      "while",    "var",     "record",  "yield",     "true",       "false",    "null"};
  return language == Language::Python ? python : java;
}

bool is_operator_char(char c) {
  return std::string_view("+-*/%<>=!&|^~?@").find(c) != std::string_view::npos;
}

bool is_delimiter_char(char c) {
  return std::string_view("()[]{},;.:").find(c) != std::string_view::npos;
}

bool is_word_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$' ||
         static_cast<unsigned char>(c) >= 0x80;
}

bool is_word_char(char c) {
  return is_word_start(c) || std::isdigit(static_cast<unsigned char>(c));
}

// Character-class table for text the grammar could not type.
TokenType fallback_type(std::string_view text, Language language) {
  std::size_t i = 0;
  while (i < text.size() && is_space_byte(text[i])) ++i;
  if (i == text.size()) return TokenType::Space;
  const char c = text[i];
  if (is_word_start(c)) {
    std::size_t j = i;
    while (j < text.size() && is_word_char(text[j])) ++j;
    const std::string_view word = text.substr(i, j - i);
    if (keywords(language).count(word) != 0) {
      if (word == "True" || word == "False" || word == "None" || word == "true" ||
          word == "false" || word == "null") {
        return TokenType::Constant;
      }
      return TokenType::Keyword;
    }
    return TokenType::Identifier;
  }
  if (std::isdigit(static_cast<unsigned char>(c)) || c == '"' || c == '\'' || c == '#' ||
      c == '`') {
    return TokenType::Constant;
  }
  if (is_operator_char(c)) return TokenType::Operator;
  return TokenType::Delimiter;
}

bool is_constant_type(std::string_view t, Language language) {
  static const std::set<std::string_view, std::less<>> python = {
      "string", "integer", "float", "true", "false", "none", "ellipsis", "string_start",
      "string_content", "string_end", "escape_sequence", "comment", "type_conversion",
      "format_specifier", "escape_interpolation"};
  static const std::set<std::string_view, std::less<>> java = {
      "decimal_integer_literal", "hex_integer_literal", "octal_integer_literal",
      "binary_integer_literal", "decimal_floating_point_literal", "hex_floating_point_literal",
      "true", "false", "character_literal", "string_literal", "text_block", "null_literal",
      "string_fragment", "escape_sequence", "line_comment", "block_comment"};
  return (language == Language::Python ? python : java).count(t) != 0;
}

bool is_java_primitive(std::string_view t) {
  return t == "integral_type" || t == "floating_point_type" || t == "boolean_type" ||
         t == "void_type";
}

}  // namespace

bool is_space_byte(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view to_string(FragmentWrapper wrapper) {
  switch (wrapper) {
    case FragmentWrapper::None: return "none";
    case FragmentWrapper::ClassBody: return "class-body";
    case FragmentWrapper::MethodBody: return "method-body";
    case FragmentWrapper::Completion: return "completion";
    case FragmentWrapper::Enclosing: return "enclosing";
  }
  return "?";
}

std::size_t SyntaxTree::leaf_at(std::size_t offset) const {
  auto it = std::upper_bound(leaves_.begin(), leaves_.end(), offset,
                             [](std::size_t off, const Leaf& l) { return off < l.span.begin; });
  if (it == leaves_.begin()) return npos;
  --it;
  return it->span.contains(offset) ? static_cast<std::size_t>(it - leaves_.begin()) : npos;
}

SyntaxTree parse(std::string source, Language language) {
  SyntaxTree tree;
  tree.language_ = language;

  std::string parsed = source;
  std::shared_ptr<TSTree> raw = parse_raw(parsed, language);
  std::size_t offset = 0;
  FragmentWrapper wrapper = FragmentWrapper::None;

  std::size_t best_cost = parse_cost(ts_tree_root_node(raw.get()), parsed, language);
  if (!source.empty() && best_cost > 0) {
    // Generated code is often a fragment or cut off mid-statement; retry
    // wrapped and keep the first clean parse, else the cheapest one.
    for (const WrapCandidate& c : language == Language::Java ? std::span<const WrapCandidate>(kJavaWrappers)
                                                                  : std::span<const WrapCandidate>(kPythonWrappers)) {
      std::string text = std::string(c.prefix) + source + std::string(c.suffix);
      std::shared_ptr<TSTree> attempt = parse_raw(text, language);
      const std::size_t cost = parse_cost(ts_tree_root_node(attempt.get()), text, language);
      if (cost < best_cost) {
        best_cost = cost;
        parsed = std::move(text);
        raw = std::move(attempt);
        offset = c.prefix.size();
        wrapper = c.kind;
      }
      if (best_cost == 0) break;
    }
  }

  LeafCollector collector{parsed, offset, offset + source.size(), language, {}};
  TSTreeCursor cursor = ts_tree_cursor_new(ts_tree_root_node(raw.get()));
  collector.walk(&cursor, {}, false, false);
  ts_tree_cursor_delete(&cursor);

  tree.leaves_ = normalize_leaves(std::move(collector.leaves), source);
  tree.has_error_ = std::any_of(tree.leaves_.begin(), tree.leaves_.end(),
                                [](const Leaf& l) { return l.in_error; }) ||
                    ts_node_has_error(ts_tree_root_node(raw.get()));
  tree.wrapper_ = wrapper;
  tree.wrap_offset_ = offset;
  tree.tree_ = std::move(raw);
  tree.source_ = std::move(source);
  return tree;
}

// ---------------------------------------------------------------------------
// Definition sites

namespace {

struct DefinitionCollector {
  Language language;
  std::string_view source;
  std::size_t offset;  // wrapper shift
  ByteSpan region;
  std::vector<IdentifierOccurrence> found;

  void add(TSNode ident, std::string_view defining) {
    if (ts_node_is_null(ident) || ts_node_is_missing(ident)) return;
    if (std::string_view(ts_node_type(ident)) != "identifier") return;
    const std::size_t b = ts_node_start_byte(ident);
    const std::size_t e = ts_node_end_byte(ident);
    if (b < offset || e > offset + source.size() || b >= e) return;
    const ByteSpan span{b - offset, e - offset};
    if (!region.contains(span)) return;
    found.push_back({std::string(source.substr(span.begin, span.size())), span,
                     std::string(defining)});
  }

  // Python binding targets: names, and names nested in tuple/list patterns.
  void python_pattern(TSNode node, std::string_view defining) {
    if (ts_node_is_null(node)) return;
    const std::string_view t = ts_node_type(node);
    if (t == "identifier") {
      add(node, defining);
      return;
    }
    static const std::set<std::string_view, std::less<>> containers = {
        "pattern_list", "tuple_pattern", "list_pattern", "tuple", "list",
        "parenthesized_expression", "expression_list", "as_pattern_target",
        "list_splat_pattern", "list_splat"};
    if (containers.count(t) == 0) return;
    const std::uint32_t n = ts_node_named_child_count(node);
    for (std::uint32_t i = 0; i < n; ++i) python_pattern(ts_node_named_child(node, i), defining);
  }

  void python_parameters(TSNode params, std::string_view defining) {
    if (ts_node_is_null(params)) return;
    const std::uint32_t n = ts_node_named_child_count(params);
    for (std::uint32_t i = 0; i < n; ++i) {
      const TSNode p = ts_node_named_child(params, i);
      const std::string_view t = ts_node_type(p);
      if (t == "identifier") {
        add(p, defining);
      } else if (t == "default_parameter" || t == "typed_default_parameter") {
        add(ts_node_child_by_field_name(p, "name", 4), defining);
      } else if (t == "typed_parameter") {
        const std::uint32_t m = ts_node_named_child_count(p);
        for (std::uint32_t j = 0; j < m; ++j) {
          const TSNode c = ts_node_named_child(p, j);
          const std::string_view ct = ts_node_type(c);
          if (ct == "identifier") {
            add(c, defining);
            break;
          }
          if (ct == "list_splat_pattern" || ct == "dictionary_splat_pattern") {
            python_parameters(c, defining);
            break;
          }
        }
      } else if (t == "list_splat_pattern" || t == "dictionary_splat_pattern") {
        python_parameters(p, defining);
      } else if (t == "tuple_pattern") {
        python_pattern(p, defining);
      }
    }
  }

  void python_as_aliases(TSNode node, std::string_view defining) {
    const std::uint32_t n = ts_node_named_child_count(node);
    for (std::uint32_t i = 0; i < n; ++i) {
      const TSNode c = ts_node_named_child(node, i);
      const std::string_view t = ts_node_type(c);
      if (t == "as_pattern") {
        python_pattern(ts_node_child_by_field_name(c, "alias", 5), defining);
      } else if (t == "with_clause" || t == "with_item") {
        python_as_aliases(c, defining);
      }
    }
  }

  void python_node(TSNode node, std::string_view t) {
    if (t == "assignment" || t == "for_statement" || t == "for_in_clause") {
      python_pattern(ts_node_child_by_field_name(node, "left", 4), t);
    } else if (t == "with_statement" || t == "except_clause") {
      python_as_aliases(node, t);
    } else if (t == "lambda") {
      python_parameters(ts_node_child_by_field_name(node, "parameters", 10), t);
    } else if (t == "function_definition") {
      add(ts_node_child_by_field_name(node, "name", 4), t);
      python_parameters(ts_node_child_by_field_name(node, "parameters", 10), t);
    }
  }

  void java_formal_parameters(TSNode params, std::string_view defining) {
    if (ts_node_is_null(params)) return;
    const std::uint32_t n = ts_node_named_child_count(params);
    for (std::uint32_t i = 0; i < n; ++i) {
      const TSNode p = ts_node_named_child(params, i);
      const std::string_view t = ts_node_type(p);
      if (t == "formal_parameter") {
        add(ts_node_child_by_field_name(p, "name", 4), defining);
      } else if (t == "identifier") {
        add(p, defining);
      }
      // spread_parameter names come through their variable_declarator.
    }
  }

  void java_node(TSNode node, std::string_view t) {
    if (t == "variable_declarator" || t == "enhanced_for_statement") {
      add(ts_node_child_by_field_name(node, "name", 4), t);
    } else if (t == "lambda_expression") {
      const TSNode params = ts_node_child_by_field_name(node, "parameters", 10);
      if (ts_node_is_null(params)) return;
      const std::string_view pt = ts_node_type(params);
      if (pt == "identifier") add(params, t);
      else java_formal_parameters(params, t);  // inferred_parameters or formal_parameters
    } else if (t == "method_declaration" || t == "constructor_declaration") {
      add(ts_node_child_by_field_name(node, "name", 4), t);
      java_formal_parameters(ts_node_child_by_field_name(node, "parameters", 10), t);
    }
  }

  void walk(TSTreeCursor* cursor) {
    const TSNode node = ts_tree_cursor_current_node(cursor);
    if (ts_node_is_error(node)) return;
    const std::string_view t = ts_node_type(node);
    if (language == Language::Python) python_node(node, t);
    else java_node(node, t);
    if (ts_tree_cursor_goto_first_child(cursor)) {
      do {
        walk(cursor);
      } while (ts_tree_cursor_goto_next_sibling(cursor));
      ts_tree_cursor_goto_parent(cursor);
    }
  }
};

}  // namespace

std::vector<IdentifierOccurrence> collect_identifiers(const SyntaxTree& tree, ByteSpan region) {
  region.end = std::min(region.end, tree.source().size());
  region.begin = std::min(region.begin, region.end);
  DefinitionCollector collector{tree.language(), tree.source(), tree.wrap_offset(), region, {}};
  TSTreeCursor cursor = ts_tree_cursor_new(ts_tree_root_node(tree.raw_tree()));
  collector.walk(&cursor);
  ts_tree_cursor_delete(&cursor);

  std::stable_sort(collector.found.begin(), collector.found.end(),
                   [](const IdentifierOccurrence& a, const IdentifierOccurrence& b) {
                     return a.definition_span.begin < b.definition_span.begin;
                   });
  std::vector<IdentifierOccurrence> out;
  std::set<std::string, std::less<>> names;
  for (IdentifierOccurrence& occ : collector.found) {
    if (names.insert(occ.name).second) out.push_back(std::move(occ));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Token types

TokenType classify_leaf(const Leaf& leaf, std::string_view text, Language language) {
  if (leaf.is_error) return fallback_type(text, language);
  if (leaf.in_literal) return TokenType::Constant;
  const std::string_view t = leaf.node_type;

  if (leaf.is_named) {
    if (t == "identifier") return TokenType::Identifier;
    if (t == "type_identifier") return TokenType::TypeIdentifier;
    if (is_constant_type(t, language)) return TokenType::Constant;
    if (language == Language::Java && is_java_primitive(t)) return TokenType::TypeIdentifier;
    if (t == "this" || t == "super") return TokenType::Keyword;
    if (t == "line_continuation") return TokenType::Delimiter;
    return fallback_type(text, language);
  }

  if (t.empty()) return fallback_type(text, language);
  if (is_word_start(t.front())) {
    if (language == Language::Java && is_java_primitive(leaf.parent_type)) {
      return TokenType::TypeIdentifier;
    }
    return TokenType::Keyword;
  }
  if (t == "->") return language == Language::Java ? TokenType::Operator : TokenType::Delimiter;
  if (t == ":=") return TokenType::Operator;
  if (std::all_of(t.begin(), t.end(), is_operator_char)) return TokenType::Operator;
  if (std::all_of(t.begin(), t.end(), is_delimiter_char)) return TokenType::Delimiter;
  if (t.find('=') != std::string_view::npos) return TokenType::Operator;
  return fallback_type(text, language);
}

TokenType classify_offset(const SyntaxTree& tree, std::size_t offset) {
  const std::string& src = tree.source();
  if (offset >= src.size()) {
    throw Error(ErrorKind::Usage, "offset " + std::to_string(offset) + " outside source");
  }
  if (is_space_byte(src[offset])) return TokenType::Space;
  const std::size_t i = tree.leaf_at(offset);
  if (i == SyntaxTree::npos) {
    return fallback_type(std::string_view(src).substr(offset), tree.language());
  }
  const Leaf& leaf = tree.leaves()[i];
  const std::size_t from = leaf.is_error ? offset : leaf.span.begin;
  return classify_leaf(leaf, std::string_view(src).substr(from, leaf.span.end - from),
                       tree.language());
}

std::vector<TokenAnnotation> annotate_tokens(const GenerationRecord& record) {
  const std::string prefix(record.prefix());
  const std::string generated = record.generated_text();
  const SyntaxTree tree = parse(prefix + generated, record.language);

  std::vector<TokenAnnotation> out;
  out.reserve(record.tokens.size());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < record.tokens.size(); ++i) {
    TokenAnnotation a;
    a.token_index = static_cast<int>(i + 1);
    if (record.is_eos(i)) {
      a.span = {pos, pos};
      a.type = TokenType::Eos;
    } else {
      const std::string& tok = record.tokens[i];
      a.span = {pos, pos + tok.size()};
      a.type = TokenType::Space;
      for (std::size_t k = 0; k < tok.size(); ++k) {
        if (!is_space_byte(tok[k])) {
          a.type = classify_offset(tree, prefix.size() + pos + k);
          break;
        }
      }
      pos += tok.size();
    }
    if (i < record.steps.size()) {
      const LogProbStep& step = record.steps[i];
      a.chosen_prob = std::exp(step.chosen_logprob);
      a.entropy = step.entries.empty() ? 0.0 : step_entropy(step);
    }
    out.push_back(a);
  }
  return out;
}

}  // namespace hloc
