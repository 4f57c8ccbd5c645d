#include <doctest.h>

#include <string>
#include <vector>

#include "hloc/features.hpp"
#include "hloc/rng.hpp"
#include "hloc/syntax.hpp"
#include "support.hpp"

using namespace hloc;

namespace {

std::vector<std::string> names(const std::vector<IdentifierOccurrence>& occ) {
  std::vector<std::string> out;
  for (const auto& o : occ) out.push_back(o.name);
  return out;
}

std::vector<std::string> defined(const std::string& src, Language lang) {
  const SyntaxTree t = parse(src, lang);
  return names(collect_identifiers(t, {0, src.size()}));
}

TokenType type_at(const std::string& src, Language lang, const std::string& needle,
                  std::size_t skip = 0) {
  const SyntaxTree t = parse(src, lang);
  std::size_t pos = src.find(needle);
  for (std::size_t i = 0; i < skip; ++i) pos = src.find(needle, pos + 1);
  REQUIRE(pos != std::string::npos);
  return classify_offset(t, pos);
}

void check_leaf_invariants(const SyntaxTree& t) {
  const std::string& src = t.source();
  std::vector<int> cover(src.size(), 0);
  std::size_t last_end = 0;
  for (const Leaf& l : t.leaves()) {
    CHECK(l.span.begin >= last_end);
    CHECK(l.span.end > l.span.begin);
    CHECK(l.span.end <= src.size());
    last_end = l.span.end;
    for (std::size_t i = l.span.begin; i < l.span.end; ++i) ++cover[i];
  }
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (!is_space_byte(src[i])) CHECK(cover[i] == 1);
  }
}

}  // namespace

TEST_CASE("parse exposes grammar leaves") {
  const SyntaxTree t = parse("x = 1", Language::Python);
  REQUIRE(t.leaves().size() == 3);
  CHECK(t.leaves()[0].node_type == "identifier");
  CHECK(t.leaves()[0].is_named);
  CHECK(t.leaves()[1].node_type == "=");
  CHECK_FALSE(t.leaves()[1].is_named);
  CHECK(t.leaves()[2].node_type == "integer");
  CHECK(t.leaves()[2].span == ByteSpan{4, 5});
  CHECK_FALSE(t.has_error());

  CHECK(parse("", Language::Python).leaves().empty());
  CHECK(parse("", Language::Java).leaves().empty());
}

TEST_CASE("java fragments are wrapped and rebased") {
  const std::string stmt = "int x = 0;";
  const SyntaxTree direct = parse(stmt, Language::Java);
  REQUIRE(direct.leaves().size() == 5);
  CHECK(direct.leaves()[1].span == ByteSpan{4, 5});

  // A constructor only parses inside a class body.
  const std::string ctor = "public Point(int x, int y) { this.x = x; }";
  const SyntaxTree t = parse(ctor, Language::Java);
  CHECK(t.wrapper() == FragmentWrapper::ClassBody);
  CHECK_FALSE(t.has_error());
  check_leaf_invariants(t);

  // Reference: parse the wrapped text directly and shift by the prefix.
  const std::string prefix = "class __HlocWrap__ {\n";
  const std::string wrapped = prefix + ctor + "\n}";
  const SyntaxTree ref = parse(wrapped, Language::Java);
  std::vector<Leaf> expected;
  for (const Leaf& l : ref.leaves()) {
    if (l.span.begin >= prefix.size() && l.span.end <= prefix.size() + ctor.size()) {
      expected.push_back(l);
    }
  }
  REQUIRE(expected.size() == t.leaves().size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(t.leaves()[i].span.begin == expected[i].span.begin - prefix.size());
    CHECK(t.leaves()[i].node_type == expected[i].node_type);
  }
  CHECK(defined(ctor, Language::Java) == std::vector<std::string>{"Point", "x", "y"});

  const SyntaxTree body = parse("x = 1; }", Language::Java);
  check_leaf_invariants(body);
}

TEST_CASE("leaf spans are ordered and cover every visible byte") {
  Rng rng(5);
  const std::string alphabet = "ab1 =(),:\n\"'+<[]{}#;.x_\t";
  for (int trial = 0; trial < 300; ++trial) {
    std::string src;
    const std::size_t n = rng.below(40);
    for (std::size_t i = 0; i < n; ++i) src.push_back(alphabet[rng.below(alphabet.size())]);
    for (Language lang : {Language::Python, Language::Java}) {
      const SyntaxTree t = parse(src, lang);
      check_leaf_invariants(t);
      for (std::size_t off = 0; off < src.size(); ++off) {
        const TokenType ty = classify_offset(t, off);
        CHECK(ty != TokenType::Eos);
        if (is_space_byte(src[off])) CHECK(ty == TokenType::Space);
      }
    }
  }
}

TEST_CASE("python definition sites follow the identifier table") {
  CHECK(defined("for a, b in zip(tup1, tup2):\n    pass", Language::Python) ==
        std::vector<std::string>{"a", "b"});
  CHECK(defined("x = 1", Language::Python) == std::vector<std::string>{"x"});
  CHECK(defined("for x in nums:\n    pass", Language::Python) == std::vector<std::string>{"x"});
  CHECK(defined("[x**2 for x in nums]", Language::Python) == std::vector<std::string>{"x"});
  CHECK(defined("with open(p) as fp:\n    pass", Language::Python) ==
        std::vector<std::string>{"fp"});
  CHECK(defined("try:\n    pass\nexcept Exception as e:\n    pass", Language::Python) ==
        std::vector<std::string>{"e"});
  CHECK(defined("lambda x: x**2", Language::Python) == std::vector<std::string>{"x"});
  CHECK(defined("def add(x, y):\n    return x + y", Language::Python) ==
        std::vector<std::string>{"add", "x", "y"});
  CHECK(defined("def f(a, b=1, *c, d: int = 2, e: str, **g):\n    pass", Language::Python) ==
        std::vector<std::string>{"f", "a", "b", "c", "d", "e", "g"});
  // Attribute and subscript targets are not definitions; augmented assignment is not tabled.
  CHECK(defined("self.x = 1\na[i] = 2\nn += 1", Language::Python).empty());
  CHECK(defined("a, (b, c) = t", Language::Python) == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("java definition sites follow the identifier table") {
  CHECK(defined("int x = 0;", Language::Java) == std::vector<std::string>{"x"});
  CHECK(defined("for (Integer i : nums) { }", Language::Java) == std::vector<std::string>{"i"});
  CHECK(defined("nums.sort((a, b) -> b.compareTo(a));", Language::Java) ==
        std::vector<std::string>{"a", "b"});
  CHECK(defined("int add(int x, int y) { return x + y; }", Language::Java) ==
        std::vector<std::string>{"add", "x", "y"});
  CHECK(defined("Point(int x, int y) { }", Language::Java) ==
        std::vector<std::string>{"Point", "x", "y"});
  CHECK(defined("Runnable r = s -> s.run();", Language::Java) ==
        std::vector<std::string>{"r", "s"});
  CHECK(defined("void f(int... xs) { }", Language::Java) == std::vector<std::string>{"f", "xs"});
}

TEST_CASE("definitions outside the region are ignored") {
  const std::string prefix = "def check(tup1, tup2):\n    ";
  const std::string body = "for a, b in zip(tup1, tup2):\n        return a < b";
  const std::string src = prefix + body;
  const SyntaxTree t = parse(src, Language::Python);
  const auto occ = collect_identifiers(t, {prefix.size(), src.size()});
  CHECK(names(occ) == std::vector<std::string>{"a", "b"});
  CHECK(occ[0].definition_span.begin == prefix.size() + 4);
  CHECK(occ[0].defining_node_type == "for_statement");
  CHECK(names(collect_identifiers(t, {0, src.size()})) ==
        std::vector<std::string>{"check", "tup1", "tup2", "a", "b"});
}

TEST_CASE("token types follow the node-type table") {
  const std::string py = "def f(x):\n    return all(x < y for y in z) and x == 'a' or None";
  CHECK(type_at(py, Language::Python, "return") == TokenType::Keyword);
  CHECK(type_at(py, Language::Python, "(") == TokenType::Delimiter);
  CHECK(type_at(py, Language::Python, "<") == TokenType::Operator);
  CHECK(type_at(py, Language::Python, ":") == TokenType::Delimiter);
  CHECK(type_at(py, Language::Python, "==") == TokenType::Operator);
  CHECK(type_at(py, Language::Python, "'a'") == TokenType::Constant);
  CHECK(type_at(py, Language::Python, "None") == TokenType::Constant);
  CHECK(type_at(py, Language::Python, "all") == TokenType::Identifier);
  CHECK(type_at(py, Language::Python, "and") == TokenType::Keyword);

  const std::string java = "int f(String s) { List<Integer> xs = s -> 1.5; return s == null ? 0 : 'c'; }";
  CHECK(type_at(java, Language::Java, "int") == TokenType::TypeIdentifier);
  CHECK(type_at(java, Language::Java, "String") == TokenType::TypeIdentifier);
  CHECK(type_at(java, Language::Java, "Integer") == TokenType::TypeIdentifier);
  CHECK(type_at(java, Language::Java, "->") == TokenType::Operator);
  CHECK(type_at(java, Language::Java, "1.5") == TokenType::Constant);
  CHECK(type_at(java, Language::Java, "null") == TokenType::Constant);
  CHECK(type_at(java, Language::Java, "'c'") == TokenType::Constant);
  CHECK(type_at(java, Language::Java, "return") == TokenType::Keyword);
  CHECK(type_at(java, Language::Java, ";") == TokenType::Delimiter);
  CHECK(type_at(java, Language::Java, "?") == TokenType::Operator);
  CHECK(type_at(java, Language::Java, "f") == TokenType::Identifier);

  // f-strings: literal parts are constants, interpolated names are identifiers.
  const std::string fs = "s = f\"a{name}b\"";
  CHECK(type_at(fs, Language::Python, "a{") == TokenType::Constant);
  CHECK(type_at(fs, Language::Python, "name") == TokenType::Identifier);

  // Python return arrow is punctuation, walrus is an operator.
  CHECK(type_at("def g() -> int:\n    pass", Language::Python, "->") == TokenType::Delimiter);
  CHECK(type_at("if (n := 3):\n    pass", Language::Python, ":=") == TokenType::Operator);
}

TEST_CASE("unparseable bytes fall back to character classes") {
  const std::string src = "x = 1 ? 2";
  const SyntaxTree t = parse(src, Language::Python);
  CHECK(t.has_error());
  CHECK(classify_offset(t, src.find('?')) == TokenType::Operator);
  CHECK(classify_offset(t, 0) == TokenType::Identifier);
}

TEST_CASE("annotate_tokens types each token by its first visible byte") {
  GenerationRecord r = hloc::testing::make_record({"return", " all", "(", "x", ")", "   "},
                                                  Language::Python, "def f(x):\n    ");
  const auto ann = annotate_tokens(r);
  REQUIRE(ann.size() == 7);
  CHECK(ann[0].type == TokenType::Keyword);
  CHECK(ann[1].type == TokenType::Identifier);
  CHECK(ann[2].type == TokenType::Delimiter);
  CHECK(ann[3].type == TokenType::Identifier);
  CHECK(ann[5].type == TokenType::Space);
  CHECK(ann[6].type == TokenType::Eos);
  CHECK(ann[1].span == ByteSpan{6, 10});
  CHECK(ann[6].span == ByteSpan{16, 16});
  CHECK(ann[0].token_index == 1);
  CHECK(ann[0].chosen_prob == doctest::Approx(0.9));
  CHECK(ann[0].entropy > 0.0);
}

TEST_CASE("a token straddling leaves takes the type of its first byte") {
  GenerationRecord r =
      hloc::testing::make_record({"print", "(x", ")"}, Language::Python, "x = 1\n", false);
  const auto ann = annotate_tokens(r);
  CHECK(ann[1].type == TokenType::Delimiter);
}
