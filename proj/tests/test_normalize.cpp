#include <doctest.h>

#include <string>

#include "hloc/localize.hpp"
#include "hloc/normalize.hpp"
#include "hloc/syntax.hpp"

using namespace hloc;

namespace {

std::string norm(const std::string& src, Language lang = Language::Python) {
  return normalize_program(src, lang).normalized;
}

CanonicalPool pool_of(Language lang, std::vector<std::string> sols) {
  CanonicalPool p;
  p.problem_id = "p";
  p.language = lang;
  p.solutions = std::move(sols);
  return p;
}

}  // namespace

TEST_CASE("identifiers defined in the region become v1, v2, ...") {
  CHECK(norm("for a, b in zip(tup1, tup2):\n    pass") == "for v1, v2 in zip(tup1, tup2):\n    pass");
  CHECK(norm("for a, b in zip(tup1, tup2)") == "for v1, v2 in zip(tup1, tup2)");
  CHECK(norm("x = 1") == "v1 = 1");
  CHECK(norm("for v1, v2 in zip(tup1, tup2)") == "for v1, v2 in zip(tup1, tup2)");
  CHECK(norm("int add(int x, int y) { return x + y; }", Language::Java) ==
        "int v1(int v2, int v3) { return v2 + v3; }");
  CHECK(norm("s = 'x'\nprint(f\"{s} x\")") == "v1 = 'x'\nprint(f\"{v1} x\")");
}

TEST_CASE("rename table and offset map") {
  const std::string src = "total = 0\nfor item in xs:\n    total += item";
  const NormalizedProgram p = normalize_program(src, Language::Python);
  REQUIRE(p.rename_table.size() == 2);
  CHECK(p.rename_table[0] == std::pair<std::string, std::string>{"total", "v1"});
  CHECK(p.rename_table[1] == std::pair<std::string, std::string>{"item", "v2"});
  CHECK(p.normalized == "v1 = 0\nfor v2 in xs:\n    v1 += v2");
  REQUIRE(p.offset_map.size() == p.normalized.size());
  CHECK(p.offset_map[0] == 0);
  CHECK(p.offset_map[1] == 0);
  CHECK(p.offset_map[2] == 5);
  for (std::size_t i = 0; i < p.normalized.size(); ++i) {
    const char c = p.normalized[i];
    if (c == ' ' || c == '=' || c == '\n' || c == ':') CHECK(src[p.offset_map[i]] == c);
  }
  for (std::size_t i = 1; i < p.offset_map.size(); ++i) CHECK(p.offset_map[i] >= p.offset_map[i - 1]);
}

TEST_CASE("only the region is renamed and returned") {
  const std::string prefix = "def check(tup1, tup2):\n    ";
  const std::string body = "for a, b in zip(tup1, tup2):\n        return a < b";
  const NormalizedProgram p =
      normalize_program(prefix + body, Language::Python, {prefix.size(), prefix.size() + body.size()});
  CHECK(p.original == body);
  CHECK(p.normalized == "for v1, v2 in zip(tup1, tup2):\n        return v1 < v2");
  CHECK(p.offset_map.front() == 0);
}

TEST_CASE("normalization is idempotent") {
  const char* programs[] = {
      "def f(a, b):\n    c = a + b\n    return [c * k for k in range(b)]",
      "with open(p) as fh:\n    data = fh.read()",
      "x = lambda q, r: q - r",
      "v2 = 1\nw = v2",
  };
  for (const char* src : programs) {
    const std::string once = norm(src);
    CHECK(norm(once) == once);
  }
  const std::string java = "int f(int n) { int s = 0; for (int i : xs) { s += i; } return s; }";
  CHECK(norm(norm(java, Language::Java), Language::Java) == norm(java, Language::Java));
}

TEST_CASE("pre-existing v names are reported") {
  const NormalizedProgram p = normalize_program("y = v7 + 1", Language::Python);
  CHECK(p.normalized == "v1 = v7 + 1");
  CHECK(p.preexisting_v_names == std::vector<std::string>{"v7"});
}

TEST_CASE("dedup_pool collapses alpha-equivalent solutions") {
  CHECK(dedup_pool(pool_of(Language::Python, {"for a,b in zip(t,u):\n    pass",
                                              "for x,y in zip(t,u):\n    pass"}))
            .size() == 1);
  CHECK(dedup_pool(pool_of(Language::Python, {"return 1", "return 2"})).size() == 2);
  CHECK(dedup_pool(pool_of(Language::Java, {"int x = 1;", "int  x=1 ;"})).size() == 1);
  const auto kept = dedup_pool(pool_of(Language::Python, {"return 2", "return 1", "return  2"}));
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].original == "return 2");
}

TEST_CASE("prefix-defined names survive in canonical pools") {
  const std::string prefix = "def check(tup1, tup2):\n    ";
  const auto kept = dedup_pool(pool_of(Language::Python, {"return tup1 < tup2"}), prefix);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].normalized == "return tup1 < tup2");
}

TEST_CASE("every definition construct is collected") {
  const std::pair<const char*, const char*> python[] = {
      {"x = 1", "v1 = 1"},
      {"for x in nums:", "for v1 in nums:"},
      {"[x**2 for x in nums]", "[v1**2 for v1 in nums]"},
      {"with open(p) as fp:", "with open(p) as v1:"},
      {"except Exception as e:", "except Exception as v1:"},
      {"lambda x: x**2", "lambda v1: v1**2"},
      {"def add(x, y):", "def v1(v2, v3):"},
  };
  for (const auto& [src, want] : python) CHECK(norm(src) == want);
  const std::pair<const char*, const char*> java[] = {
      {"int x = 0;", "int v1 = 0;"},
      {"for (Integer i : nums)", "for (Integer v1 : nums)"},
      {"nums.sort((a, b) -> b.compareTo(a));", "nums.sort((v1, v2) -> v2.compareTo(v1));"},
      {"int add(int x, int y)", "int v1(int v2, int v3)"},
      {"Point(int x, int y)", "v1(int v2, int v3)"},
  };
  for (const auto& [src, want] : java) CHECK(norm(src, Language::Java) == want);
}

TEST_CASE("dangling clauses parse inside an enclosing statement") {
  CHECK(norm("else:\n    z = 2") == "else:\n    v1 = 2");
  CHECK(norm("elif y:\n    z = y") == "elif y:\n    v1 = y");
}
