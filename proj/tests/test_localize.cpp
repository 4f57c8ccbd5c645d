#include <doctest.h>

#include <string>

#include "hloc/error.hpp"
#include "hloc/localize.hpp"
#include "hloc/normalize.hpp"
#include "hloc/rng.hpp"
#include "support.hpp"

using namespace hloc;
using hloc::testing::make_record;

namespace {

CanonicalPool pool_of(Language lang, std::vector<std::string> sols) {
  CanonicalPool p;
  p.problem_id = "p1";
  p.language = lang;
  p.solutions = std::move(sols);
  return p;
}

// Character-by-character diff over the raw strings, skipping nothing.
std::optional<std::size_t> brute_first_diff(const std::string& a, const std::string& b) {
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (a[i] != b[i]) return i;
  }
  if (a.size() == b.size()) return std::nullopt;
  return std::min(a.size(), b.size());
}

}  // namespace

TEST_CASE("significant streams keep what matters per language") {
  CHECK(significant_stream("int x = 1;", Language::Java).chars == "intx=1;");
  CHECK(significant_stream("  return 1", Language::Python).chars == "  return1");
  CHECK(significant_stream("a\nb", Language::Python).chars == "a\nb");
  CHECK(significant_stream("a\n\n   \nb", Language::Python).chars == "a\nb");
  CHECK(significant_stream("a\r\n\tb  \n", Language::Python).chars == "a\n\tb");
  CHECK(significant_stream("a\n  b", Language::Java).chars == "ab");

  const SignificantStream s = significant_stream("a\n\n  b c", Language::Python);
  CHECK(s.origins == std::vector<std::size_t>{0, 1, 3, 4, 5, 7});
}

TEST_CASE("first_mismatch reports the first differing generated byte") {
  auto stream = [](const std::string& t) { return significant_stream(t, Language::Java); };
  const auto d = first_mismatch(stream("abc"), stream("abd"));
  REQUIRE(d.has_value());
  CHECK(d->offset == 2);
  CHECK_FALSE(d->end_of_generated);
  CHECK_FALSE(first_mismatch(stream("abc"), stream("abc")).has_value());
  const auto short_gen = first_mismatch(stream("ab"), stream("abc"));
  REQUIRE(short_gen.has_value());
  CHECK(short_gen->end_of_generated);
  const auto long_gen = first_mismatch(stream("abcd"), stream("abc"));
  REQUIRE(long_gen.has_value());
  CHECK(long_gen->offset == 3);
  CHECK_FALSE(long_gen->end_of_generated);
}

TEST_CASE("first_mismatch agrees with a brute-force diff on whitespace-free text") {
  Rng rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    std::string a, b;
    const std::size_t n = rng.below(12);
    for (std::size_t i = 0; i < n; ++i) a.push_back("abc"[rng.below(3)]);
    b = a.substr(0, rng.below(a.size() + 1));
    const std::size_t extra = rng.below(4);
    for (std::size_t i = 0; i < extra; ++i) b.push_back("abc"[rng.below(3)]);
    const auto got = first_mismatch(significant_stream(a, Language::Java),
                                    significant_stream(b, Language::Java));
    const auto want = brute_first_diff(a, b);
    REQUIRE(got.has_value() == want.has_value());
    if (got) {
      CHECK(got->offset == *want);
      CHECK(got->end_of_generated == (a.size() < b.size() && *want == a.size()));
    }
  }
}

TEST_CASE("figure one localizes to the comparison operator") {
  GenerationRecord r = make_record(hloc::testing::figure1_tokens(), Language::Python,
                                   hloc::testing::figure1_prefix());
  const CanonicalPool pool =
      pool_of(Language::Python, {"return all(i > j for i, j in zip(tup1, tup2))"});
  const HallucinationLabel label = localize(r, pool);
  CHECK_FALSE(label.matched);
  REQUIRE(label.index.has_value());
  CHECK(*label.index == 5);
  CHECK(r.tokens[*label.index - 1] == " <");
}

TEST_CASE("the label is the largest index over canonicals") {
  GenerationRecord r = make_record({"return", " f", "(", "1", ",", " 2", ",", " 3", ")"},
                                   Language::Python);
  const HallucinationLabel label =
      localize(r, pool_of(Language::Python, {"return f[1, 2, 3]", "return f(1, 2)"}));
  REQUIRE(label.per_canonical.size() == 2);
  CHECK(label.per_canonical[0].index == 3);
  CHECK(label.per_canonical[1].index == 7);
  CHECK(label.index == 7);
}

TEST_CASE("alpha-equivalent output matches") {
  GenerationRecord r = make_record({"for", " q", " in", " xs", ":", "\n", "    ", "print", "(q", ")"},
                                   Language::Python);
  const HallucinationLabel label =
      localize(r, pool_of(Language::Python, {"for z in xs:\n    print(z)", "return 0"}));
  CHECK(label.matched);
  CHECK_FALSE(label.index.has_value());
}

TEST_CASE("a generated prefix of the canonical blames the end token") {
  GenerationRecord with_eos = make_record({"return", " 1"}, Language::Python);
  CHECK(localize(with_eos, pool_of(Language::Python, {"return 1 + 2"})).index == 3);
  GenerationRecord no_eos = make_record({"return", " 1"}, Language::Python, {}, false);
  CHECK(localize(no_eos, pool_of(Language::Python, {"return 1 + 2"})).index == 2);
}

TEST_CASE("localize errors") {
  GenerationRecord r = make_record({"x"}, Language::Python);
  try {
    localize(r, pool_of(Language::Python, {}));
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("no canonical solutions for problem") != std::string::npos);
  }
  CHECK_THROWS_AS(localize(r, pool_of(Language::Java, {"x;"})), Error);
}

TEST_CASE("localize_all matches per-record localization for any job count") {
  CanonicalMap canon;
  canon["p1"] = pool_of(Language::Python, {"return all(i > j for i, j in zip(tup1, tup2))"});
  std::vector<GenerationRecord> recs;
  for (int i = 0; i < 12; ++i) {
    auto toks = hloc::testing::figure1_tokens();
    if (i % 3 != 0) toks[4] = " >";
    if (i % 3 == 2) toks[11] = " map";
    recs.push_back(make_record(toks, Language::Python, hloc::testing::figure1_prefix(), true,
                               "r" + std::to_string(i)));
  }
  const auto serial = localize_all(recs, canon, 1);
  const auto threaded = localize_all(recs, canon, 4);
  REQUIRE(serial.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto direct = localize(recs[i], canon.at("p1"));
    CHECK(serial[i].index == direct.index);
    CHECK(threaded[i].index == direct.index);
    CHECK(serial[i].matched == direct.matched);
  }
  CHECK(serial[0].index == 5);
  CHECK(serial[1].matched);
  CHECK(serial[2].index == 12);
}
