#include <algorithm>
#include <string>
#include <vector>

#include "doctest.h"
#include "nlnde/errors.hpp"
#include "nlnde/normalizer.hpp"
#include "nlnde/tensor.hpp"
#include "nlnde/utf8.hpp"
#include "test_util.hpp"

using namespace nlnde;

namespace {

Mention coded(std::string surface, std::string code) {
  return Mention{0, 1, std::move(surface), "MORFOLOGIA", std::move(code)};
}

// Textbook three-way recursion; exponential, so inputs stay short.
std::size_t lev_recursive(const std::u32string& a, const std::u32string& b,
                          std::size_t i = 0, std::size_t j = 0) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  const std::size_t sub =
      lev_recursive(a, b, i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
  const std::size_t del = lev_recursive(a, b, i + 1, j) + 1;
  const std::size_t ins = lev_recursive(a, b, i, j + 1) + 1;
  return std::min({sub, del, ins});
}

std::u32string random_word(Rng& rng, std::size_t max_len) {
  static const std::u32string alphabet = U"abcáñ";
  std::u32string word;
  const std::size_t len = rng.index(max_len + 1);
  for (std::size_t i = 0; i < len; ++i) {
    word.push_back(alphabet[rng.index(alphabet.size())]);
  }
  return word;
}

}  // namespace

TEST_CASE("gazetteer construction counts codes per surface") {
  const Gazetteer g = build_gazetteer(std::vector<Mention>{
      coded("carcinoma", "8010/3"),
      coded("carcinoma", "8010/3"),
      coded("carcinoma", "8140/3"),
      coded("melanoma", "8720/3"),
  });
  CHECK_FALSE(g.empty());
  REQUIRE(g.exact().count("carcinoma") == 1);
  CHECK(g.exact().at("carcinoma").code == "8010/3");  // majority
  CHECK(g.exact().at("carcinoma").count == 2);
  CHECK(g.code_counts().at("8010/3") == 2);
  CHECK(g.code_counts().at("8140/3") == 1);
  CHECK(g.raw().at("carcinoma").at("8140/3") == 1);
}

TEST_CASE("per-surface code ties resolve to the smaller code") {
  const Gazetteer g = build_gazetteer(std::vector<Mention>{
      coded("nevus", "8720/0"),
      coded("nevus", "8000/0"),
  });
  CHECK(g.exact().at("nevus").code == "8000/0");
}

TEST_CASE("building from documents flattens their mentions") {
  Document d1{"a", "carcinoma", {coded("carcinoma", "8010/3")}};
  Document d2{"b", "melanoma", {coded("melanoma", "8720/3")}};
  const Gazetteer g = build_gazetteer(std::vector<Document>{d1, d2});
  CHECK(g.exact().size() == 2);
}

TEST_CASE("a training mention without a code breaks the contract") {
  CHECK_THROWS_AS(build_gazetteer(std::vector<Mention>{coded("carcinoma", "")}),
                  ContractError);
}

TEST_CASE("lookup walks exact, then lowercase, then edit distance") {
  const Gazetteer g = build_gazetteer(std::vector<Mention>{
      coded("Carcinoma ductal", "8500/3"),
      coded("melanoma", "8720/3"),
  });

  SUBCASE("exact surface hit") {
    const auto r = normalize(g, "Carcinoma ductal");
    CHECK(r.code == "8500/3");
    CHECK(r.method == MatchMethod::kExact);
    CHECK(r.distance == 0);
  }
  SUBCASE("case-folded hit") {
    const auto r = normalize(g, "CARCINOMA DUCTAL");
    CHECK(r.code == "8500/3");
    CHECK(r.method == MatchMethod::kLower);
    CHECK(r.distance == 0);
  }
  SUBCASE("fuzzy hit reports its distance") {
    const auto r = normalize(g, "melanomas");
    CHECK(r.code == "8720/3");
    CHECK(r.method == MatchMethod::kLevenshtein);
    CHECK(r.distance == 1);
  }
}

TEST_CASE("case variants pool their counts in the lowercase table") {
  const Gazetteer g = build_gazetteer(std::vector<Mention>{
      coded("Nevus", "1111/1"),
      coded("NEVUS", "2222/2"),
      coded("NEVUS", "2222/2"),
  });
  const auto r = normalize(g, "nevus");  // no exact entry in this casing
  CHECK(r.method == MatchMethod::kLower);
  CHECK(r.code == "2222/2");
}

TEST_CASE("equal-distance candidates prefer the globally frequent code") {
  SUBCASE("frequency decides") {
    const Gazetteer g = build_gazetteer(std::vector<Mention>{
        coded("aba", "222/2"),
        coded("aba", "222/2"),
        coded("aba", "222/2"),
        coded("abc", "111/1"),
    });
    const auto r = normalize(g, "abd");  // distance 1 to both surfaces
    CHECK(r.method == MatchMethod::kLevenshtein);
    CHECK(r.distance == 1);
    CHECK(r.code == "222/2");
  }
  SUBCASE("a frequency tie falls back to the smaller code") {
    const Gazetteer g = build_gazetteer(std::vector<Mention>{
        coded("aba", "222/2"),
        coded("abc", "111/1"),
    });
    CHECK(normalize(g, "abd").code == "111/1");
  }
}

TEST_CASE("normalizing against an empty gazetteer is a usage error") {
  CHECK_THROWS_AS(normalize(Gazetteer{}, "carcinoma"), ConfigError);
}

TEST_CASE("edit distance handles pinned cases over characters") {
  CHECK(levenshtein(std::string("kitten"), std::string("sitting")) == 3);
  CHECK(levenshtein(std::string(""), std::string("abc")) == 3);
  CHECK(levenshtein(std::string("abc"), std::string("")) == 3);
  CHECK(levenshtein(std::string("carcinoma"), std::string("carcinoma")) == 0);
  // One accented substitution is one edit, not the two a byte view would see.
  CHECK(levenshtein(std::string("áb"), std::string("ab")) == 1);
  CHECK(levenshtein(std::string("ñoño"), std::string("nono")) == 2);
}

TEST_CASE("edit distance agrees with the recursive definition") {
  Rng rng(29);
  for (int iter = 0; iter < 200; ++iter) {
    const std::u32string a = random_word(rng, 6);
    const std::u32string b = random_word(rng, 6);
    const std::size_t expected = lev_recursive(a, b);
    CHECK(levenshtein(a, b) == expected);
    CHECK(levenshtein(utf8::encode(a), utf8::encode(b)) == expected);
  }
}

TEST_CASE("edit distance satisfies the metric axioms") {
  Rng rng(31);
  for (int iter = 0; iter < 100; ++iter) {
    const std::u32string x = random_word(rng, 5);
    const std::u32string y = random_word(rng, 5);
    const std::u32string z = random_word(rng, 5);
    CHECK(levenshtein(x, x) == 0);
    CHECK(levenshtein(x, y) == levenshtein(y, x));
    CHECK(levenshtein(x, z) <= levenshtein(x, y) + levenshtein(y, z));
    if (x != y) CHECK(levenshtein(x, y) > 0);
  }
}

TEST_CASE("method names render for reports") {
  CHECK(std::string(method_name(MatchMethod::kExact)) == "exact");
  CHECK(std::string(method_name(MatchMethod::kLower)) == "lower");
  CHECK(std::string(method_name(MatchMethod::kLevenshtein)) == "levenshtein");
}

TEST_CASE("gazetteer files round-trip surfaces, codes and counts") {
  testutil::TempDir dir;
  const Gazetteer g = build_gazetteer(std::vector<Mention>{
      coded("carcinoma ductal", "8500/3"),
      coded("carcinoma ductal", "8500/3"),
      coded("carcinoma ductal", "8010/3"),
      coded("Melanoma", "8720/3"),
  });
  const auto path = dir / "gazetteer.tsv";
  save_gazetteer(g, path);
  const Gazetteer loaded = load_gazetteer(path);
  CHECK(loaded.raw() == g.raw());
  CHECK(loaded.code_counts() == g.code_counts());
  CHECK(normalize(loaded, "carcinoma ductal").code == "8500/3");
}

TEST_CASE("malformed gazetteer rows report their line number") {
  testutil::TempDir dir;
  const auto path = dir / "bad.tsv";

  SUBCASE("missing tab") {
    write_file(path, "carcinoma\t8010/3\t2\nmelanoma 8720/3 1\n");
    try {
      load_gazetteer(path);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("unparseable count") {
    write_file(path, "carcinoma\t8010/3\tdos\n");
    CHECK_THROWS_AS(load_gazetteer(path), ParseError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_gazetteer(dir / "nope.tsv"), ConfigError);
  }
}
