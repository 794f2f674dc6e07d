#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "nlnde/coder.hpp"
#include "nlnde/errors.hpp"
#include "nlnde/tensor.hpp"

using namespace nlnde;

namespace {

Mention coded(std::string code) {
  return Mention{0, 1, "x", "MORFOLOGIA", std::move(code)};
}

std::vector<Mention> mentions_for(const std::vector<std::string>& codes) {
  std::vector<Mention> out;
  for (const auto& c : codes) out.push_back(coded(c));
  return out;
}

}  // namespace

TEST_CASE("codes rank by how often they appear in the document") {
  const auto ranking = rank_codes(
      "doc1", mentions_for({"8000/1", "8140/3", "8140/3", "8140/3", "8000/1"}),
      {});
  CHECK(ranking.doc_id == "doc1");
  CHECK(ranking.codes == std::vector<std::string>{"8140/3", "8000/1"});
}

TEST_CASE("in-document ties break on global training frequency") {
  const std::map<std::string, std::size_t> global = {{"8000/1", 7},
                                                     {"8140/3", 2}};
  const auto ranking =
      rank_codes("d", mentions_for({"8140/3", "8000/1"}), global);
  CHECK(ranking.codes == std::vector<std::string>{"8000/1", "8140/3"});
}

TEST_CASE("codes unseen in training count as zero globally") {
  const std::map<std::string, std::size_t> global = {{"8000/1", 1}};
  const auto ranking =
      rank_codes("d", mentions_for({"9999/9", "8000/1"}), global);
  CHECK(ranking.codes == std::vector<std::string>{"8000/1", "9999/9"});
}

TEST_CASE("full ties fall back to the lexicographically smaller code") {
  const auto ranking = rank_codes("d", mentions_for({"B200/1", "A100/1"}), {});
  CHECK(ranking.codes == std::vector<std::string>{"A100/1", "B200/1"});
}

TEST_CASE("duplicate codes collapse into one ranked entry") {
  const auto ranking =
      rank_codes("d", mentions_for({"8000/1", "8000/1", "8000/1"}), {});
  CHECK(ranking.codes == std::vector<std::string>{"8000/1"});
}

TEST_CASE("a document without mentions yields an empty ranking") {
  const auto ranking = rank_codes("d", {}, {{"8000/1", 3}});
  CHECK(ranking.codes.empty());
}

TEST_CASE("an uncoded mention breaks the contract") {
  CHECK_THROWS_AS(rank_codes("d", {Mention{0, 1, "x", "M", ""}}, {}),
                  ContractError);
}

TEST_CASE("the ranking ignores mention order") {
  Rng rng(37);
  const std::vector<std::string> codes = {"8140/3", "8000/1", "8140/3",
                                          "9050/3", "8000/1", "8140/3",
                                          "8720/3", "9050/3"};
  const std::map<std::string, std::size_t> global = {{"8720/3", 5},
                                                     {"9050/3", 1}};
  const auto reference = rank_codes("d", mentions_for(codes), global);
  REQUIRE(reference.codes ==
          std::vector<std::string>{"8140/3", "9050/3", "8000/1", "8720/3"});

  std::vector<std::string> shuffled = codes;
  for (int iter = 0; iter < 20; ++iter) {
    rng.shuffle(shuffled);
    CHECK(rank_codes("d", mentions_for(shuffled), global).codes ==
          reference.codes);
  }
}
