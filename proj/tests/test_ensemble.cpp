#include <algorithm>
#include <set>
#include <utility>
#include <vector>

#include "doctest.h"
#include "nlnde/ensemble.hpp"
#include "nlnde/errors.hpp"
#include "nlnde/tensor.hpp"

using namespace nlnde;

namespace {

Mention m(std::size_t start, std::size_t end, std::string surface = "x",
          std::string label = "MORFOLOGIA", std::string code = "") {
  return Mention{start, end, std::move(surface), std::move(label),
                 std::move(code)};
}

std::set<std::pair<std::size_t, std::size_t>> keys(
    const std::vector<Mention>& mentions) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (const Mention& x : mentions) out.emplace(x.start, x.end);
  return out;
}

std::vector<std::vector<Mention>> random_members(Rng& rng, std::size_t n) {
  std::vector<std::vector<Mention>> members(n);
  for (auto& member : members) {
    const std::size_t picks = rng.index(6);
    for (std::size_t i = 0; i < picks; ++i) {
      const std::size_t start = rng.index(8);
      member.push_back(m(start, start + 1 + rng.index(4)));
    }
  }
  return members;
}

}  // namespace

TEST_CASE("two of three members carry a mention through") {
  const std::vector<std::vector<Mention>> preds = {
      {m(0, 5), m(10, 14)},
      {m(0, 5)},
      {m(20, 24), m(10, 14)},
  };
  const auto out = majority_vote(preds, VoteConfig{2, 3});
  REQUIRE(out.size() == 2);
  CHECK(out[0].start == 0);
  CHECK(out[0].end == 5);
  CHECK(out[1].start == 10);
  CHECK(out[1].end == 14);
}

TEST_CASE("a single vote is not enough at the default quorum") {
  const std::vector<std::vector<Mention>> preds = {
      {m(0, 5)},
      {m(6, 9)},
      {m(12, 15)},
  };
  CHECK(majority_vote(preds, VoteConfig{2, 3}).empty());
}

TEST_CASE("unanimity keeps exactly the shared mention") {
  const std::vector<std::vector<Mention>> preds = {
      {m(0, 5), m(7, 9)},
      {m(0, 5), m(11, 13)},
      {m(0, 5)},
  };
  const auto out = majority_vote(preds, VoteConfig{3, 3});
  REQUIRE(out.size() == 1);
  CHECK(out[0].start == 0);
  CHECK(out[0].end == 5);
}

TEST_CASE("surface and label come from the first agreeing member") {
  const std::vector<std::vector<Mention>> preds = {
      {m(3, 8, "primero", "MORFOLOGIA")},
      {m(0, 2, "otro", "OTRA")},
      {m(3, 8, "segundo", "OTRA")},
  };
  const auto out = majority_vote(preds, VoteConfig{2, 3});
  REQUIRE(out.size() == 1);
  CHECK(out[0].surface == "primero");
  CHECK(out[0].label == "MORFOLOGIA");
}

TEST_CASE("voting clears any codes the members attached") {
  const std::vector<std::vector<Mention>> preds = {
      {m(0, 4, "x", "M", "8140/3")},
      {m(0, 4, "x", "M", "8000/1")},
  };
  const auto out = majority_vote(preds, VoteConfig{2, 2});
  REQUIRE(out.size() == 1);
  CHECK(out[0].code.empty());
}

TEST_CASE("duplicates inside one member count once") {
  const std::vector<std::vector<Mention>> preds = {
      {m(0, 4), m(0, 4)},
      {m(5, 9)},
  };
  CHECK(majority_vote(preds, VoteConfig{2, 2}).empty());
}

TEST_CASE("output is ordered by offsets regardless of member order") {
  const std::vector<std::vector<Mention>> preds = {
      {m(30, 35), m(2, 7)},
      {m(2, 7), m(30, 35)},
  };
  const auto out = majority_vote(preds, VoteConfig{2, 2});
  REQUIRE(out.size() == 2);
  CHECK(out[0].start == 2);
  CHECK(out[1].start == 30);
}

TEST_CASE("member-count and quorum contracts are enforced") {
  const std::vector<std::vector<Mention>> two = {{m(0, 1)}, {m(0, 1)}};
  CHECK_THROWS_AS(majority_vote(two, VoteConfig{2, 3}), ContractError);
  CHECK_THROWS_AS(majority_vote(two, VoteConfig{0, 2}), ContractError);
  CHECK_THROWS_AS(majority_vote(two, VoteConfig{3, 2}), ContractError);
}

TEST_CASE("vote outcome sits between intersection and union") {
  Rng rng(17);
  for (int iter = 0; iter < 200; ++iter) {
    const std::size_t members = 2 + rng.index(3);
    const auto preds = random_members(rng, members);
    std::set<std::pair<std::size_t, std::size_t>> uni;
    auto inter = keys(preds[0]);
    for (const auto& member : preds) {
      const auto k = keys(member);
      uni.insert(k.begin(), k.end());
      std::set<std::pair<std::size_t, std::size_t>> next;
      std::set_intersection(inter.begin(), inter.end(), k.begin(), k.end(),
                            std::inserter(next, next.begin()));
      inter = std::move(next);
    }

    const std::size_t quorum = 1 + rng.index(members);
    const auto voted = keys(majority_vote(preds, VoteConfig{quorum, members}));
    CHECK(std::includes(voted.begin(), voted.end(), inter.begin(), inter.end()));
    CHECK(std::includes(uni.begin(), uni.end(), voted.begin(), voted.end()));

    // The extremes collapse to the set operations themselves.
    CHECK(keys(majority_vote(preds, VoteConfig{members, members})) == inter);
    CHECK(keys(majority_vote(preds, VoteConfig{1, members})) == uni);
  }
}

TEST_CASE("repeating a member can only add mentions at fixed quorum") {
  Rng rng(23);
  for (int iter = 0; iter < 100; ++iter) {
    auto preds = random_members(rng, 2);
    const auto before = keys(majority_vote(preds, VoteConfig{2, 2}));
    preds.push_back(preds[0]);
    const auto after = keys(majority_vote(preds, VoteConfig{2, 3}));
    CHECK(std::includes(after.begin(), after.end(), before.begin(),
                        before.end()));
  }
}
