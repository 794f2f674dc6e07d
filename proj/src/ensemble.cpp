#include "nlnde/ensemble.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "nlnde/errors.hpp"

namespace nlnde {

std::vector<Mention> majority_vote(
    const std::vector<std::vector<Mention>>& predictions,
    const VoteConfig& config) {
  if (config.quorum < 1 || config.quorum > config.members) {
    throw ContractError("vote quorum must lie in [1, members]");
  }
  if (predictions.size() != config.members) {
    throw ContractError("expected " + std::to_string(config.members) +
                        " member prediction sets, got " +
                        std::to_string(predictions.size()));
  }

  using Key = std::pair<std::size_t, std::size_t>;
  std::map<Key, std::size_t> votes;
  std::map<Key, Mention> first_seen;
  for (const auto& member : predictions) {
    std::set<Key> seen;  // duplicates within one member count once
    for (const Mention& m : member) {
      const Key key{m.start, m.end};
      if (!seen.insert(key).second) continue;
      ++votes[key];
      first_seen.try_emplace(key, m);
    }
  }

  std::vector<Mention> out;
  for (const auto& [key, count] : votes) {
    if (count < config.quorum) continue;
    Mention m = first_seen.at(key);
    m.code.clear();
    out.push_back(std::move(m));
  }
  std::sort(out.begin(), out.end(), [](const Mention& a, const Mention& b) {
    return std::tie(a.start, a.end) < std::tie(b.start, b.end);
  });
  return out;
}

}  // namespace nlnde
