#ifndef NLNDE_ENSEMBLE_HPP
#define NLNDE_ENSEMBLE_HPP

#include <vector>

#include "nlnde/corpus_io.hpp"

namespace nlnde {

struct VoteConfig {
  std::size_t quorum = 2;
  std::size_t members = 3;
};

// Keeps a mention (identified by exact start/end offsets) iff at least
// `quorum` member sets contain it; surface and label come from the first
// agreeing member, codes are cleared (normalization runs downstream).
// ContractError when the member count disagrees with the config or the
// config is out of range (quorum must be in [1, members]).
std::vector<Mention> majority_vote(
    const std::vector<std::vector<Mention>>& predictions,
    const VoteConfig& config);

}  // namespace nlnde

#endif  // NLNDE_ENSEMBLE_HPP
