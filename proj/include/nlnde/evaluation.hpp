#ifndef NLNDE_EVALUATION_HPP
#define NLNDE_EVALUATION_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nlnde/corpus_io.hpp"

namespace nlnde {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0;
};

PRF prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

// Mentions per document id; gold and predictions must cover the same ids
// (ContractError otherwise — the CLI pre-checks and reports the difference).
using MentionSets = std::map<std::string, std::vector<Mention>>;

// Micro P/R/F1 with exact (start, end) matching; duplicate identical
// entries on either side count once.
PRF ner_prf(const MentionSets& gold, const MentionSets& predicted);

// As ner_prf but a match also requires an identical code. When
// exclude_code is set, mentions carrying that code are dropped from both
// sides first.
PRF norm_prf(const MentionSets& gold, const MentionSets& predicted,
             const std::optional<std::string>& exclude_code = std::nullopt);

// Sum over ranks holding a relevant code of precision-at-that-rank,
// divided by |gold|. Empty gold -> 0. Duplicate ranking entries are a
// ContractError.
double average_precision(const std::set<std::string>& gold,
                         const std::vector<std::string>& ranking);

// Unweighted mean AP over documents; every document counts, including
// those with empty gold sets.
double map_score(
    const std::vector<std::pair<std::set<std::string>, std::vector<std::string>>>&
        per_document);

struct LengthBucket {
  std::string key;  // "1".."10" or "11+"
  PRF prf;
  double frequency = 0.0;  // share of gold mentions in this bucket
};

// Buckets mentions by the token count of their surface. All 11 buckets are
// always present, in order.
std::vector<LengthBucket> length_report(const MentionSets& gold,
                                        const MentionSets& predicted);

}  // namespace nlnde

#endif  // NLNDE_EVALUATION_HPP
