#include "nlnde/evaluation.hpp"

#include <algorithm>

#include "nlnde/errors.hpp"

namespace nlnde {

namespace {

void check_same_documents(const MentionSets& gold, const MentionSets& pred) {
  if (gold.size() == pred.size() &&
      std::equal(gold.begin(), gold.end(), pred.begin(),
                 [](const auto& a, const auto& b) { return a.first == b.first; }))
    return;
  std::string diff;
  for (const auto& [id, mentions] : gold) {
    if (!pred.contains(id)) diff += " -" + id;
  }
  for (const auto& [id, mentions] : pred) {
    if (!gold.contains(id)) diff += " +" + id;
  }
  throw ContractError("document sets differ:" + diff);
}

template <typename Key, typename MakeKey>
PRF micro_prf(const MentionSets& gold, const MentionSets& pred,
              const MakeKey& make_key) {
  check_same_documents(gold, pred);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& [id, gold_mentions] : gold) {
    std::set<Key> gold_keys, pred_keys;
    for (const Mention& m : gold_mentions) {
      if (auto k = make_key(m)) gold_keys.insert(*k);
    }
    for (const Mention& m : pred.at(id)) {
      if (auto k = make_key(m)) pred_keys.insert(*k);
    }
    for (const Key& k : pred_keys) {
      gold_keys.contains(k) ? ++tp : ++fp;
    }
    for (const Key& k : gold_keys) {
      if (!pred_keys.contains(k)) ++fn;
    }
  }
  return prf_from_counts(tp, fp, fn);
}

std::string bucket_key(std::size_t token_count) {
  if (token_count > 10) return "11+";
  return std::to_string(std::max<std::size_t>(1, token_count));
}

}  // namespace

PRF prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  PRF out;
  out.tp = tp;
  out.fp = fp;
  out.fn = fn;
  out.precision = tp + fp == 0 ? 0.0
                               : static_cast<double>(tp) /
                                     static_cast<double>(tp + fp);
  out.recall = tp + fn == 0 ? 0.0
                            : static_cast<double>(tp) /
                                  static_cast<double>(tp + fn);
  out.f1 = out.precision + out.recall == 0.0
               ? 0.0
               : 2.0 * out.precision * out.recall /
                     (out.precision + out.recall);
  return out;
}

PRF ner_prf(const MentionSets& gold, const MentionSets& predicted) {
  using Key = std::pair<std::size_t, std::size_t>;
  return micro_prf<Key>(gold, predicted,
                        [](const Mention& m) -> std::optional<Key> {
                          return Key{m.start, m.end};
                        });
}

PRF norm_prf(const MentionSets& gold, const MentionSets& predicted,
             const std::optional<std::string>& exclude_code) {
  using Key = std::tuple<std::size_t, std::size_t, std::string>;
  return micro_prf<Key>(
      gold, predicted, [&](const Mention& m) -> std::optional<Key> {
        if (exclude_code && m.code == *exclude_code) return std::nullopt;
        return Key{m.start, m.end, m.code};
      });
}

double average_precision(const std::set<std::string>& gold,
                         const std::vector<std::string>& ranking) {
  std::set<std::string> seen;
  for (const std::string& code : ranking) {
    if (!seen.insert(code).second) {
      throw ContractError("ranking contains duplicate code '" + code + "'");
    }
  }
  if (gold.empty()) return 0.0;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    if (gold.contains(ranking[k])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return sum / static_cast<double>(gold.size());
}

double map_score(
    const std::vector<std::pair<std::set<std::string>, std::vector<std::string>>>&
        per_document) {
  if (per_document.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [gold, ranking] : per_document) {
    sum += average_precision(gold, ranking);
  }
  return sum / static_cast<double>(per_document.size());
}

std::vector<LengthBucket> length_report(const MentionSets& gold,
                                        const MentionSets& predicted) {
  check_same_documents(gold, predicted);

  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0, gold_total = 0;
  };
  std::map<std::string, Counts> buckets;
  std::size_t all_gold = 0;

  using Key = std::pair<std::size_t, std::size_t>;
  for (const auto& [id, gold_mentions] : gold) {
    std::map<Key, std::string> gold_keys, pred_keys;  // key -> bucket
    for (const Mention& m : gold_mentions) {
      gold_keys.try_emplace(Key{m.start, m.end},
                            bucket_key(tokenize(m.surface).size()));
    }
    for (const Mention& m : predicted.at(id)) {
      pred_keys.try_emplace(Key{m.start, m.end},
                            bucket_key(tokenize(m.surface).size()));
    }
    for (const auto& [key, bucket] : gold_keys) {
      ++buckets[bucket].gold_total;
      ++all_gold;
      if (!pred_keys.contains(key)) ++buckets[bucket].fn;
    }
    for (const auto& [key, bucket] : pred_keys) {
      gold_keys.contains(key) ? ++buckets[bucket].tp : ++buckets[bucket].fp;
    }
  }

  std::vector<LengthBucket> out;
  for (std::size_t n = 1; n <= 11; ++n) {
    const std::string key = n == 11 ? "11+" : std::to_string(n);
    const Counts c = buckets.count(key) ? buckets.at(key) : Counts{};
    LengthBucket bucket;
    bucket.key = key;
    bucket.prf = prf_from_counts(c.tp, c.fp, c.fn);
    bucket.frequency = all_gold == 0 ? 0.0
                                     : static_cast<double>(c.gold_total) /
                                           static_cast<double>(all_gold);
    out.push_back(std::move(bucket));
  }
  return out;
}

}  // namespace nlnde
