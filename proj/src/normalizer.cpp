#include "nlnde/normalizer.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>

#include "nlnde/errors.hpp"
#include "nlnde/utf8.hpp"

namespace nlnde {

namespace {

// Most frequent code wins; ties go to the lexicographically smallest code.
GazetteerEntry resolve(const std::map<std::string, std::size_t>& code_counts) {
  GazetteerEntry best;
  for (const auto& [code, count] : code_counts) {
    if (count > best.count) {  // map order makes the first max the smallest
      best.code = code;
      best.count = count;
    }
  }
  return best;
}

}  // namespace

Gazetteer::Gazetteer(
    std::map<std::string, std::map<std::string, std::size_t>>
        surface_code_counts)
    : raw_(std::move(surface_code_counts)) {
  std::map<std::string, std::map<std::string, std::size_t>> lower_counts;
  for (const auto& [surface, codes] : raw_) {
    exact_[surface] = resolve(codes);
    const std::string lowered =
        utf8::encode(utf8::to_lower(utf8::decode(surface)));
    for (const auto& [code, count] : codes) {
      lower_counts[lowered][code] += count;
      code_counts_[code] += count;
    }
  }
  for (const auto& [lowered, codes] : lower_counts) {
    lower_[lowered] = resolve(codes);
  }
}

Gazetteer build_gazetteer(const std::vector<Mention>& training_mentions) {
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  for (const Mention& m : training_mentions) {
    if (m.code.empty()) {
      throw ContractError("training mention '" + m.surface +
                          "' carries no code");
    }
    ++counts[m.surface][m.code];
  }
  return Gazetteer(std::move(counts));
}

Gazetteer build_gazetteer(const std::vector<Document>& training_docs) {
  std::vector<Mention> mentions;
  for (const Document& doc : training_docs) {
    mentions.insert(mentions.end(), doc.mentions.begin(), doc.mentions.end());
  }
  return build_gazetteer(mentions);
}

std::size_t levenshtein(const std::u32string& a, const std::u32string& b) {
  const std::size_t n = b.size();
  std::vector<std::size_t> prev(n + 1), cur(n + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
  return levenshtein(utf8::decode(a), utf8::decode(b));
}

NormalizationResult normalize(const Gazetteer& gazetteer,
                              const std::string& surface) {
  if (gazetteer.empty()) {
    throw ConfigError("cannot normalize with an empty gazetteer");
  }
  if (auto it = gazetteer.exact().find(surface);
      it != gazetteer.exact().end()) {
    return {it->second.code, MatchMethod::kExact, 0};
  }
  const std::u32string lowered = utf8::to_lower(utf8::decode(surface));
  const std::string lowered_utf8 = utf8::encode(lowered);
  if (auto it = gazetteer.lower().find(lowered_utf8);
      it != gazetteer.lower().end()) {
    return {it->second.code, MatchMethod::kLower, 0};
  }

  std::size_t best_distance = std::numeric_limits<std::size_t>::max();
  const GazetteerEntry* best = nullptr;
  for (const auto& [entry_surface, entry] : gazetteer.lower()) {
    const std::u32string candidate = utf8::decode(entry_surface);
    const std::size_t len_gap = candidate.size() > lowered.size()
                                    ? candidate.size() - lowered.size()
                                    : lowered.size() - candidate.size();
    if (len_gap > best_distance) continue;  // distance >= length difference
    const std::size_t d = levenshtein(lowered, candidate);
    if (d > best_distance) continue;
    if (d < best_distance || best == nullptr) {
      best_distance = d;
      best = &entry;
      continue;
    }
    // Equal distance: prefer the globally more frequent code, then the
    // lexicographically smaller one.
    const std::size_t held = gazetteer.code_counts().at(best->code);
    const std::size_t contender = gazetteer.code_counts().at(entry.code);
    if (contender > held || (contender == held && entry.code < best->code)) {
      best = &entry;
    }
  }
  return {best->code, MatchMethod::kLevenshtein, best_distance};
}

const char* method_name(MatchMethod method) {
  switch (method) {
    case MatchMethod::kExact: return "exact";
    case MatchMethod::kLower: return "lower";
    case MatchMethod::kLevenshtein: return "levenshtein";
  }
  return "unknown";
}

void save_gazetteer(const Gazetteer& gazetteer,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write gazetteer: " + path.string());
  for (const auto& [surface, codes] : gazetteer.raw()) {
    for (const auto& [code, count] : codes) {
      out << surface << '\t' << code << '\t' << count << '\n';
    }
  }
}

Gazetteer load_gazetteer(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open gazetteer: " + path.string());
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw ParseError(line_no, "expected 'surface<TAB>code<TAB>count'");
    }
    try {
      counts[line.substr(0, tab1)][line.substr(tab1 + 1, tab2 - tab1 - 1)] +=
          std::stoull(line.substr(tab2 + 1));
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad count in gazetteer row");
    }
  }
  return Gazetteer(std::move(counts));
}

}  // namespace nlnde
