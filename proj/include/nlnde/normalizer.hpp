#ifndef NLNDE_NORMALIZER_HPP
#define NLNDE_NORMALIZER_HPP

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nlnde/corpus_io.hpp"

namespace nlnde {

struct GazetteerEntry {
  std::string code;
  std::size_t count = 0;

  friend bool operator==(const GazetteerEntry&, const GazetteerEntry&) = default;
};

// Training-surface dictionary backing the three-stage matching cascade.
// An ambiguous surface (several codes) resolves to its most frequent code,
// ties to the lexicographically smallest. The raw (surface, code) -> count
// triples are retained so serialization loses nothing.
class Gazetteer {
 public:
  Gazetteer() = default;
  explicit Gazetteer(std::map<std::string, std::map<std::string, std::size_t>>
                         surface_code_counts);

  bool empty() const { return raw_.empty(); }
  const std::map<std::string, GazetteerEntry>& exact() const { return exact_; }
  const std::map<std::string, GazetteerEntry>& lower() const { return lower_; }
  // code -> total training mention count
  const std::map<std::string, std::size_t>& code_counts() const {
    return code_counts_;
  }
  const std::map<std::string, std::map<std::string, std::size_t>>& raw() const {
    return raw_;
  }

 private:
  std::map<std::string, std::map<std::string, std::size_t>> raw_;
  std::map<std::string, GazetteerEntry> exact_;
  std::map<std::string, GazetteerEntry> lower_;
  std::map<std::string, std::size_t> code_counts_;
};

// ContractError when a mention carries no code.
Gazetteer build_gazetteer(const std::vector<Mention>& training_mentions);
Gazetteer build_gazetteer(const std::vector<Document>& training_docs);

// Unit-cost edit distance over Unicode scalar values.
std::size_t levenshtein(const std::string& a, const std::string& b);
std::size_t levenshtein(const std::u32string& a, const std::u32string& b);

enum class MatchMethod { kExact, kLower, kLevenshtein };

struct NormalizationResult {
  std::string code;
  MatchMethod method = MatchMethod::kExact;
  std::size_t distance = 0;

  friend bool operator==(const NormalizationResult&,
                         const NormalizationResult&) = default;
};

// Stage 1: verbatim lookup. Stage 2: lowercased lookup. Stage 3: nearest
// lowercased training surface by edit distance, ties broken by higher
// global code count, then lexicographically smaller code. Always yields a
// code; ConfigError on an empty gazetteer.
NormalizationResult normalize(const Gazetteer& gazetteer,
                              const std::string& surface);

const char* method_name(MatchMethod method);

// TSV rows `surface<TAB>code<TAB>count`, one per raw triple.
void save_gazetteer(const Gazetteer& gazetteer,
                    const std::filesystem::path& path);
Gazetteer load_gazetteer(const std::filesystem::path& path);

}  // namespace nlnde

#endif  // NLNDE_NORMALIZER_HPP
