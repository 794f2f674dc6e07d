#include "nlnde/coder.hpp"

#include <algorithm>

#include "nlnde/errors.hpp"

namespace nlnde {

CodeRanking rank_codes(
    const std::string& doc_id, const std::vector<Mention>& mentions,
    const std::map<std::string, std::size_t>& global_counts) {
  std::map<std::string, std::size_t> in_doc;
  for (const Mention& m : mentions) {
    if (m.code.empty()) {
      throw ContractError("mention '" + m.surface +
                          "' has no code; normalize before ranking");
    }
    ++in_doc[m.code];
  }

  CodeRanking ranking;
  ranking.doc_id = doc_id;
  for (const auto& [code, count] : in_doc) ranking.codes.push_back(code);

  const auto global = [&](const std::string& code) {
    auto it = global_counts.find(code);
    return it == global_counts.end() ? std::size_t{0} : it->second;
  };
  std::sort(ranking.codes.begin(), ranking.codes.end(),
            [&](const std::string& a, const std::string& b) {
              if (in_doc[a] != in_doc[b]) return in_doc[a] > in_doc[b];
              if (global(a) != global(b)) return global(a) > global(b);
              return a < b;
            });
  return ranking;
}

}  // namespace nlnde
