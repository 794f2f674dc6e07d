#ifndef NLNDE_CODER_HPP
#define NLNDE_CODER_HPP

#include <map>
#include <string>
#include <vector>

#include "nlnde/corpus_io.hpp"

namespace nlnde {

// Ranked list of the document's distinct codes, ordered by in-document
// mention count (desc), then global training count (desc, absent = 0),
// then code string (asc). Mentions must be normalized; an uncoded mention
// is a ContractError.
CodeRanking rank_codes(const std::string& doc_id,
                       const std::vector<Mention>& mentions,
                       const std::map<std::string, std::size_t>& global_counts);

}  // namespace nlnde

#endif  // NLNDE_CODER_HPP
