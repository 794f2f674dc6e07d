#include "nlnde/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "nlnde/errors.hpp"
#include "nlnde/utf8.hpp"

namespace nlnde {

// ---- StaticTableProvider ---------------------------------------------------

StaticTableProvider::StaticTableProvider(
    std::string name, std::map<std::string, std::vector<double>> table,
    std::size_t dim, OovPolicy policy)
    : EmbeddingProvider(std::move(name), dim),
      table_(std::move(table)),
      policy_(policy) {
  for (const auto& [word, vec] : table_) {
    if (vec.size() != dim_) {
      throw DimensionError("vector for '" + word + "' has size " +
                           std::to_string(vec.size()) + ", expected " +
                           std::to_string(dim_));
    }
  }
}

void StaticTableProvider::attach_unk(ParameterStore& store, Rng& rng) {
  if (policy_ != OovPolicy::kTrainedUnk) {
    throw ContractError("attach_unk on a zero-OOV provider");
  }
  unk_ = store.create_glorot(name_ + ".unk", {dim_}, rng);
}

Tensor StaticTableProvider::embed(const std::string& word) const {
  auto it = table_.find(word);
  if (it != table_.end()) {
    return Tensor::constant({dim_}, it->second);
  }
  if (policy_ == OovPolicy::kTrainedUnk) {
    if (unk_.size() == 0) {
      throw ContractError("trained-UNK provider '" + name_ +
                          "' used before attach_unk");
    }
    return unk_;
  }
  return Tensor::zeros({dim_});
}

// ---- TrainableTableProvider ------------------------------------------------

TrainableTableProvider::TrainableTableProvider(
    std::string name, std::size_t dim, const std::vector<std::string>& vocab,
    ParameterStore& store, Rng& rng)
    : EmbeddingProvider(std::move(name), dim) {
  std::set<std::string> unique(vocab.begin(), vocab.end());
  std::size_t next = 0;
  for (const auto& word : unique) index_[word] = next++;
  table_ = store.create_glorot(name_ + ".table", {unique.size() + 1, dim_}, rng);
}

Tensor TrainableTableProvider::embed(const std::string& word) const {
  auto it = index_.find(word);
  const std::size_t r = it != index_.end() ? it->second : table_.rows() - 1;
  return row(table_, r);
}

// ---- CharBiLstmProvider ----------------------------------------------------

CharBiLstmProvider::CharBiLstmProvider(std::string name, std::size_t hidden,
                                       const std::u32string& alphabet,
                                       ParameterStore& store, Rng& rng)
    : EmbeddingProvider(std::move(name), 2 * hidden), hidden_(hidden) {
  std::size_t next = 1;  // row 0 stays the unknown-character vector
  for (char32_t c : alphabet) {
    if (!index_.contains(c)) index_[c] = next++;
  }
  chars_ = store.create_glorot(name_ + ".chars", {next, hidden}, rng);
  for (std::size_t dir = 0; dir < 2; ++dir) {
    const std::string base = name_ + (dir == 0 ? ".fwd" : ".bwd");
    LstmCellParams cell;
    cell.w = store.create_glorot(base + ".w", {4 * hidden, hidden}, rng);
    cell.u = store.create_glorot(base + ".u", {4 * hidden, hidden}, rng);
    std::vector<double> bias(4 * hidden, 0.0);
    for (std::size_t k = hidden; k < 2 * hidden; ++k) bias[k] = 1.0;
    cell.b = store.create(base + ".b", {4 * hidden}, std::move(bias));
    (dir == 0 ? fwd_ : bwd_) = std::move(cell);
  }
}

Tensor CharBiLstmProvider::embed(const std::string& word) const {
  const std::u32string chars = utf8::decode(word);
  if (chars.empty()) return Tensor::zeros({dim_});
  std::vector<Tensor> xs;
  xs.reserve(chars.size());
  for (char32_t c : chars) {
    auto it = index_.find(c);
    xs.push_back(row(chars_, it != index_.end() ? it->second : 0));
  }
  Tensor states[2];
  for (std::size_t dir = 0; dir < 2; ++dir) {
    const LstmCellParams& cell = dir == 0 ? fwd_ : bwd_;
    Tensor h_t = Tensor::zeros({hidden_});
    Tensor c_t = Tensor::zeros({hidden_});
    for (std::size_t step = 0; step < xs.size(); ++step) {
      const std::size_t pos = dir == 0 ? step : xs.size() - 1 - step;
      std::tie(h_t, c_t) = lstm_step(cell, xs[pos], h_t, c_t);
    }
    states[dir] = h_t;
  }
  return concat({states[0], states[1]});
}

// ---- vector files ----------------------------------------------------------

std::unique_ptr<StaticTableProvider> load_vectors(
    const std::filesystem::path& path, OovPolicy policy) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open vector file: " + path.string());
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw ParseError(1, "empty vector file");
  ++line_no;
  std::istringstream header(line);
  std::size_t vocab_size = 0, dim = 0;
  if (!(header >> vocab_size >> dim) || dim == 0) {
    throw ParseError(line_no, "expected header 'vocab_size dim'");
  }

  std::map<std::string, std::vector<double>> table;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row_in(line);
    std::string word;
    row_in >> word;
    std::vector<double> vec;
    vec.reserve(dim);
    double v = 0.0;
    while (row_in >> v) vec.push_back(v);
    if (vec.size() != dim) {
      throw ParseError(line_no, "vector for '" + word + "' has " +
                                    std::to_string(vec.size()) +
                                    " values, expected " + std::to_string(dim));
    }
    table[word] = std::move(vec);  // later duplicates overwrite earlier ones
  }
  (void)vocab_size;  // header count is advisory; rows are authoritative
  return std::make_unique<StaticTableProvider>(path.stem().string(),
                                               std::move(table), dim, policy);
}

void save_vectors(const StaticTableProvider& provider,
                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write vector file: " + path.string());
  out << provider.table().size() << ' ' << provider.dim() << '\n';
  out << std::setprecision(17);
  for (const auto& [word, vec] : provider.table()) {
    out << word;
    for (double v : vec) out << ' ' << v;
    out << '\n';
  }
}

Tensor embed_concat(
    const std::vector<std::shared_ptr<EmbeddingProvider>>& providers,
    const std::string& word) {
  std::vector<Tensor> parts;
  parts.reserve(providers.size());
  for (const auto& p : providers) parts.push_back(p->embed(word));
  return concat(parts);
}

// ---- word features ---------------------------------------------------------

WordFeatures compute_word_features(const std::string& word,
                                   const FrequencyTable& freqs) {
  const std::u32string chars = utf8::decode(word);
  bool any_digit = false, any_alpha = false, any_other = false;
  bool all_lower = true, all_upper = true;
  for (char32_t c : chars) {
    if (utf8::is_digit(c)) {
      any_digit = true;
    } else if (utf8::is_alpha(c)) {
      any_alpha = true;
      if (!utf8::is_lower(c)) all_lower = false;
      if (!utf8::is_upper(c)) all_upper = false;
    } else {
      any_other = true;
    }
  }

  WordFeatures f;
  if (any_digit) {
    f.shape_class = ShapeClass::kHasDigit;
  } else if (!any_alpha) {
    f.shape_class = ShapeClass::kOther;
  } else if (any_other) {
    f.shape_class = ShapeClass::kMixed;
  } else if (all_lower) {
    f.shape_class = ShapeClass::kAllLower;
  } else if (all_upper) {
    f.shape_class = ShapeClass::kAllUpper;
  } else if (utf8::is_upper(chars.front())) {
    bool rest_lower = true;
    for (std::size_t i = 1; i < chars.size(); ++i) {
      if (!utf8::is_lower(chars[i])) rest_lower = false;
    }
    f.shape_class = rest_lower ? ShapeClass::kInitCap : ShapeClass::kMixed;
  } else {
    f.shape_class = ShapeClass::kMixed;
  }

  auto it = freqs.find(word);
  const std::size_t count = it != freqs.end() ? it->second : 0;
  f.freq_bin = std::min<std::size_t>(
      kFreqBins - 1,
      static_cast<std::size_t>(std::floor(std::log2(1.0 + count))));
  f.length_bin = std::min(kLengthBins - 1, chars.size());
  return f;
}

FrequencyTable build_frequency_table(const std::vector<Document>& docs) {
  FrequencyTable freqs;
  for (const auto& doc : docs) {
    for (const auto& token : tokenize(doc.text)) ++freqs[token.text];
  }
  return freqs;
}

// ---- MetaEmbedder ----------------------------------------------------------

MetaEmbedder::MetaEmbedder(std::vector<std::size_t> provider_dims,
                           ParameterStore& store, Rng& rng,
                           const std::string& prefix)
    : dims_(std::move(provider_dims)) {
  if (dims_.empty()) throw ContractError("meta-embedder needs >= 1 provider");
  e_dim_ = *std::max_element(dims_.begin(), dims_.end());
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const std::string base = prefix + ".p" + std::to_string(i);
    q_.push_back(store.create_glorot(base + ".q", {e_dim_, dims_[i]}, rng));
    b_.push_back(store.create_zeros(base + ".b", {e_dim_}));
  }
  att_w_ = store.create_glorot(prefix + ".att.w", {kAttentionDim, e_dim_}, rng);
  att_v_ = store.create_glorot(prefix + ".att.v", {kAttentionDim}, rng);
  shape_emb_ = store.create_glorot(prefix + ".feat.shape",
                                   {kShapeClassCount, kAttentionDim}, rng);
  freq_emb_ = store.create_glorot(prefix + ".feat.freq",
                                  {kFreqBins, kAttentionDim}, rng);
  len_emb_ = store.create_glorot(prefix + ".feat.len",
                                 {kLengthBins, kAttentionDim}, rng);
}

MetaEmbedder::Result MetaEmbedder::combine(
    const std::vector<Tensor>& embeddings, const WordFeatures& features) const {
  if (embeddings.size() != dims_.size()) {
    throw DimensionError("meta-embedder got " +
                         std::to_string(embeddings.size()) + " inputs for " +
                         std::to_string(dims_.size()) + " providers");
  }
  const Tensor f_w =
      add(add(row(shape_emb_, static_cast<std::size_t>(features.shape_class)),
              row(freq_emb_, features.freq_bin)),
          row(len_emb_, features.length_bin));

  std::vector<Tensor> projected;
  std::vector<Tensor> scores;
  projected.reserve(dims_.size());
  scores.reserve(dims_.size());
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (embeddings[i].size() != dims_[i]) {
      throw DimensionError("provider " + std::to_string(i) + " vector has " +
                           std::to_string(embeddings[i].size()) +
                           " values, expected " + std::to_string(dims_[i]));
    }
    Tensor x_i = tanh(affine(embeddings[i], q_[i], b_[i]));
    scores.push_back(dot(att_v_, tanh(add(matvec(att_w_, x_i), f_w))));
    projected.push_back(std::move(x_i));
  }

  Result out;
  out.weights = softmax(concat(scores));
  Tensor meta = smul(projected[0], pick(out.weights, 0));
  for (std::size_t i = 1; i < projected.size(); ++i) {
    meta = add(meta, smul(projected[i], pick(out.weights, i)));
  }
  out.meta = std::move(meta);
  return out;
}

// ---- EmbeddingStack --------------------------------------------------------

EmbeddingStack::EmbeddingStack(
    std::vector<std::shared_ptr<EmbeddingProvider>> providers, CombineMode mode,
    FrequencyTable freqs, ParameterStore& store, Rng& rng)
    : providers_(std::move(providers)), mode_(mode), freqs_(std::move(freqs)) {
  if (providers_.empty()) {
    throw ContractError("embedding stack needs >= 1 provider");
  }
  if (mode_ == CombineMode::kMeta) {
    std::vector<std::size_t> dims;
    dims.reserve(providers_.size());
    for (const auto& p : providers_) dims.push_back(p->dim());
    meta_ = std::make_unique<MetaEmbedder>(std::move(dims), store, rng);
    output_dim_ = meta_->output_dim();
  } else {
    for (const auto& p : providers_) output_dim_ += p->dim();
  }
}

Tensor EmbeddingStack::embed(const std::string& word) const {
  if (mode_ == CombineMode::kConcat) return embed_concat(providers_, word);
  std::vector<Tensor> parts;
  parts.reserve(providers_.size());
  for (const auto& p : providers_) parts.push_back(p->embed(word));
  return meta_->combine(parts, compute_word_features(word, freqs_)).meta;
}

Tensor EmbeddingStack::embed_sentence(const std::vector<Token>& tokens) const {
  std::vector<Tensor> rows;
  rows.reserve(tokens.size());
  for (const auto& token : tokens) rows.push_back(embed(token.text));
  return stack_rows(rows);
}

}  // namespace nlnde
