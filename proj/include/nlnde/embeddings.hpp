#ifndef NLNDE_EMBEDDINGS_HPP
#define NLNDE_EMBEDDINGS_HPP

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "nlnde/corpus_io.hpp"
#include "nlnde/encoder.hpp"
#include "nlnde/tensor.hpp"

namespace nlnde {

using FrequencyTable = std::map<std::string, std::size_t>;

enum class OovPolicy { kZero, kTrainedUnk };

// A source of per-token vectors. Implementations differ in where the
// vectors come from (file, trained table, character model); consumers only
// see name, dim and lookup.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  const std::string& name() const { return name_; }
  std::size_t dim() const { return dim_; }
  virtual bool trainable() const = 0;
  virtual Tensor embed(const std::string& word) const = 0;

 protected:
  EmbeddingProvider(std::string name, std::size_t dim)
      : name_(std::move(name)), dim_(dim) {}
  std::string name_;
  std::size_t dim_;
};

// Fixed lookup table loaded from a vector file.
class StaticTableProvider : public EmbeddingProvider {
 public:
  StaticTableProvider(std::string name,
                      std::map<std::string, std::vector<double>> table,
                      std::size_t dim, OovPolicy policy);
  // A kTrainedUnk provider owns one learned vector for unseen words.
  void attach_unk(ParameterStore& store, Rng& rng);

  bool trainable() const override { return false; }
  Tensor embed(const std::string& word) const override;

  OovPolicy oov_policy() const { return policy_; }
  const std::map<std::string, std::vector<double>>& table() const {
    return table_;
  }

 private:
  std::map<std::string, std::vector<double>> table_;
  OovPolicy policy_;
  Tensor unk_;
};

// Learned per-word vectors over a fixed vocabulary; unseen words share a
// trained UNK row.
class TrainableTableProvider : public EmbeddingProvider {
 public:
  TrainableTableProvider(std::string name, std::size_t dim,
                         const std::vector<std::string>& vocab,
                         ParameterStore& store, Rng& rng);

  bool trainable() const override { return true; }
  Tensor embed(const std::string& word) const override;

 private:
  std::map<std::string, std::size_t> index_;
  Tensor table_;  // [vocab+1, dim]; last row is UNK
};

// Character-level BiLSTM run over the word; stands in for pre-trained
// character language models at desk scale. Output is the concatenation of
// the final forward and backward states, dim = 2*hidden.
class CharBiLstmProvider : public EmbeddingProvider {
 public:
  CharBiLstmProvider(std::string name, std::size_t hidden,
                     const std::u32string& alphabet, ParameterStore& store,
                     Rng& rng);

  bool trainable() const override { return true; }
  Tensor embed(const std::string& word) const override;

 private:
  std::map<char32_t, std::size_t> index_;  // row 0 is the unknown char
  std::size_t hidden_;
  Tensor chars_;  // [alphabet+1, hidden]
  LstmCellParams fwd_, bwd_;
};

// Text vector file: first line `vocab_size dim`, then `word v1 ... v_dim`
// per line. Duplicate words: last one wins. A row whose vector length
// disagrees with the header is a ParseError carrying the line number.
std::unique_ptr<StaticTableProvider> load_vectors(
    const std::filesystem::path& path, OovPolicy policy = OovPolicy::kZero);
void save_vectors(const StaticTableProvider& provider,
                  const std::filesystem::path& path);

// Concatenation of all provider vectors, in order; dim is the sum.
Tensor embed_concat(
    const std::vector<std::shared_ptr<EmbeddingProvider>>& providers,
    const std::string& word);

// ---- word features --------------------------------------------------------

enum class ShapeClass : std::size_t {
  kAllLower = 0,
  kAllUpper = 1,
  kInitCap = 2,
  kHasDigit = 3,
  kMixed = 4,
  kOther = 5,
};
constexpr std::size_t kShapeClassCount = 6;
constexpr std::size_t kFreqBins = 10;
constexpr std::size_t kLengthBins = 10;

struct WordFeatures {
  ShapeClass shape_class = ShapeClass::kOther;
  std::size_t freq_bin = 0;    // min(9, floor(log2(1 + count)))
  std::size_t length_bin = 0;  // min(9, codepoint length)

  friend bool operator==(const WordFeatures&, const WordFeatures&) = default;
};

WordFeatures compute_word_features(const std::string& word,
                                   const FrequencyTable& freqs);
FrequencyTable build_frequency_table(const std::vector<Document>& docs);

// ---- meta-embeddings ------------------------------------------------------

// Feature-based attention over per-provider projections:
//   x_i   = tanh(Q_i e_i + b_i)             (all mapped to dim E)
//   a_i  ~  exp(V . tanh(W x_i + f_w))      (normalized over providers)
//   out   = sum_i a_i x_i
// E is the size of the largest provider; the attention space has a fixed
// hidden size of 25. f_w is the sum of three learned feature vectors
// (shape, frequency bin, length bin).
class MetaEmbedder {
 public:
  static constexpr std::size_t kAttentionDim = 25;

  MetaEmbedder(std::vector<std::size_t> provider_dims, ParameterStore& store,
               Rng& rng, const std::string& prefix = "meta");

  std::size_t output_dim() const { return e_dim_; }

  struct Result {
    Tensor meta;     // [E]
    Tensor weights;  // [n], strictly positive, sums to 1
  };
  Result combine(const std::vector<Tensor>& embeddings,
                 const WordFeatures& features) const;

 private:
  std::vector<std::size_t> dims_;
  std::size_t e_dim_ = 0;
  std::vector<Tensor> q_, b_;     // per provider: [E, dim_i], [E]
  Tensor att_w_;                  // [A, E]
  Tensor att_v_;                  // [A]
  Tensor shape_emb_, freq_emb_, len_emb_;  // [6|10|10, A]
};

// ---- combined per-token embedding front-end --------------------------------

enum class CombineMode { kConcat, kMeta };

class EmbeddingStack {
 public:
  EmbeddingStack(std::vector<std::shared_ptr<EmbeddingProvider>> providers,
                 CombineMode mode, FrequencyTable freqs, ParameterStore& store,
                 Rng& rng);

  std::size_t output_dim() const { return output_dim_; }
  CombineMode mode() const { return mode_; }
  const FrequencyTable& frequencies() const { return freqs_; }

  Tensor embed(const std::string& word) const;
  Tensor embed_sentence(const std::vector<Token>& tokens) const;  // [T, dim]

 private:
  std::vector<std::shared_ptr<EmbeddingProvider>> providers_;
  CombineMode mode_;
  FrequencyTable freqs_;
  std::unique_ptr<MetaEmbedder> meta_;
  std::size_t output_dim_ = 0;
};

}  // namespace nlnde

#endif  // NLNDE_EMBEDDINGS_HPP
