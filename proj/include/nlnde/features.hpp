#ifndef NLNDE_FEATURES_HPP
#define NLNDE_FEATURES_HPP

#include <string>
#include <vector>

#include "nlnde/embeddings.hpp"
#include "nlnde/encoder.hpp"

namespace nlnde {

// Shared token-to-feature front end of both taggers: embedding providers,
// an optional attention combiner, and the stacked BiLSTM.
struct FeatureConfig {
  // Each spec is one of:
  //   trainable:DIM      learned word vectors over the training vocabulary
  //   char:HIDDEN        character BiLSTM, output dim 2*HIDDEN
  //   file:PATH[:unk]    static vector file; ':unk' trains an UNK vector
  std::vector<std::string> provider_specs;
  CombineMode combine = CombineMode::kConcat;
  std::size_t layers = 2;
  std::size_t hidden = 16;  // per direction
  double dropout = 0.1;

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

// The vocabulary, character alphabet and word-feature bins are all derived
// from the frequency table, so persisting that table alone makes the whole
// front end reconstructible at load time.
class FeatureExtractor {
 public:
  FeatureExtractor(const FeatureConfig& config, FrequencyTable freqs,
                   ParameterStore& store, Rng& rng);

  // [T, 2*hidden]
  Tensor encode(const std::vector<Token>& tokens, bool training = false,
                Rng* dropout_rng = nullptr) const;
  std::size_t output_dim() const { return encoder_->output_dim(); }
  const EmbeddingStack& stack() const { return *stack_; }
  const FeatureConfig& config() const { return config_; }

 private:
  FeatureConfig config_;
  std::unique_ptr<EmbeddingStack> stack_;
  std::unique_ptr<BiLstmEncoder> encoder_;
};

// Spec-string parsing, exposed for config validation.
std::shared_ptr<EmbeddingProvider> make_provider(
    const std::string& spec, const std::string& name,
    const std::vector<std::string>& vocab, const std::u32string& alphabet,
    ParameterStore& store, Rng& rng);

std::u32string alphabet_from(const FrequencyTable& freqs);

void save_frequency_table(const FrequencyTable& freqs,
                          const std::filesystem::path& path);
FrequencyTable load_frequency_table(const std::filesystem::path& path);

}  // namespace nlnde

#endif  // NLNDE_FEATURES_HPP
