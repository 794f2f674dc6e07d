#ifndef NLNDE_CRF_TAGGER_HPP
#define NLNDE_CRF_TAGGER_HPP

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "nlnde/corpus_io.hpp"
#include "nlnde/features.hpp"
#include "nlnde/training.hpp"

namespace nlnde {

// BIO label space: O at index 0, then B-X/I-X per class (classes sorted),
// plus virtual START/STOP ids used only in the transition matrix.
class LabelScheme {
 public:
  static LabelScheme bio(const std::vector<std::string>& classes);

  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t k() const { return labels_.size(); }
  std::size_t start_id() const { return labels_.size(); }
  std::size_t stop_id() const { return labels_.size() + 1; }

  std::size_t index_of(const std::string& tag) const;  // ContractError if absent
  bool forbidden(std::size_t from, std::size_t to) const;
  // All forbidden (from, to) pairs: (O, I-X), (START, I-X), and
  // (B-Y/I-Y, I-X) for Y != X.
  const std::set<std::pair<std::size_t, std::size_t>>& forbidden_pairs() const {
    return forbidden_;
  }
  // Checks START -> tags[0] -> ... -> STOP against the forbidden set.
  bool valid_path(const std::vector<std::size_t>& tags) const;

  const std::vector<std::string>& classes() const { return classes_; }

 private:
  std::vector<std::string> labels_;
  std::vector<std::string> classes_;
  std::map<std::string, std::size_t> index_;
  std::set<std::pair<std::size_t, std::size_t>> forbidden_;
};

constexpr double kForbiddenScore = -1e4;

// ---- core CRF math ---------------------------------------------------------
// emissions: [T, K]; transitions: [K+2, K+2] with rows/cols K = START and
// K+1 = STOP. All differentiable functions build a graph over the inputs.

Tensor emission_scores(const Tensor& features, const Tensor& w,
                       const Tensor& b);  // [T,2H] -> [T,K]

// log of the sum over all K^T label paths of exp(path score), where a path
// score is sum of emissions plus transitions including START -> first and
// last -> STOP. Forward recursion in log space.
Tensor forward_logZ(const Tensor& emissions, const Tensor& transitions);

// Score of one concrete path (same terms as above).
Tensor path_score(const Tensor& emissions, const Tensor& transitions,
                  const std::vector<std::size_t>& tags);

// forward_logZ - path_score(gold); >= 0. ContractError when the gold path
// uses a forbidden transition or an out-of-range label.
Tensor nll_loss(const Tensor& emissions, const Tensor& transitions,
                const std::vector<std::size_t>& tags,
                const LabelScheme& scheme);

struct ViterbiResult {
  std::vector<std::size_t> tags;
  double score = 0.0;
};

// Argmax path and its score. Ties break toward the lower label index, both
// per backtrack step and at the final state.
ViterbiResult viterbi_decode(const Tensor& emissions,
                             const Tensor& transitions);

// ---- trainable model -------------------------------------------------------

struct CrfTrainConfig {
  FeatureConfig features;
  TrainSchedule schedule;  // SGD; default lr 0.1
};

class CrfTagger {
 public:
  using EpochCallback =
      std::function<void(const EpochStats&, const CrfTagger&)>;

  // Sentence-level mini-batch SGD on mean NLL. ConfigError on an empty
  // corpus. Deterministic given config.schedule.seed.
  static CrfTagger train(const std::vector<Document>& train_docs,
                         const std::vector<Document>& dev_docs,
                         const CrfTrainConfig& config,
                         const EpochCallback& on_epoch = {});

  // tokenize -> embed -> encode -> viterbi -> spans, flat by construction.
  std::vector<Mention> predict(const Document& doc) const;

  void save(const std::filesystem::path& dir) const;
  static CrfTagger load(const std::filesystem::path& dir);

  const LabelScheme& scheme() const { return scheme_; }
  const CrfTrainConfig& config() const { return config_; }
  ParameterStore& params() { return *store_; }

  // NLL of one tagged sentence under the current parameters (exposed for
  // gradient and convergence tests).
  Tensor sentence_nll(const std::vector<Token>& tokens,
                      const std::vector<std::size_t>& tags, bool training,
                      Rng* dropout_rng) const;

 private:
  CrfTrainConfig config_;
  LabelScheme scheme_;
  std::unique_ptr<ParameterStore> store_;
  std::unique_ptr<FeatureExtractor> features_;
  Tensor emission_w_, emission_b_, transitions_;

  void build(FrequencyTable freqs, Rng& rng);
  void repin_forbidden();
};

}  // namespace nlnde

#endif  // NLNDE_CRF_TAGGER_HPP
