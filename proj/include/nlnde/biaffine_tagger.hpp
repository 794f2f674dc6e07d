#ifndef NLNDE_BIAFFINE_TAGGER_HPP
#define NLNDE_BIAFFINE_TAGGER_HPP

#include <filesystem>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "nlnde/corpus_io.hpp"
#include "nlnde/features.hpp"
#include "nlnde/training.hpp"

namespace nlnde {

// Span classifier over two classes: 0 = none, 1 = entity.
constexpr std::size_t kSpanClasses = 2;

// Start/end feed-forward maps (one tanh layer 2H -> d) plus the biaffine
// scoring parameters: per-class bilinear U_c (d x d), linear W (C x 2d)
// over h_s + h_e concatenated, and bias b (C).
struct BiaffineParams {
  Tensor ffnn_s_w, ffnn_s_b;  // [d, 2H], [d]
  Tensor ffnn_e_w, ffnn_e_b;
  std::vector<Tensor> u;  // kSpanClasses tensors of [d, d]
  Tensor w;               // [kSpanClasses, 2d]
  Tensor b;               // [kSpanClasses]

  std::size_t span_dim() const { return ffnn_s_b.size(); }
};

BiaffineParams make_biaffine_params(std::size_t feature_dim,
                                    std::size_t span_dim, ParameterStore& store,
                                    Rng& rng,
                                    const std::string& prefix = "biaffine");

// h_s(i) = tanh(Ws f_i + bs), h_e(i) = tanh(We f_i + be); both [T, d].
std::pair<Tensor, Tensor> span_representations(const Tensor& features,
                                               const BiaffineParams& params);

// r(s,e) per class c: h_s(s)^T U_c h_e(e) + (W (h_s(s) ++ h_e(e)))_c + b_c.
// Dense per-span computation; the scorer below is the cached equivalent.
Tensor span_scores(const Tensor& hs, const Tensor& he,
                   const BiaffineParams& params, std::size_t s, std::size_t e);

// Precomputes Hs U_c once per sentence, so each span costs two dot products
// and one small matvec.
class SpanScorer {
 public:
  SpanScorer(Tensor hs, Tensor he, const BiaffineParams& params);
  Tensor scores(std::size_t s, std::size_t e) const;  // [kSpanClasses]
  std::size_t length() const { return t_len_; }

 private:
  Tensor hs_, he_;
  const BiaffineParams& params_;
  std::vector<Tensor> cached_;  // per class: [T, d] = Hs U_c
  std::size_t t_len_;
};

struct SpanCandidate {
  std::size_t start = 0;  // token index, inclusive
  std::size_t end = 0;    // token index, inclusive
  std::vector<double> class_scores;
  std::size_t best_class = 0;
  double score = 0.0;  // entity margin: class_scores[1] - class_scores[0]

  friend bool operator==(const SpanCandidate&, const SpanCandidate&) = default;
};

// Ranked non-clashing decoding: keep spans with positive entity margin,
// sort by margin descending (ties: shorter span, then smaller start), and
// accept greedily unless the span crosses an already accepted boundary.
// Nesting (full containment) never counts as a clash.
std::vector<SpanCandidate> decode_spans(std::vector<SpanCandidate> candidates);

bool spans_cross(std::size_t s1, std::size_t e1, std::size_t s2,
                 std::size_t e2);

using TokenSpan = std::pair<std::size_t, std::size_t>;  // inclusive indices

struct SpanLossResult {
  Tensor loss;  // mean softmax cross-entropy over all candidate spans
  std::size_t candidates = 0;
  std::size_t truncated_gold = 0;  // gold spans longer than max_span_len
};

SpanLossResult span_loss(const Tensor& hs, const Tensor& he,
                         const BiaffineParams& params,
                         const std::vector<TokenSpan>& gold,
                         std::size_t max_span_len);

// ---- trainable model -------------------------------------------------------

struct BiaffineTrainConfig {
  FeatureConfig features;
  TrainSchedule schedule{.lr = 1e-3};  // Adam
  std::size_t span_dim = 16;
  std::size_t max_span_len = 16;
};

class BiaffineTagger {
 public:
  using EpochCallback =
      std::function<void(const EpochStats&, const BiaffineTagger&)>;

  // include_dev folds the dev documents into the training set; without a
  // dev split the learning rate stays fixed.
  static BiaffineTagger train(const std::vector<Document>& train_docs,
                              const std::vector<Document>& dev_docs,
                              const BiaffineTrainConfig& config,
                              bool include_dev = false,
                              const EpochCallback& on_epoch = {});

  // May emit nested mentions; flat decoding is not forced.
  std::vector<Mention> predict(const Document& doc) const;

  void save(const std::filesystem::path& dir) const;
  static BiaffineTagger load(const std::filesystem::path& dir);

  const BiaffineTrainConfig& config() const { return config_; }
  const std::string& entity_label() const { return entity_label_; }
  ParameterStore& params() { return *store_; }

  // Loss of one sentence under current parameters (exposed for gradient and
  // convergence tests). Gold spans are token-aligned inclusive ranges.
  SpanLossResult sentence_loss(const std::vector<Token>& tokens,
                               const std::vector<TokenSpan>& gold,
                               bool training, Rng* dropout_rng) const;

 private:
  BiaffineTrainConfig config_;
  std::string entity_label_;
  std::unique_ptr<ParameterStore> store_;
  std::unique_ptr<FeatureExtractor> features_;
  BiaffineParams params_;

  void build(FrequencyTable freqs, Rng& rng);
};

// Character-offset mentions -> token-aligned spans (a mention claims every
// token whose range intersects it), deduplicated.
std::vector<TokenSpan> gold_token_spans(const std::vector<Token>& tokens,
                                        const std::vector<Mention>& mentions);

}  // namespace nlnde

#endif  // NLNDE_BIAFFINE_TAGGER_HPP
