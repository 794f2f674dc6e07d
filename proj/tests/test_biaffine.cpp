#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "nlnde/biaffine_tagger.hpp"
#include "nlnde/crf_tagger.hpp"
#include "nlnde/errors.hpp"
#include "test_util.hpp"

using namespace nlnde;

namespace {

std::vector<double> random_values(std::size_t n, Rng& rng, double spread) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal(0.0, spread);
  return v;
}

BiaffineParams zero_params(std::size_t feature_dim, std::size_t d) {
  BiaffineParams p;
  p.ffnn_s_w = Tensor::zeros({d, feature_dim});
  p.ffnn_s_b = Tensor::zeros({d});
  p.ffnn_e_w = Tensor::zeros({d, feature_dim});
  p.ffnn_e_b = Tensor::zeros({d});
  for (std::size_t c = 0; c < kSpanClasses; ++c) {
    p.u.push_back(Tensor::zeros({d, d}));
  }
  p.w = Tensor::zeros({kSpanClasses, 2 * d});
  p.b = Tensor::zeros({kSpanClasses});
  return p;
}

SpanCandidate candidate(std::size_t s, std::size_t e, double margin) {
  SpanCandidate c;
  c.start = s;
  c.end = e;
  c.class_scores = {0.0, margin};
  c.best_class = margin > 0 ? 1 : 0;
  c.score = margin;
  return c;
}

// Independent reference for the ranked-acceptance rule: order candidates by
// (margin desc, length asc, start asc) and pick the lexicographically
// greatest clash-free subset in that order, by exhaustive search.
std::vector<SpanCandidate> oracle_decode(std::vector<SpanCandidate> cands) {
  std::erase_if(cands, [](const SpanCandidate& c) { return !(c.score > 0); });
  std::stable_sort(cands.begin(), cands.end(),
                   [](const SpanCandidate& a, const SpanCandidate& b) {
                     if (a.score != b.score) return a.score > b.score;
                     const auto la = a.end - a.start, lb = b.end - b.start;
                     if (la != lb) return la < lb;
                     return a.start < b.start;
                   });
  const std::size_t n = cands.size();
  REQUIRE(n <= 16);
  std::size_t best_mask = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    bool ok = true;
    for (std::size_t i = 0; ok && i < n; ++i) {
      if (!(mask >> i & 1)) continue;
      for (std::size_t j = i + 1; ok && j < n; ++j) {
        if (!(mask >> j & 1)) continue;
        if (spans_cross(cands[i].start, cands[i].end, cands[j].start,
                        cands[j].end)) {
          ok = false;
        }
      }
    }
    if (!ok) continue;
    // Bit i is worth more the higher candidate i ranks.
    std::size_t value = 0, best_value = 0;
    for (std::size_t i = 0; i < n; ++i) {
      value |= (mask >> i & 1) << (n - 1 - i);
      best_value |= (best_mask >> i & 1) << (n - 1 - i);
    }
    if (value > best_value) best_mask = mask;
  }
  std::vector<SpanCandidate> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (best_mask >> i & 1) out.push_back(cands[i]);
  }
  return out;
}

std::vector<Document> two_sentence_corpus() {
  Document d1;
  d1.doc_id = "a";
  d1.text = "carcinoma ductal presente";
  d1.mentions = {Mention{0, 16, "carcinoma ductal", "MORFOLOGIA", ""}};
  Document d2;
  d2.doc_id = "b";
  d2.text = "sin hallazgos relevantes";
  return {d1, d2};
}

BiaffineTrainConfig tiny_config() {
  BiaffineTrainConfig config;
  config.features.provider_specs = {"trainable:4"};
  config.features.layers = 1;
  config.features.hidden = 3;
  config.features.dropout = 0.0;
  config.schedule.epochs = 15;
  config.schedule.batch_size = 8;
  config.schedule.lr = 5e-3;
  config.schedule.seed = 1;
  config.span_dim = 4;
  config.max_span_len = 8;
  return config;
}

}  // namespace

TEST_CASE("biaffine parameter shapes follow the configured dimensions") {
  ParameterStore store;
  Rng rng(3);
  const BiaffineParams p = make_biaffine_params(6, 4, store, rng);
  CHECK(p.span_dim() == 4);
  CHECK(p.ffnn_s_w.shape() == Shape{4, 6});
  CHECK(p.ffnn_e_b.shape() == Shape{4});
  REQUIRE(p.u.size() == kSpanClasses);
  CHECK(p.u[0].shape() == Shape{4, 4});
  CHECK(p.w.shape() == Shape{kSpanClasses, 8});
  CHECK(p.b.shape() == Shape{kSpanClasses});
}

TEST_CASE("zero-weight span networks emit tanh of the bias") {
  auto p = zero_params(3, 2);
  p.ffnn_s_b = Tensor::constant({2}, {0.5, -1.0});
  const Tensor features = Tensor::constant({2, 3}, {1, 2, 3, 4, 5, 6});
  const auto [hs, he] = span_representations(features, p);
  CHECK(hs.shape() == Shape{2, 2});
  CHECK(he.shape() == Shape{2, 2});
  for (std::size_t t = 0; t < 2; ++t) {
    CHECK(hs.at(t, 0) == doctest::Approx(std::tanh(0.5)).epsilon(1e-12));
    CHECK(hs.at(t, 1) == doctest::Approx(std::tanh(-1.0)).epsilon(1e-12));
    CHECK(he.at(t, 0) == 0.0);
  }
}

TEST_CASE("with only a bias every span scores that bias") {
  auto p = zero_params(3, 2);
  p.b = Tensor::constant({kSpanClasses}, {0.25, -0.75});
  Rng rng(5);
  const Tensor hs = Tensor::constant({3, 2}, random_values(6, rng, 1.0));
  const Tensor he = Tensor::constant({3, 2}, random_values(6, rng, 1.0));
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t e = s; e < 3; ++e) {
      const Tensor scores = span_scores(hs, he, p, s, e);
      CHECK(scores.at(0) == doctest::Approx(0.25).epsilon(1e-12));
      CHECK(scores.at(1) == doctest::Approx(-0.75).epsilon(1e-12));
    }
  }
}

TEST_CASE("one-dimensional bilinear term multiplies through") {
  auto p = zero_params(2, 1);
  p.u[1] = Tensor::constant({1, 1}, {1.0});
  const Tensor hs = Tensor::constant({1, 1}, {2.0});
  const Tensor he = Tensor::constant({1, 1}, {3.0});
  const Tensor scores = span_scores(hs, he, p, 0, 0);
  CHECK(scores.at(0) == 0.0);
  CHECK(scores.at(1) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("span scores match a dense per-span computation") {
  ParameterStore store;
  Rng rng(7);
  const std::size_t d = 3, t_len = 4;
  const BiaffineParams p = make_biaffine_params(5, d, store, rng);
  const Tensor hs = Tensor::constant({t_len, d}, random_values(t_len * d, rng, 1.0));
  const Tensor he = Tensor::constant({t_len, d}, random_values(t_len * d, rng, 1.0));
  const SpanScorer scorer(hs, he, p);

  for (std::size_t s = 0; s < t_len; ++s) {
    for (std::size_t e = s; e < t_len; ++e) {
      for (std::size_t c = 0; c < kSpanClasses; ++c) {
        double expected = p.b.at(c);
        for (std::size_t i = 0; i < d; ++i) {
          for (std::size_t j = 0; j < d; ++j) {
            expected += hs.at(s, i) * p.u[c].at(i, j) * he.at(e, j);
          }
        }
        for (std::size_t i = 0; i < d; ++i) {
          expected += p.w.at(c, i) * hs.at(s, i);
          expected += p.w.at(c, d + i) * he.at(e, i);
        }
        CHECK(span_scores(hs, he, p, s, e).at(c) ==
              doctest::Approx(expected).epsilon(1e-10));
        CHECK(scorer.scores(s, e).at(c) ==
              doctest::Approx(expected).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("spans_cross detects partial overlap only") {
  CHECK(spans_cross(0, 2, 1, 3));        // staggered
  CHECK(spans_cross(1, 3, 0, 2));        // symmetric
  CHECK(spans_cross(0, 1, 1, 2));        // share one token
  CHECK_FALSE(spans_cross(0, 3, 1, 2));  // containment
  CHECK_FALSE(spans_cross(1, 2, 0, 3));
  CHECK_FALSE(spans_cross(0, 1, 2, 3));  // disjoint
  CHECK_FALSE(spans_cross(0, 2, 0, 2));  // identical
}

TEST_CASE("ranked decoding keeps nested spans and drops crossers") {
  SUBCASE("crossing pair keeps the higher margin") {
    const auto out =
        decode_spans({candidate(0, 2, 5.0), candidate(1, 3, 4.0)});
    REQUIRE(out.size() == 1);
    CHECK(out[0].start == 0);
    CHECK(out[0].end == 2);
  }
  SUBCASE("nested pair survives") {
    const auto out =
        decode_spans({candidate(0, 3, 5.0), candidate(1, 2, 4.0)});
    CHECK(out.size() == 2);
  }
  SUBCASE("non-positive margins never appear") {
    const auto out = decode_spans(
        {candidate(0, 1, 0.0), candidate(2, 3, -1.0), candidate(1, 2, 0.5)});
    REQUIRE(out.size() == 1);
    CHECK(out[0].start == 1);
  }
  SUBCASE("margin ties prefer the shorter span") {
    const auto out =
        decode_spans({candidate(0, 2, 2.0), candidate(2, 3, 2.0)});
    REQUIRE(out.size() == 1);
    CHECK(out[0].start == 2);
  }
  SUBCASE("full ties prefer the smaller start") {
    const auto out =
        decode_spans({candidate(1, 2, 2.0), candidate(0, 1, 2.0)});
    REQUIRE(out.size() == 1);
    CHECK(out[0].start == 0);
  }
}

TEST_CASE("decoding matches the exhaustive subset oracle") {
  Rng rng(11);
  const std::vector<double> margins = {-1.0, 0.0, 0.5, 0.5, 1.0, 1.5, 1.5};
  for (int iter = 0; iter < 300; ++iter) {
    std::vector<SpanCandidate> cands;
    const std::size_t n = rng.index(7);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t s = rng.index(5);
      cands.push_back(
          candidate(s, s + rng.index(5 - s), margins[rng.index(margins.size())]));
    }
    const auto got = decode_spans(cands);
    const auto want = oracle_decode(cands);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].start == want[i].start);
      CHECK(got[i].end == want[i].end);
      CHECK(got[i].score == want[i].score);
    }
    // Structural guarantees of the accepted set.
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].score > 0);
      for (std::size_t j = i + 1; j < got.size(); ++j) {
        CHECK_FALSE(
            spans_cross(got[i].start, got[i].end, got[j].start, got[j].end));
      }
    }
  }
}

TEST_CASE("uninformative scores cost ln 2 per span") {
  const auto p = zero_params(3, 2);
  const Tensor hs = Tensor::zeros({3, 2});
  const Tensor he = Tensor::zeros({3, 2});
  const SpanLossResult result = span_loss(hs, he, p, {}, 16);
  CHECK(result.candidates == 6);
  CHECK(result.truncated_gold == 0);
  CHECK(result.loss.item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("the span-length cap bounds the candidate set and flags long gold") {
  const auto p = zero_params(3, 2);
  const Tensor hs = Tensor::zeros({5, 2});
  const Tensor he = Tensor::zeros({5, 2});
  const SpanLossResult result = span_loss(hs, he, p, {{0, 4}, {1, 2}}, 2);
  CHECK(result.candidates == 9);      // lengths 1 and 2 only
  CHECK(result.truncated_gold == 1);  // (0,4) exceeds the cap
}

TEST_CASE("separable scores drive the loss toward zero") {
  auto p = zero_params(3, 2);
  p.b = Tensor::constant({kSpanClasses}, {-10.0, 10.0});
  const SpanLossResult result =
      span_loss(Tensor::zeros({1, 2}), Tensor::zeros({1, 2}), p, {{0, 0}}, 16);
  CHECK(result.loss.item() < 1e-8);
}

TEST_CASE("span loss gradients match finite differences") {
  ParameterStore store;
  Rng rng(13);
  const BiaffineParams p = make_biaffine_params(4, 3, store, rng);
  Tensor features = store.create("features", {3, 4}, random_values(12, rng, 0.8));
  const std::vector<TokenSpan> gold = {{0, 1}};
  const auto loss = [&]() {
    const auto [hs, he] = span_representations(features, p);
    return span_loss(hs, he, p, gold, 16).loss;
  };
  CHECK(grad_check(loss, features, 1e-4) < 1e-4);
  CHECK(grad_check(loss, p.ffnn_s_w, 1e-4) < 1e-4);
  CHECK(grad_check(loss, p.u[1], 1e-4) < 1e-4);
  CHECK(grad_check(loss, p.w, 1e-4) < 1e-4);
}

TEST_CASE("mentions map onto the tokens they intersect") {
  const auto tokens = tokenize(std::string("aaa bbb ccc"));
  SUBCASE("token-aligned mention") {
    CHECK(gold_token_spans(tokens, {Mention{4, 11, "", "M", ""}}) ==
          std::vector<TokenSpan>{{1, 2}});
  }
  SUBCASE("partial characters claim the whole token") {
    CHECK(gold_token_spans(tokens, {Mention{2, 5, "", "M", ""}}) ==
          std::vector<TokenSpan>{{0, 1}});
  }
  SUBCASE("duplicates collapse") {
    CHECK(gold_token_spans(tokens, {Mention{0, 3, "", "M", ""},
                                    Mention{0, 3, "", "M", ""}})
              .size() == 1);
  }
}

TEST_CASE("span tagger trains, persists and reloads") {
  testutil::TempDir dir;
  const auto docs = two_sentence_corpus();

  std::vector<double> losses;
  const BiaffineTagger model = BiaffineTagger::train(
      docs, {}, tiny_config(), false,
      [&](const EpochStats& stats, const BiaffineTagger&) {
        losses.push_back(stats.train_loss);
      });
  REQUIRE(losses.size() == 15);
  CHECK(losses.back() < losses.front());

  SUBCASE("empty documents produce no mentions") {
    CHECK(model.predict(Document{"vacío", "", {}}).empty());
  }
  SUBCASE("reloaded model reproduces predictions") {
    model.save(dir.path());
    const BiaffineTagger loaded = BiaffineTagger::load(dir.path());
    CHECK(loaded.entity_label() == model.entity_label());
    CHECK(loaded.config().span_dim == model.config().span_dim);
    for (const Document& doc : docs) {
      CHECK(loaded.predict(doc) == model.predict(doc));
    }
  }
  SUBCASE("a sequence-tagger loader rejects a span checkpoint") {
    model.save(dir.path());
    CHECK_THROWS_AS(CrfTagger::load(dir.path()), ConfigError);
  }
}

TEST_CASE("folding the dev split into training extends the vocabulary") {
  testutil::TempDir dir;
  const auto train_docs = two_sentence_corpus();
  Document dev;
  dev.doc_id = "dev1";
  dev.text = "zirconita observada";
  auto config = tiny_config();
  config.schedule.epochs = 2;

  const BiaffineTagger with_dev =
      BiaffineTagger::train(train_docs, {dev}, config, true);
  with_dev.save(dir / "with");
  CHECK(load_frequency_table(dir / "with" / "freqs.tsv").contains("zirconita"));

  const BiaffineTagger without_dev =
      BiaffineTagger::train(train_docs, {dev}, config, false);
  without_dev.save(dir / "without");
  CHECK_FALSE(
      load_frequency_table(dir / "without" / "freqs.tsv").contains("zirconita"));
}

TEST_CASE("an empty corpus is a configuration error") {
  CHECK_THROWS_AS(BiaffineTagger::train({}, {}, tiny_config()), ConfigError);
}
