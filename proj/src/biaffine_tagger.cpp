#include "nlnde/biaffine_tagger.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "nlnde/errors.hpp"
#include "nlnde/manifest.hpp"
#include "nlnde/utf8.hpp"

namespace nlnde {

BiaffineParams make_biaffine_params(std::size_t feature_dim,
                                    std::size_t span_dim, ParameterStore& store,
                                    Rng& rng, const std::string& prefix) {
  BiaffineParams p;
  p.ffnn_s_w = store.create_glorot(prefix + ".start.w", {span_dim, feature_dim},
                                   rng);
  p.ffnn_s_b = store.create_zeros(prefix + ".start.b", {span_dim});
  p.ffnn_e_w =
      store.create_glorot(prefix + ".end.w", {span_dim, feature_dim}, rng);
  p.ffnn_e_b = store.create_zeros(prefix + ".end.b", {span_dim});
  for (std::size_t c = 0; c < kSpanClasses; ++c) {
    p.u.push_back(store.create_glorot(
        prefix + ".u" + std::to_string(c), {span_dim, span_dim}, rng));
  }
  p.w = store.create_glorot(prefix + ".w", {kSpanClasses, 2 * span_dim}, rng);
  p.b = store.create_zeros(prefix + ".b", {kSpanClasses});
  return p;
}

std::pair<Tensor, Tensor> span_representations(const Tensor& features,
                                               const BiaffineParams& params) {
  return {tanh(affine(features, params.ffnn_s_w, params.ffnn_s_b)),
          tanh(affine(features, params.ffnn_e_w, params.ffnn_e_b))};
}

Tensor span_scores(const Tensor& hs, const Tensor& he,
                   const BiaffineParams& params, std::size_t s,
                   std::size_t e) {
  const Tensor h_s = row(hs, s);
  const Tensor h_e = row(he, e);
  std::vector<Tensor> bilinear;
  bilinear.reserve(kSpanClasses);
  for (std::size_t c = 0; c < kSpanClasses; ++c) {
    bilinear.push_back(dot(h_s, matvec(params.u[c], h_e)));
  }
  const Tensor linear = matvec(params.w, concat({h_s, h_e}));
  return add(add(concat(bilinear), linear), params.b);
}

SpanScorer::SpanScorer(Tensor hs, Tensor he, const BiaffineParams& params)
    : hs_(std::move(hs)), he_(std::move(he)), params_(params),
      t_len_(hs_.rows()) {
  cached_.reserve(kSpanClasses);
  for (std::size_t c = 0; c < kSpanClasses; ++c) {
    cached_.push_back(matmul(hs_, params.u[c]));
  }
}

Tensor SpanScorer::scores(std::size_t s, std::size_t e) const {
  const Tensor h_e = row(he_, e);
  std::vector<Tensor> bilinear;
  bilinear.reserve(kSpanClasses);
  for (std::size_t c = 0; c < kSpanClasses; ++c) {
    bilinear.push_back(dot(row(cached_[c], s), h_e));
  }
  const Tensor linear = matvec(params_.w, concat({row(hs_, s), h_e}));
  return add(add(concat(bilinear), linear), params_.b);
}

bool spans_cross(std::size_t s1, std::size_t e1, std::size_t s2,
                 std::size_t e2) {
  return (s1 < s2 && s2 <= e1 && e1 < e2) || (s2 < s1 && s1 <= e2 && e2 < e1);
}

std::vector<SpanCandidate> decode_spans(std::vector<SpanCandidate> candidates) {
  std::erase_if(candidates,
                [](const SpanCandidate& c) { return !(c.score > 0.0); });
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const SpanCandidate& a, const SpanCandidate& b) {
                     if (a.score != b.score) return a.score > b.score;
                     const std::size_t la = a.end - a.start;
                     const std::size_t lb = b.end - b.start;
                     if (la != lb) return la < lb;
                     return a.start < b.start;
                   });
  std::vector<SpanCandidate> accepted;
  for (SpanCandidate& c : candidates) {
    const bool clashes = std::any_of(
        accepted.begin(), accepted.end(), [&](const SpanCandidate& a) {
          return spans_cross(a.start, a.end, c.start, c.end);
        });
    if (!clashes) accepted.push_back(std::move(c));
  }
  return accepted;
}

SpanLossResult span_loss(const Tensor& hs, const Tensor& he,
                         const BiaffineParams& params,
                         const std::vector<TokenSpan>& gold,
                         std::size_t max_span_len) {
  const std::size_t t_len = hs.rows();
  SpanLossResult out;
  std::set<TokenSpan> gold_set;
  for (const TokenSpan& g : gold) {
    if (g.second - g.first + 1 > max_span_len) {
      ++out.truncated_gold;
    } else {
      gold_set.insert(g);
    }
  }

  const SpanScorer scorer(hs, he, params);
  Tensor total;
  for (std::size_t s = 0; s < t_len; ++s) {
    for (std::size_t e = s; e < t_len && e - s < max_span_len; ++e) {
      const Tensor scores = scorer.scores(s, e);
      const std::size_t gold_class = gold_set.contains({s, e}) ? 1 : 0;
      const Tensor ce = sub(logsumexp(scores), pick(scores, gold_class));
      total = out.candidates == 0 ? ce : add(total, ce);
      ++out.candidates;
    }
  }
  out.loss = scale(total, 1.0 / static_cast<double>(out.candidates));
  return out;
}

std::vector<TokenSpan> gold_token_spans(const std::vector<Token>& tokens,
                                        const std::vector<Mention>& mentions) {
  std::set<TokenSpan> spans;
  for (const Mention& m : mentions) {
    std::size_t first = tokens.size(), last = tokens.size();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].start < m.end && m.start < tokens[i].end) {
        if (first == tokens.size()) first = i;
        last = i;
      }
    }
    if (first != tokens.size()) spans.insert({first, last});
  }
  return {spans.begin(), spans.end()};
}

// ---- trainable model -------------------------------------------------------

namespace {

struct Instance {
  std::vector<Token> tokens;
  std::vector<TokenSpan> gold;
};

std::vector<Instance> make_instances(const std::vector<Document>& docs) {
  std::vector<Instance> out;
  for (const Document& doc : docs) {
    for (auto& tokens : sentence_tokens(doc.text)) {
      Instance inst;
      inst.gold = gold_token_spans(tokens, doc.mentions);
      inst.tokens = std::move(tokens);
      out.push_back(std::move(inst));
    }
  }
  return out;
}

std::string dominant_label(const std::vector<Document>& docs) {
  std::map<std::string, std::size_t> counts;
  for (const Document& doc : docs) {
    for (const Mention& m : doc.mentions) ++counts[m.label];
  }
  std::string best = "ENTITY";
  std::size_t best_count = 0;
  for (const auto& [label, count] : counts) {
    if (count > best_count) {
      best = label;
      best_count = count;
    }
  }
  return best;
}

}  // namespace

void BiaffineTagger::build(FrequencyTable freqs, Rng& rng) {
  features_ = std::make_unique<FeatureExtractor>(
      config_.features, std::move(freqs), *store_, rng);
  params_ = make_biaffine_params(features_->output_dim(), config_.span_dim,
                                 *store_, rng);
}

SpanLossResult BiaffineTagger::sentence_loss(const std::vector<Token>& tokens,
                                             const std::vector<TokenSpan>& gold,
                                             bool training,
                                             Rng* dropout_rng) const {
  const Tensor feats = features_->encode(tokens, training, dropout_rng);
  const auto [hs, he] = span_representations(feats, params_);
  return span_loss(hs, he, params_, gold, config_.max_span_len);
}

BiaffineTagger BiaffineTagger::train(const std::vector<Document>& train_docs,
                                     const std::vector<Document>& dev_docs,
                                     const BiaffineTrainConfig& config,
                                     bool include_dev,
                                     const EpochCallback& on_epoch) {
  if (train_docs.empty()) throw ConfigError("empty training corpus");

  std::vector<Document> effective_train = train_docs;
  if (include_dev) {
    effective_train.insert(effective_train.end(), dev_docs.begin(),
                           dev_docs.end());
  }

  BiaffineTagger model;
  model.config_ = config;
  model.entity_label_ = dominant_label(effective_train);
  model.store_ = std::make_unique<ParameterStore>();

  Rng rng(config.schedule.seed);
  model.build(build_frequency_table(effective_train), rng);

  const std::vector<Instance> train_insts = make_instances(effective_train);
  const std::vector<Instance> dev_insts =
      include_dev ? std::vector<Instance>{} : make_instances(dev_docs);
  if (train_insts.empty()) {
    throw ConfigError("training corpus contains no sentences");
  }

  Optimizer opt(AdamSpec{.lr = config.schedule.lr});
  std::vector<std::size_t> order(train_insts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_dev = std::numeric_limits<double>::infinity();
  std::size_t stale_epochs = 0;

  for (std::size_t epoch = 1; epoch <= config.schedule.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t at = 0; at < order.size();
         at += config.schedule.batch_size) {
      const std::size_t stop =
          std::min(order.size(), at + config.schedule.batch_size);
      Tensor batch_loss;
      for (std::size_t i = at; i < stop; ++i) {
        const Instance& inst = train_insts[order[i]];
        Tensor loss =
            model.sentence_loss(inst.tokens, inst.gold, true, &rng).loss;
        batch_loss = i == at ? loss : add(batch_loss, loss);
      }
      batch_loss = scale(batch_loss, 1.0 / static_cast<double>(stop - at));
      epoch_loss += batch_loss.item() * static_cast<double>(stop - at);
      backward(batch_loss);
      opt.step(*model.store_);
    }
    epoch_loss /= static_cast<double>(train_insts.size());

    double dev_loss = epoch_loss;
    if (!dev_insts.empty()) {
      dev_loss = 0.0;
      for (const Instance& inst : dev_insts) {
        dev_loss +=
            model.sentence_loss(inst.tokens, inst.gold, false, nullptr)
                .loss.item();
      }
      dev_loss /= static_cast<double>(dev_insts.size());

      // The anneal signal is dev loss; without a dev split lr stays fixed.
      if (dev_loss < best_dev - 1e-12) {
        best_dev = dev_loss;
        stale_epochs = 0;
      } else if (++stale_epochs >= config.schedule.anneal_patience) {
        opt.set_lr(opt.lr() * config.schedule.anneal_factor);
        stale_epochs = 0;
      }
    }

    if (on_epoch) {
      on_epoch(EpochStats{epoch, epoch_loss, dev_loss, opt.lr()}, model);
    }
  }
  return model;
}

std::vector<Mention> BiaffineTagger::predict(const Document& doc) const {
  const std::u32string text = utf8::decode(doc.text);
  std::vector<Mention> mentions;
  for (const auto& tokens : sentence_tokens(doc.text)) {
    const Tensor feats = features_->encode(tokens, false, nullptr);
    const auto [hs, he] = span_representations(feats, params_);
    const SpanScorer scorer(hs, he, params_);

    std::vector<SpanCandidate> candidates;
    for (std::size_t s = 0; s < tokens.size(); ++s) {
      for (std::size_t e = s; e < tokens.size() && e - s < config_.max_span_len;
           ++e) {
        const std::vector<double> scores = scorer.scores(s, e).value();
        SpanCandidate c;
        c.start = s;
        c.end = e;
        c.class_scores = scores;
        c.best_class = scores[1] > scores[0] ? 1 : 0;
        c.score = scores[1] - scores[0];
        candidates.push_back(std::move(c));
      }
    }
    for (const SpanCandidate& c : decode_spans(std::move(candidates))) {
      Mention m;
      m.start = tokens[c.start].start;
      m.end = tokens[c.end].end;
      m.surface = utf8::encode(text.substr(m.start, m.end - m.start));
      m.label = entity_label_;
      mentions.push_back(std::move(m));
    }
  }
  std::sort(mentions.begin(), mentions.end(),
            [](const Mention& a, const Mention& b) {
              return std::tie(a.start, a.end) < std::tie(b.start, b.end);
            });
  return mentions;
}

void BiaffineTagger::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  store_->save(dir / "params.bin");
  save_frequency_table(features_->stack().frequencies(), dir / "freqs.tsv");
  write_json_file(dir / "manifest.json",
                  {
                      {"kind", "biaffine"},
                      {"entity_label", entity_label_},
                      {"span_dim", config_.span_dim},
                      {"max_span_len", config_.max_span_len},
                      {"features", feature_config_to_json(config_.features)},
                      {"schedule", schedule_to_json(config_.schedule)},
                  });
}

BiaffineTagger BiaffineTagger::load(const std::filesystem::path& dir) {
  const nlohmann::json manifest = read_json_file(dir / "manifest.json");
  if (manifest.at("kind").get<std::string>() != "biaffine") {
    throw ConfigError(dir.string() + " does not hold a span-tagger model");
  }

  BiaffineTagger model;
  model.config_.features = feature_config_from_json(manifest.at("features"));
  model.config_.schedule = schedule_from_json(manifest.at("schedule"));
  model.config_.span_dim = manifest.at("span_dim").get<std::size_t>();
  model.config_.max_span_len = manifest.at("max_span_len").get<std::size_t>();
  model.entity_label_ = manifest.at("entity_label").get<std::string>();
  model.store_ = std::make_unique<ParameterStore>();

  Rng rng(model.config_.schedule.seed);
  model.build(load_frequency_table(dir / "freqs.tsv"), rng);
  model.store_->load(dir / "params.bin");
  return model;
}

}  // namespace nlnde
