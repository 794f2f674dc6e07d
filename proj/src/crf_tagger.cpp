#include "nlnde/crf_tagger.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlnde/errors.hpp"
#include "nlnde/manifest.hpp"
#include "nlnde/utf8.hpp"

namespace nlnde {

// ---- LabelScheme -----------------------------------------------------------

LabelScheme LabelScheme::bio(const std::vector<std::string>& classes) {
  LabelScheme scheme;
  scheme.classes_.assign(classes.begin(), classes.end());
  std::sort(scheme.classes_.begin(), scheme.classes_.end());
  scheme.classes_.erase(
      std::unique(scheme.classes_.begin(), scheme.classes_.end()),
      scheme.classes_.end());

  scheme.labels_.push_back("O");
  for (const std::string& c : scheme.classes_) {
    scheme.labels_.push_back("B-" + c);
    scheme.labels_.push_back("I-" + c);
  }
  for (std::size_t i = 0; i < scheme.labels_.size(); ++i) {
    scheme.index_[scheme.labels_[i]] = i;
  }

  // I-X is reachable only from B-X or I-X.
  for (std::size_t c = 0; c < scheme.classes_.size(); ++c) {
    const std::size_t b_id = 1 + 2 * c;
    const std::size_t i_id = b_id + 1;
    scheme.forbidden_.emplace(0, i_id);                  // O -> I-X
    scheme.forbidden_.emplace(scheme.start_id(), i_id);  // START -> I-X
    for (std::size_t o = 0; o < scheme.classes_.size(); ++o) {
      if (o == c) continue;
      scheme.forbidden_.emplace(1 + 2 * o, i_id);      // B-Y -> I-X
      scheme.forbidden_.emplace(1 + 2 * o + 1, i_id);  // I-Y -> I-X
    }
  }
  return scheme;
}

std::size_t LabelScheme::index_of(const std::string& tag) const {
  auto it = index_.find(tag);
  if (it == index_.end()) throw ContractError("unknown tag '" + tag + "'");
  return it->second;
}

bool LabelScheme::forbidden(std::size_t from, std::size_t to) const {
  return forbidden_.contains({from, to});
}

bool LabelScheme::valid_path(const std::vector<std::size_t>& tags) const {
  std::size_t prev = start_id();
  for (std::size_t t : tags) {
    if (t >= k() || forbidden(prev, t)) return false;
    prev = t;
  }
  return true;  // no transition into STOP is forbidden
}

// ---- core math -------------------------------------------------------------

namespace {

void check_crf_shapes(const Tensor& emissions, const Tensor& transitions) {
  if (emissions.rank() != 2 || transitions.rank() != 2) {
    throw DimensionError("emissions must be [T,K], transitions [K+2,K+2]");
  }
  const std::size_t k = emissions.cols();
  if (transitions.rows() != k + 2 || transitions.cols() != k + 2) {
    throw DimensionError(
        "transition matrix is " + std::to_string(transitions.rows()) + "x" +
        std::to_string(transitions.cols()) + ", expected " +
        std::to_string(k + 2) + "x" + std::to_string(k + 2) + " for K = " +
        std::to_string(k));
  }
}

}  // namespace

Tensor emission_scores(const Tensor& features, const Tensor& w,
                       const Tensor& b) {
  return affine(features, w, b);
}

Tensor forward_logZ(const Tensor& emissions, const Tensor& transitions) {
  check_crf_shapes(emissions, transitions);
  const std::size_t t_len = emissions.rows();
  const std::size_t k = emissions.cols();
  const std::size_t start = k, stop = k + 1;

  std::vector<Tensor> into;  // transition scores into label j, from 0..K-1
  into.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    into.push_back(slice(col(transitions, j), 0, k));
  }

  Tensor alpha = add(row(emissions, 0), slice(row(transitions, start), 0, k));
  for (std::size_t t = 1; t < t_len; ++t) {
    std::vector<Tensor> next;
    next.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
      next.push_back(logsumexp(add(alpha, into[j])));
    }
    alpha = add(concat(next), row(emissions, t));
  }
  return logsumexp(add(alpha, slice(col(transitions, stop), 0, k)));
}

Tensor path_score(const Tensor& emissions, const Tensor& transitions,
                  const std::vector<std::size_t>& tags) {
  check_crf_shapes(emissions, transitions);
  const std::size_t t_len = emissions.rows();
  const std::size_t k = emissions.cols();
  if (tags.size() != t_len) {
    throw DimensionError("path has " + std::to_string(tags.size()) +
                         " tags for " + std::to_string(t_len) + " positions");
  }
  Tensor score = pick(row(transitions, k), tags[0]);  // START -> first
  for (std::size_t t = 0; t < t_len; ++t) {
    score = add(score, pick(row(emissions, t), tags[t]));
    if (t + 1 < t_len) {
      score = add(score, pick(row(transitions, tags[t]), tags[t + 1]));
    }
  }
  return add(score, pick(row(transitions, tags.back()), k + 1));
}

Tensor nll_loss(const Tensor& emissions, const Tensor& transitions,
                const std::vector<std::size_t>& tags,
                const LabelScheme& scheme) {
  if (tags.size() != emissions.rows()) {
    throw ContractError("gold path length does not match emissions");
  }
  if (!scheme.valid_path(tags)) {
    throw ContractError("gold path uses a forbidden transition");
  }
  return sub(forward_logZ(emissions, transitions),
             path_score(emissions, transitions, tags));
}

ViterbiResult viterbi_decode(const Tensor& emissions,
                             const Tensor& transitions) {
  check_crf_shapes(emissions, transitions);
  const std::size_t t_len = emissions.rows();
  const std::size_t k = emissions.cols();
  const auto& e = emissions.value();
  const auto& tr = transitions.value();
  const auto trans = [&](std::size_t i, std::size_t j) {
    return tr[i * (k + 2) + j];
  };

  std::vector<double> delta(k);
  std::vector<std::vector<std::size_t>> back(t_len, std::vector<std::size_t>(k));
  for (std::size_t j = 0; j < k; ++j) delta[j] = trans(k, j) + e[j];

  for (std::size_t t = 1; t < t_len; ++t) {
    std::vector<double> next(k);
    for (std::size_t j = 0; j < k; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t i = 0; i < k; ++i) {
        const double s = delta[i] + trans(i, j);
        if (s > best) {  // strict: ties keep the lower label index
          best = s;
          arg = i;
        }
      }
      next[j] = best + e[t * k + j];
      back[t][j] = arg;
    }
    delta = std::move(next);
  }

  ViterbiResult out;
  double best = -std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double s = delta[i] + trans(i, k + 1);
    if (s > best) {
      best = s;
      arg = i;
    }
  }
  out.score = best;
  out.tags.resize(t_len);
  out.tags[t_len - 1] = arg;
  for (std::size_t t = t_len - 1; t > 0; --t) {
    out.tags[t - 1] = back[t][out.tags[t]];
  }
  return out;
}

// ---- trainable model -------------------------------------------------------

namespace {

struct Instance {
  std::vector<Token> tokens;
  std::vector<std::size_t> tags;
};

std::vector<Instance> make_instances(const std::vector<Document>& docs,
                                     const LabelScheme& scheme) {
  std::vector<Instance> out;
  for (const Document& doc : docs) {
    for (auto& tokens : sentence_tokens(doc.text)) {
      TaggedSentence tagged = to_bio(tokens, doc.mentions);
      Instance inst;
      inst.tokens = std::move(tagged.tokens);
      inst.tags.reserve(inst.tokens.size());
      for (const std::string& tag : tagged.tags) {
        inst.tags.push_back(scheme.index_of(tag));
      }
      out.push_back(std::move(inst));
    }
  }
  return out;
}

std::vector<std::string> collect_classes(
    const std::vector<Document>& train_docs,
    const std::vector<Document>& dev_docs) {
  std::set<std::string> classes;
  for (const auto* docs : {&train_docs, &dev_docs}) {
    for (const Document& doc : *docs) {
      for (const Mention& m : doc.mentions) classes.insert(m.label);
    }
  }
  return {classes.begin(), classes.end()};
}

}  // namespace

void CrfTagger::build(FrequencyTable freqs, Rng& rng) {
  features_ = std::make_unique<FeatureExtractor>(
      config_.features, std::move(freqs), *store_, rng);
  const std::size_t k = scheme_.k();
  const std::size_t feat_dim = features_->output_dim();
  emission_w_ = store_->create_glorot("crf.emission.w", {k, feat_dim}, rng);
  emission_b_ = store_->create_zeros("crf.emission.b", {k});

  std::vector<double> trans((k + 2) * (k + 2), 0.0);
  for (const auto& [from, to] : scheme_.forbidden_pairs()) {
    trans[from * (k + 2) + to] = kForbiddenScore;
  }
  transitions_ = store_->create("crf.transitions", {k + 2, k + 2},
                                std::move(trans));
}

void CrfTagger::repin_forbidden() {
  const std::size_t k = scheme_.k();
  auto& data = transitions_.mutable_data();
  for (const auto& [from, to] : scheme_.forbidden_pairs()) {
    data[from * (k + 2) + to] = kForbiddenScore;
  }
}

Tensor CrfTagger::sentence_nll(const std::vector<Token>& tokens,
                               const std::vector<std::size_t>& tags,
                               bool training, Rng* dropout_rng) const {
  const Tensor feats = features_->encode(tokens, training, dropout_rng);
  const Tensor emissions = emission_scores(feats, emission_w_, emission_b_);
  return nll_loss(emissions, transitions_, tags, scheme_);
}

CrfTagger CrfTagger::train(const std::vector<Document>& train_docs,
                           const std::vector<Document>& dev_docs,
                           const CrfTrainConfig& config,
                           const EpochCallback& on_epoch) {
  if (train_docs.empty()) throw ConfigError("empty training corpus");

  CrfTagger model;
  model.config_ = config;
  model.scheme_ = LabelScheme::bio(collect_classes(train_docs, dev_docs));
  model.store_ = std::make_unique<ParameterStore>();

  Rng rng(config.schedule.seed);
  model.build(build_frequency_table(train_docs), rng);

  const std::vector<Instance> train_insts =
      make_instances(train_docs, model.scheme_);
  const std::vector<Instance> dev_insts =
      make_instances(dev_docs, model.scheme_);
  if (train_insts.empty()) {
    throw ConfigError("training corpus contains no sentences");
  }

  Optimizer opt(SgdSpec{config.schedule.lr});
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
        Tensor nll = model.sentence_nll(inst.tokens, inst.tags, true, &rng);
        batch_loss = i == at ? nll : add(batch_loss, nll);
      }
      batch_loss = scale(batch_loss, 1.0 / static_cast<double>(stop - at));
      epoch_loss += batch_loss.item() * static_cast<double>(stop - at);
      backward(batch_loss);
      opt.step(*model.store_);
      model.repin_forbidden();
    }
    epoch_loss /= static_cast<double>(train_insts.size());

    double dev_loss = epoch_loss;
    if (!dev_insts.empty()) {
      dev_loss = 0.0;
      for (const Instance& inst : dev_insts) {
        dev_loss += model.sentence_nll(inst.tokens, inst.tags, false, nullptr)
                        .item();
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

std::vector<Mention> CrfTagger::predict(const Document& doc) const {
  const std::u32string text = utf8::decode(doc.text);
  std::vector<Mention> mentions;
  for (const auto& tokens : sentence_tokens(doc.text)) {
    const Tensor feats = features_->encode(tokens, false, nullptr);
    const Tensor emissions = emission_scores(feats, emission_w_, emission_b_);
    const ViterbiResult best = viterbi_decode(emissions, transitions_);

    TaggedSentence tagged;
    tagged.tokens = tokens;
    tagged.tags.reserve(best.tags.size());
    for (std::size_t id : best.tags) {
      tagged.tags.push_back(scheme_.labels()[id]);
    }
    for (Mention& m : from_bio(tagged, text)) {
      mentions.push_back(std::move(m));
    }
  }
  std::sort(mentions.begin(), mentions.end(),
            [](const Mention& a, const Mention& b) {
              return std::tie(a.start, a.end) < std::tie(b.start, b.end);
            });
  return mentions;
}

void CrfTagger::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  store_->save(dir / "params.bin");
  save_frequency_table(features_->stack().frequencies(), dir / "freqs.tsv");
  write_json_file(dir / "manifest.json",
                  {
                      {"kind", "crf"},
                      {"classes", scheme_.classes()},
                      {"features", feature_config_to_json(config_.features)},
                      {"schedule", schedule_to_json(config_.schedule)},
                  });
}

CrfTagger CrfTagger::load(const std::filesystem::path& dir) {
  const nlohmann::json manifest = read_json_file(dir / "manifest.json");
  if (manifest.at("kind").get<std::string>() != "crf") {
    throw ConfigError(dir.string() + " does not hold a sequence-tagger model");
  }

  CrfTagger model;
  model.config_.features = feature_config_from_json(manifest.at("features"));
  model.config_.schedule = schedule_from_json(manifest.at("schedule"));
  model.scheme_ = LabelScheme::bio(
      manifest.at("classes").get<std::vector<std::string>>());
  model.store_ = std::make_unique<ParameterStore>();

  Rng rng(model.config_.schedule.seed);
  model.build(load_frequency_table(dir / "freqs.tsv"), rng);
  model.store_->load(dir / "params.bin");
  return model;
}

}  // namespace nlnde
