#include "nlnde/features.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "nlnde/errors.hpp"
#include "nlnde/utf8.hpp"

namespace nlnde {

std::u32string alphabet_from(const FrequencyTable& freqs) {
  std::set<char32_t> chars;
  for (const auto& [word, count] : freqs) {
    for (char32_t c : utf8::decode(word)) chars.insert(c);
  }
  return std::u32string(chars.begin(), chars.end());
}

std::shared_ptr<EmbeddingProvider> make_provider(
    const std::string& spec, const std::string& name,
    const std::vector<std::string>& vocab, const std::u32string& alphabet,
    ParameterStore& store, Rng& rng) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);

  if (kind == "trainable" || kind == "char") {
    std::size_t dim = 0;
    std::istringstream in(rest);
    if (!(in >> dim) || !in.eof() || dim == 0) {
      throw ConfigError("bad provider spec '" + spec +
                        "': expected a positive size after '" + kind + ":'");
    }
    if (kind == "trainable") {
      return std::make_shared<TrainableTableProvider>(name, dim, vocab, store,
                                                      rng);
    }
    return std::make_shared<CharBiLstmProvider>(name, dim, alphabet, store,
                                                rng);
  }
  if (kind == "file") {
    if (rest.empty()) {
      throw ConfigError("bad provider spec '" + spec + "': missing path");
    }
    OovPolicy policy = OovPolicy::kZero;
    if (rest.size() > 4 && rest.ends_with(":unk")) {
      policy = OovPolicy::kTrainedUnk;
      rest.resize(rest.size() - 4);
    }
    auto provider = load_vectors(rest, policy);
    if (policy == OovPolicy::kTrainedUnk) provider->attach_unk(store, rng);
    return provider;
  }
  throw ConfigError("unknown provider kind in spec '" + spec +
                    "' (expected trainable:, char:, or file:)");
}

FeatureExtractor::FeatureExtractor(const FeatureConfig& config,
                                   FrequencyTable freqs, ParameterStore& store,
                                   Rng& rng)
    : config_(config) {
  if (config_.provider_specs.empty()) {
    throw ConfigError("no embedding providers configured");
  }
  std::vector<std::string> vocab;
  vocab.reserve(freqs.size());
  for (const auto& [word, count] : freqs) vocab.push_back(word);
  const std::u32string alphabet = alphabet_from(freqs);

  std::vector<std::shared_ptr<EmbeddingProvider>> providers;
  for (std::size_t i = 0; i < config_.provider_specs.size(); ++i) {
    providers.push_back(make_provider(config_.provider_specs[i],
                                      "emb" + std::to_string(i), vocab,
                                      alphabet, store, rng));
  }
  stack_ = std::make_unique<EmbeddingStack>(
      std::move(providers), config_.combine, std::move(freqs), store, rng);

  BiLstmConfig enc;
  enc.layers = config_.layers;
  enc.hidden = config_.hidden;
  enc.input_dim = stack_->output_dim();
  enc.inter_layer_dropout = config_.dropout;
  encoder_ = std::make_unique<BiLstmEncoder>(enc, store, rng);
}

Tensor FeatureExtractor::encode(const std::vector<Token>& tokens, bool training,
                                Rng* dropout_rng) const {
  if (tokens.empty()) throw ContractError("cannot encode an empty sentence");
  return encoder_->encode(stack_->embed_sentence(tokens), training,
                          dropout_rng);
}

void save_frequency_table(const FrequencyTable& freqs,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write: " + path.string());
  for (const auto& [word, count] : freqs) out << word << '\t' << count << '\n';
}

FrequencyTable load_frequency_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open: " + path.string());
  FrequencyTable freqs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(line_no, "expected 'word<TAB>count'");
    }
    try {
      freqs[line.substr(0, tab)] = std::stoull(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad count in frequency table");
    }
  }
  return freqs;
}

}  // namespace nlnde
