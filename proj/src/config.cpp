#include "nlnde/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "nlnde/errors.hpp"

namespace nlnde {

namespace {

std::string trim(const std::string& s) {
  const auto from = s.find_first_not_of(" \t\r");
  if (from == std::string::npos) return "";
  const auto to = s.find_last_not_of(" \t\r");
  return s.substr(from, to - from + 1);
}

std::string env_name(const std::string& key) {
  std::string out = "NLNDE_";
  for (char c : key) {
    out += c == '.' ? '_' : static_cast<char>(std::toupper(
                                static_cast<unsigned char>(c)));
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  if (!(in >> out) || !in.eof()) {
    throw ConfigError("bad value '" + value + "' for key '" + key + "'");
  }
  return out;
}

std::vector<std::string> split_commas(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "train_dir",        "dev_dir",
      "test_dir",         "model_dir",
      "output_dir",       "submission",
      "preset",           "embedding.providers",
      "encoder.layers",   "encoder.hidden",
      "encoder.dropout",  "span.dim",
      "span.max_len",     "train.epochs",
      "train.batch_size", "train.lr",
      "train.anneal_patience", "train.anneal_factor",
      "seed",             "jobs",
  };
  return keys;
}

std::map<std::string, std::string> read_config_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key=value, got '" + line + "'");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void merge_env_overrides(std::map<std::string, std::string>& kv) {
  for (const std::string& key : known_config_keys()) {
    if (const char* value = std::getenv(env_name(key).c_str())) {
      kv[key] = value;
    }
  }
}

PipelineConfig resolve_config(const std::map<std::string, std::string>& kv) {
  const auto& keys = known_config_keys();
  for (const auto& [key, value] : kv) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  const auto get = [&](const std::string& key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };

  PipelineConfig config;
  if (const auto* v = get("preset")) config.preset = *v;
  if (config.preset != "test-small" && config.preset != "crf-paper" &&
      config.preset != "biaffine-paper") {
    throw ConfigError("unknown preset '" + config.preset +
                      "' (expected test-small, crf-paper or biaffine-paper)");
  }
  if (const auto* v = get("submission")) config.submission = *v;
  if (config.submission != "S1" && config.submission != "S2" &&
      config.submission != "S3" && config.submission != "S4" &&
      config.submission != "S5") {
    throw ConfigError("unknown submission '" + config.submission +
                      "' (expected S1..S5)");
  }

  // Preset-dependent defaults; explicit keys win.
  if (config.preset == "test-small") {
    config.layers = 2;
    config.hidden = 16;
    config.span_dim = 16;
    config.providers = {"trainable:16", "char:8"};
    // Tiny corpora see few optimizer steps per epoch; smaller batches keep
    // the step count useful at this scale.
    config.batch_size = 2;
  } else if (config.preset == "crf-paper") {
    config.layers = 3;
    config.hidden = 128;
    config.span_dim = 150;
    config.providers = {"trainable:64", "char:32"};
  } else {  // biaffine-paper
    config.layers = 5;
    config.hidden = 200;
    config.span_dim = 150;
    config.providers = {"trainable:64", "char:32"};
  }

  if (const auto* v = get("train_dir")) config.train_dir = *v;
  if (const auto* v = get("dev_dir")) config.dev_dir = *v;
  if (const auto* v = get("test_dir")) config.test_dir = *v;
  if (const auto* v = get("model_dir")) config.model_dir = *v;
  if (const auto* v = get("output_dir")) config.output_dir = *v;
  if (const auto* v = get("embedding.providers")) {
    config.providers = split_commas(*v);
    if (config.providers.empty()) {
      throw ConfigError("embedding.providers is empty");
    }
  }
  if (const auto* v = get("encoder.layers")) {
    config.layers = parse_number<std::size_t>("encoder.layers", *v);
  }
  if (const auto* v = get("encoder.hidden")) {
    config.hidden = parse_number<std::size_t>("encoder.hidden", *v);
  }
  if (const auto* v = get("encoder.dropout")) {
    config.dropout = parse_number<double>("encoder.dropout", *v);
  }
  if (const auto* v = get("span.dim")) {
    config.span_dim = parse_number<std::size_t>("span.dim", *v);
  }
  if (const auto* v = get("span.max_len")) {
    config.max_span_len = parse_number<std::size_t>("span.max_len", *v);
  }
  if (const auto* v = get("train.epochs")) {
    config.epochs = parse_number<std::size_t>("train.epochs", *v);
  }
  if (const auto* v = get("train.batch_size")) {
    config.batch_size = parse_number<std::size_t>("train.batch_size", *v);
  }
  if (const auto* v = get("train.lr")) {
    config.lr = parse_number<double>("train.lr", *v);
  }
  if (const auto* v = get("train.anneal_patience")) {
    config.anneal_patience =
        parse_number<std::size_t>("train.anneal_patience", *v);
  }
  if (const auto* v = get("train.anneal_factor")) {
    config.anneal_factor = parse_number<double>("train.anneal_factor", *v);
  }
  if (const auto* v = get("seed")) {
    config.seed = parse_number<std::uint64_t>("seed", *v);
  }
  if (const auto* v = get("jobs")) {
    config.jobs = parse_number<std::size_t>("jobs", *v);
  }
  if (config.layers == 0 || config.hidden == 0 || config.span_dim == 0 ||
      config.batch_size == 0 || config.max_span_len == 0) {
    throw ConfigError("sizes must be positive");
  }
  return config;
}

bool submission_uses_crf(const std::string& submission) {
  return submission == "S1" || submission == "S2";
}
bool submission_uses_spans(const std::string& submission) {
  return submission == "S3" || submission == "S4";
}
bool submission_is_ensemble(const std::string& submission) {
  return submission == "S5";
}

FeatureConfig feature_config_for(const PipelineConfig& config,
                                 const std::string& submission) {
  FeatureConfig features;
  features.provider_specs = config.providers;
  features.combine =
      submission == "S2" ? CombineMode::kMeta : CombineMode::kConcat;
  features.layers = config.layers;
  features.hidden = config.hidden;
  features.dropout = config.dropout;
  return features;
}

CrfTrainConfig crf_train_config(const PipelineConfig& config,
                                const std::string& submission) {
  CrfTrainConfig out;
  out.features = feature_config_for(config, submission);
  out.schedule.epochs = config.epochs;
  out.schedule.batch_size = config.batch_size;
  out.schedule.lr = config.lr > 0.0 ? config.lr : 0.1;
  out.schedule.anneal_patience = config.anneal_patience;
  out.schedule.anneal_factor = config.anneal_factor;
  out.schedule.seed = config.seed;
  return out;
}

BiaffineTrainConfig biaffine_train_config(const PipelineConfig& config) {
  BiaffineTrainConfig out;
  out.features = feature_config_for(config, config.submission);
  out.schedule.epochs = config.epochs;
  out.schedule.batch_size = config.batch_size;
  out.schedule.lr = config.lr > 0.0 ? config.lr : 1e-3;
  out.schedule.anneal_patience = config.anneal_patience;
  out.schedule.anneal_factor = config.anneal_factor;
  out.schedule.seed = config.seed;
  out.span_dim = config.span_dim;
  out.max_span_len = config.max_span_len;
  return out;
}

}  // namespace nlnde
