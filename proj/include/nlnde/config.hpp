#ifndef NLNDE_CONFIG_HPP
#define NLNDE_CONFIG_HPP

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nlnde/biaffine_tagger.hpp"
#include "nlnde/crf_tagger.hpp"

namespace nlnde {

// Resolved run configuration. Sources, in increasing precedence: preset
// defaults, config file, NLNDE_* environment variables, command-line flags.
struct PipelineConfig {
  std::filesystem::path train_dir;
  std::filesystem::path dev_dir;
  std::filesystem::path test_dir;
  std::filesystem::path model_dir = "models";
  std::filesystem::path output_dir = "out";
  std::string submission = "S1";  // S1..S5
  std::string preset = "test-small";

  std::vector<std::string> providers;  // embedding provider specs
  std::size_t layers = 0;
  std::size_t hidden = 0;
  double dropout = 0.1;
  std::size_t span_dim = 0;
  std::size_t max_span_len = 16;

  std::size_t epochs = 50;
  std::size_t batch_size = 8;
  double lr = 0.0;  // 0 = model-kind default (0.1 SGD / 1e-3 Adam)
  std::size_t anneal_patience = 3;
  double anneal_factor = 0.5;

  std::uint64_t seed = 1;
  std::size_t jobs = 1;
};

// Flat `key=value` lines; '#' starts a comment; later assignments win.
// ConfigError on unknown keys or unparseable values.
std::map<std::string, std::string> read_config_file(
    const std::filesystem::path& path);

// For every known key, NLNDE_<KEY> (uppercased, '.' -> '_') overrides.
void merge_env_overrides(std::map<std::string, std::string>& kv);

// Validates keys/values, applies the preset, and fills defaults.
PipelineConfig resolve_config(const std::map<std::string, std::string>& kv);

const std::vector<std::string>& known_config_keys();

// Submission wiring: S1 = flat tagger + concatenated embeddings, S2 = flat
// tagger + attention meta-embeddings, S3 = span tagger, S4 = span tagger
// trained on train+dev, S5 = 2-of-3 vote over S1/S2/S3.
bool submission_uses_crf(const std::string& submission);      // S1, S2
bool submission_uses_spans(const std::string& submission);    // S3, S4
bool submission_is_ensemble(const std::string& submission);   // S5

FeatureConfig feature_config_for(const PipelineConfig& config,
                                 const std::string& submission);
CrfTrainConfig crf_train_config(const PipelineConfig& config,
                                const std::string& submission);
BiaffineTrainConfig biaffine_train_config(const PipelineConfig& config);

}  // namespace nlnde

#endif  // NLNDE_CONFIG_HPP
