#include "nlnde/manifest.hpp"

#include <fstream>

#include "nlnde/errors.hpp"

namespace nlnde {

nlohmann::json feature_config_to_json(const FeatureConfig& config) {
  return {
      {"providers", config.provider_specs},
      {"combine", config.combine == CombineMode::kMeta ? "meta" : "concat"},
      {"layers", config.layers},
      {"hidden", config.hidden},
      {"dropout", config.dropout},
  };
}

FeatureConfig feature_config_from_json(const nlohmann::json& j) {
  FeatureConfig config;
  config.provider_specs = j.at("providers").get<std::vector<std::string>>();
  const std::string combine = j.at("combine").get<std::string>();
  if (combine == "meta") {
    config.combine = CombineMode::kMeta;
  } else if (combine == "concat") {
    config.combine = CombineMode::kConcat;
  } else {
    throw ConfigError("unknown combine mode '" + combine + "' in manifest");
  }
  config.layers = j.at("layers").get<std::size_t>();
  config.hidden = j.at("hidden").get<std::size_t>();
  config.dropout = j.at("dropout").get<double>();
  return config;
}

nlohmann::json schedule_to_json(const TrainSchedule& schedule) {
  return {
      {"epochs", schedule.epochs},
      {"batch_size", schedule.batch_size},
      {"lr", schedule.lr},
      {"anneal_patience", schedule.anneal_patience},
      {"anneal_factor", schedule.anneal_factor},
      {"seed", schedule.seed},
  };
}

TrainSchedule schedule_from_json(const nlohmann::json& j) {
  TrainSchedule schedule;
  schedule.epochs = j.at("epochs").get<std::size_t>();
  schedule.batch_size = j.at("batch_size").get<std::size_t>();
  schedule.lr = j.at("lr").get<double>();
  schedule.anneal_patience = j.at("anneal_patience").get<std::size_t>();
  schedule.anneal_factor = j.at("anneal_factor").get<double>();
  schedule.seed = j.at("seed").get<std::uint64_t>();
  return schedule;
}

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write: " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open: " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("bad JSON in ") + path.string() + ": " +
                     e.what());
  }
}

}  // namespace nlnde
