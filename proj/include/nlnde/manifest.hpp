#ifndef NLNDE_MANIFEST_HPP
#define NLNDE_MANIFEST_HPP

#include <filesystem>

#include "json.hpp"
#include "nlnde/features.hpp"
#include "nlnde/training.hpp"

namespace nlnde {

// Model directories hold a binary parameter checkpoint plus a JSON manifest
// with everything needed to rebuild the network before loading it.
nlohmann::json feature_config_to_json(const FeatureConfig& config);
FeatureConfig feature_config_from_json(const nlohmann::json& j);
nlohmann::json schedule_to_json(const TrainSchedule& schedule);
TrainSchedule schedule_from_json(const nlohmann::json& j);

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace nlnde

#endif  // NLNDE_MANIFEST_HPP
