#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "spkid/classifiers.hpp"
#include "spkid/features.hpp"
#include "spkid/fusion.hpp"
#include "spkid/gmm.hpp"

namespace spkid {

struct SplitConfig {
  int n_train = 8;
  int n_test = 2;
  std::uint64_t seed = 1;
  // Keep utterances flagged `shared_text` out of the test split.
  bool exclude_shared_from_test = false;
};

// Every tunable of the pipeline. Missing keys in a config document keep
// these defaults; unknown keys are rejected.
struct ToolkitConfig {
  FrontendConfig frontend;
  EmConfig em;
  MapConfig map;
  SupervectorOptions supervector;
  SvmConfig svm;
  NbConfig nb;
  FusionWeights fusion;
  FusionRule fusion_rule = FusionRule::kSum;
  SplitConfig split;
  std::filesystem::path cache_dir;  // empty disables the on-disk cache

  void validate() const;

  // Sets the EM, SVM and split seeds from one master seed.
  void apply_seed(std::uint64_t seed);
};

nlohmann::json to_json(const ToolkitConfig& cfg);
ToolkitConfig config_from_json(const nlohmann::json& doc);
ToolkitConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const FrontendConfig& cfg);
nlohmann::json to_json(const EmConfig& cfg);

std::uint64_t hash_of(const EmConfig& cfg);
std::uint64_t hash_of(const MapConfig& cfg, const SupervectorOptions& opts);
std::uint64_t hash_of(const ToolkitConfig& cfg);

}  // namespace spkid
