#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "stash/alignment.hpp"
#include "stash/imu_ingest.hpp"
#include "stash/movement_classifier.hpp"
#include "stash/path_model.hpp"
#include "stash/pipeline.hpp"
#include "stash/threshold_manager.hpp"
#include "stash/turn_detector.hpp"

namespace stash {

/// Every tunable in one place.
struct Config {
    std::uint64_t seed = 42;
    double alpha = kDefaultAlpha;
    int max_attempts = 10;
    double path_length_min = 2.0;
    int between_samples = 200;
    PipelineConfig pipeline;
    HmmParams hmm;
    ScoringScheme scoring;
    NoiseModel noise;
};

/// TOML with optional top-level keys seed, alpha, max_attempts, path_length_min
/// and tables [sampling], [gravity], [detector], [hmm], [scoring], [noise],
/// [repository]. Unknown keys and wrong types throw ConfigError.
Config parse_config(const std::string& toml_text, const std::string& source = "config");
Config load_config(const std::filesystem::path& path);

/// The defaults rendered as TOML.
std::string default_config_toml();

} // namespace stash
