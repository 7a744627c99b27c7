#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "haptest/exploration.hpp"
#include "haptest/features.hpp"
#include "haptest/rng.hpp"

namespace haptest {

struct CampaignSettings {
    int trials_per_pair = 25;
    std::uint64_t seed = 12345;
    int jobs = 0;  // 0 = hardware concurrency
};

struct LearningSettings {
    int folds = 4;
    int repetitions = 100;
    int clusters = 20;
    int clustering_repetitions = 40;
    std::uint64_t seed = 7;
};

/// Full experiment description. All seeds are explicit; a config and a seed
/// determine every output byte.
struct ExperimentConfig {
    RobotParams robot;
    EstimatorTuning estimator;
    double kp = 1000.0;
    double kd = 200.0;
    double sat_limit = 50.0;
    ActionSpec tapping = ActionSpec::tapping();
    ActionSpec indentation = ActionSpec::indentation();
    ActionSpec sliding = ActionSpec::sliding();
    CampaignSettings campaign;
    LearningSettings learning;
    std::vector<Schema> schemas{Schema::MP, Schema::SF, Schema::CSSF};
    std::string catalog_file;  // empty = built-in catalog
    bool sf_full36 = false;

    TrialConfig trial_config() const;
    std::vector<ActionSpec> actions() const;
    Catalog catalog() const;
    void validate() const;

    /// Canonical key-value dump; also the digest input.
    std::string dump() const;
    std::uint64_t digest() const { return fnv1a(dump()); }
};

ExperimentConfig default_config();

/// Parses the TOML-style key-value format produced by dump(). Unknown keys
/// and malformed values raise ConfigError with a section.key path.
ExperimentConfig parse_config(const std::string& text, const std::string& origin);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace haptest
