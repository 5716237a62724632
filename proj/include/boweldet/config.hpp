#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "boweldet/dataset.hpp"
#include "boweldet/inference.hpp"
#include "boweldet/models.hpp"
#include "boweldet/spectrogram.hpp"
#include "boweldet/trainer.hpp"

namespace boweldet {

struct DatasetConfig {
    std::filesystem::path data_dir;
    std::array<double, 3> ratios{0.7, 0.2, 0.1};
    std::uint64_t split_seed = 42;
    EventFilter filter;
};

struct SweepGrid {
    std::vector<double> thresholds{0.9, 0.75, 0.5};
    std::vector<int> overlaps{1, 5, 10, 25};
    std::vector<double> vote_fractions{0.05, 0.1, 0.2, 0.4};
    std::vector<std::uint64_t> seeds{42, 43, 44, 45, 46};

    std::size_t cells() const { return thresholds.size() * overlaps.size() * vote_fractions.size(); }
};

/// Everything one run depends on. Values come from defaults, then a JSON
/// config file, then command-line flags.
struct RunConfig {
    SpectrogramConfig spectrogram;
    DatasetConfig dataset;
    ModelConfig classifier = ModelConfig::classifier();
    ModelConfig regressor = ModelConfig::regressor();
    TrainConfig train;
    PredictConfig predict;
    SweepGrid sweep;
    std::filesystem::path work_dir = "work";

    /// Derives model input shapes from the spectrogram and window settings and
    /// validates every section. Throws InvalidConfig / InvalidHyperparameter.
    void finalize();
    /// Hash of everything that affects outputs (paths excluded).
    std::string hash() const;
    /// Hash of the parts that determine trained weights (no predict/sweep).
    std::string training_hash() const;
};

void to_json(nlohmann::json& j, const RunConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, RunConfig& cfg);

RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace boweldet
