#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "boweldet/layers.hpp"

namespace boweldet {

enum class HeadKind { classifier, regressor };

struct ModelConfig {
    std::size_t input_rows = 126;
    std::size_t input_mels = 64;
    std::vector<std::size_t> conv_filters{8, 16, 16};
    std::pair<std::size_t, std::size_t> kernel{3, 3};
    std::pair<std::size_t, std::size_t> pool{2, 2};
    /// Number of leading conv blocks followed by max-pooling; -1 means all.
    int pooled_blocks = -1;
    std::vector<std::size_t> dense_units{256, 256};
    HeadKind head = HeadKind::classifier;
    double dropout_p = 0.2;

    static ModelConfig classifier();
    static ModelConfig regressor();
    /// Architecture variants: "baseline", "bigger", "smaller", "increased_cnn_layers".
    static ModelConfig variant(const std::string& name, HeadKind head);
};

void to_json(nlohmann::json& j, const ModelConfig& cfg);
void from_json(const nlohmann::json& j, ModelConfig& cfg);

/// Layer list for `cfg`:
/// [conv+relu(+pool)] x filters -> flatten -> [dense+relu+dropout] x units -> head.
std::vector<LayerSpec> model_layers(const ModelConfig& cfg);

/// Throws InvalidConfig when the pooling chain underflows the input.
Network build_model(const ModelConfig& cfg, std::uint64_t seed);

struct ModelFile {
    Network network;
    std::string spectrogram_hash;
    nlohmann::json meta;
    std::vector<std::string> warnings;
};

/// Binary layout: "BWLDNET1", u64 LE header length, JSON header, then every
/// parameter as little-endian float32 in declaration order. The header
/// carries layer specs, parameter shapes, seed, spectrogram config hash and
/// an FNV-1a hash of the payload.
void save_model(const std::filesystem::path& path, const Network& net, const std::string& spectrogram_hash,
                const nlohmann::json& meta = nlohmann::json::object());

/// Throws CorruptModel on truncation or payload-hash mismatch. A differing
/// `expected_spectrogram_hash` is reported in `warnings`, not thrown.
ModelFile load_model(const std::filesystem::path& path,
                     const std::optional<std::string>& expected_spectrogram_hash = std::nullopt);

}  // namespace boweldet
