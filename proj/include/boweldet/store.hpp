#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "boweldet/dataset.hpp"
#include "boweldet/spectrogram.hpp"

namespace boweldet {

struct StoreEntry {
    std::string id;
    std::filesystem::path audio_path;
    std::size_t row_offset = 0;
    std::size_t rows = 0;
    double duration_s = 0.0;
    std::vector<SoundEvent> events;  // as annotated, unfiltered
};

struct SkipEntry {
    std::string path;
    std::string reason;
};

/// All recordings' normalized spectrograms concatenated along time.
///
/// On disk:
///   spectrograms.bin   little-endian float32, row-major [total_rows x n_mels]
///   spectrograms.json  {"rows", "cols", "time_bins_per_s", "config_hash"}
///   manifest.json      config, per-recording row ranges and events, skip list
struct SpectrogramStore {
    SpectrogramConfig config;
    std::string config_hash;
    int n_mels = 0;
    int time_bins_per_s = 0;
    std::vector<float> values;
    std::vector<StoreEntry> entries;
    std::vector<SkipEntry> skipped;

    std::size_t total_rows() const { return n_mels ? values.size() / static_cast<std::size_t>(n_mels) : 0; }
    const StoreEntry* find(const std::string& id) const;
    RecordingView view(const StoreEntry& entry, const EventFilter& filter) const;
    /// Views for `ids` in the given order; unknown ids throw EvaluationError.
    std::vector<RecordingView> views(const std::vector<std::string>& ids, const EventFilter& filter) const;
    std::vector<AnnotatedRecording> annotated(const EventFilter& filter) const;
};

void save_store(const std::filesystem::path& dir, const SpectrogramStore& store);
SpectrogramStore load_store(const std::filesystem::path& dir);

}  // namespace boweldet
